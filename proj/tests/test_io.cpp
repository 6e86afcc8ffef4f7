// Copyright 2026 The qdyn Authors
//
//    Licensed under the Apache License, Version 2.0 (the "License");
//    you may not use this file except in compliance with the License.
//    You may obtain a copy of the License at
//
//        http://www.apache.org/licenses/LICENSE-2.0
//
//    Unless required by applicable law or agreed to in writing, software
//    distributed under the License is distributed on an "AS IS" BASIS,
//    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//    See the License for the specific language governing permissions and
//    limitations under the License.

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "qdyn/error.hpp"
#include "qdyn/io.hpp"

using namespace qdyn;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::string error_message(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("double formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1.0}) {
        CHECK(std::stod(format_double(v)) == v);
        CHECK(std::stod(format_double17(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_double17(0.1) == "0.10000000000000001");
}

TEST_CASE("trajectory csv layout") {
    const Grid g = build_grid(-1.0, 1.0, 5);
    EvolutionConfig cfg;
    cfg.mode = TimeMode::imaginary;
    cfg.dt = 0.01;
    cfg.n_steps = 3;
    const auto traj = evolve(gaussian_packet(g, 0.0, 0.5), zero_potential(g), cfg);
    std::ostringstream out;
    write_trajectory_csv(out, traj);
    const auto lines = lines_of(out.str());
    REQUIRE(lines.size() == 1 + 2 * 5);
    CHECK(lines[0] == "tau_or_t,x,re,im,abs2");
    CHECK(lines[1].rfind("0,-1,", 0) == 0);
    CHECK(lines[6].rfind("0.029999999999999999,-1,", 0) == 0);

    std::istringstream row(lines[8]);
    std::vector<double> fields;
    for (std::string f; std::getline(row, f, ',');) fields.push_back(std::stod(f));
    REQUIRE(fields.size() == 5);
    CHECK(fields[1] == 0.0);
    CHECK(fields[2] == traj.final_state().amplitudes[2].real());
    CHECK(fields[4] == std::norm(traj.final_state().amplitudes[2]));
}

TEST_CASE("spectrum and softmax csv") {
    const Grid g = build_grid(-5.0, 5.0, 201);
    const auto spec = eigensolve(discretize_potential([](double x) { return x * x; }, g), 1.0, 3);
    std::ostringstream s;
    write_spectrum_csv(s, spec);
    auto lines = lines_of(s.str());
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "n,energy");
    CHECK(std::stod(lines[2].substr(2)) == spec.energies[1]);

    std::ostringstream e;
    write_eigenstate_csv(e, spec, 2);
    lines = lines_of(e.str());
    REQUIRE(lines.size() == 202);
    CHECK(lines[0] == "n,x,phi");
    CHECK(lines[1].rfind("2,-5,", 0) == 0);

    std::ostringstream t;
    const std::vector<double> E{0.0, 1.0, 2.0};
    write_softmax_trace_csv(t, E, 1.0, 3);
    lines = lines_of(t.str());
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "tau,p0,p1,p2");
    CHECK(lines[3].rfind("1,0.665240955", 0) == 0);
    CHECK_THROWS_AS(write_softmax_trace_csv(t, E, 0.0, 3), Error);
}

TEST_CASE("optimization result json and history csv") {
    OptimizationResult r;
    r.best_position = {0.25, -0.5};
    r.best_value = 0.3125;
    r.evaluations_used = 1234;
    r.seed = 7;
    r.mode = SamplerMode::drift;
    r.history = {{0, 4.0, 1.0, 2.0, 0.5}, {1, 2.0, 0.3125, 1.0, 0.25}};
    const auto j = to_json(r);
    for (const char* key : {"best_position", "best_value", "evaluations_used", "seed", "mode", "history", "eref_trace"})
        CHECK(j.contains(key));
    CHECK(j["mode"] == "drift");
    CHECK(j["history"][1]["D"] == 2.0);
    CHECK(j["history"][1]["outer_iter"] == 1);

    std::ostringstream h;
    write_history_csv(h, r);
    const auto lines = lines_of(h.str());
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "outer_iter,D,best_value,mean_value,spread");
    CHECK(lines[2] == "1,2,0.3125,1,0.25");
}

TEST_CASE("plan json round trip") {
    const auto text = R"({
        "functions": [{"name": "rastrigin", "dim": 3, "threshold": 0.5}],
        "modes": ["dmc", "drift"],
        "schedules": [{"id": "a", "kind": "annealed"},
                      {"id": "c", "kind": "custom", "d_initial": 2.0, "decay": 0.25, "d_min": 0.01, "inner_steps": 7}],
        "seeds": [5, 6],
        "budget": 9000,
        "optimizer": {"dtau": 0.1, "target_walkers": 32}
    })";
    const auto plan = plan_from_json(parse_json_text(text, "plan.json"));
    REQUIRE(plan.functions.size() == 1);
    CHECK(plan.functions[0].dimension == 3);
    CHECK(*plan.functions[0].threshold == 0.5);
    CHECK(plan.modes == std::vector<SamplerMode>{SamplerMode::dmc, SamplerMode::drift});
    CHECK(plan.schedules[1].schedule.inner_steps == 7);
    CHECK(plan.seeds == std::vector<std::uint64_t>{5, 6});
    CHECK(plan.budget == 9000);
    CHECK(plan.base.dtau == 0.1);
    CHECK(plan.base.target_walkers == 32);
    CHECK(plan.base.n_walkers == OptimizerConfig{}.n_walkers);

    const auto again = plan_from_json(to_json(plan));
    CHECK(to_json(again) == to_json(plan));

    const auto defaults = plan_from_json(json::object());
    CHECK(to_json(defaults) == to_json(ExperimentPlan::default_plan()));
}

TEST_CASE("plan errors name the offending field") {
    CHECK(error_message([] { plan_from_json(json::parse(R"({"functions": [{"name": "sphere", "dim": "two"}]})")); })
              .find("functions[0].dim") != std::string::npos);
    CHECK(error_message([] { plan_from_json(json::parse(R"({"seeds": [1, -2]})")); }).find("seeds[1]") !=
          std::string::npos);
    CHECK(error_message([] { plan_from_json(json::parse(R"({"optimizer": {"dtau": "fast"}})")); })
              .find("optimizer.dtau") != std::string::npos);
    CHECK(error_message([] { plan_from_json(json::parse(R"({"modes": "dmc"})")); }).find("modes") != std::string::npos);
    CHECK_THROWS_AS(plan_from_json(json::parse(R"({"modes": ["annealing"]})")), Error);
    CHECK_THROWS_AS(plan_from_json(json::parse("[]")), Error);
}

TEST_CASE("malformed json reports line and column") {
    const std::string text = "{\n  \"budget\": 10,\n  \"seeds\": [1, 2,,]\n}\n";
    const auto msg = error_message([&] { parse_json_text(text, "bad.json"); });
    CHECK(msg.find("bad.json:3:") != std::string::npos);
}

TEST_CASE("report csv and json") {
    ExperimentReport rep;
    CellReport cell;
    cell.function = "sphere";
    cell.dimension = 2;
    cell.mode = SamplerMode::dmc;
    cell.schedule_id = "annealed";
    cell.success_rate = 0.5;
    SeedRow ok{1, 0.001, {0.01, 0.03}, 500, true, false, ""};
    SeedRow bad{2, std::numeric_limits<double>::quiet_NaN(), {}, 0, false, false, "boom"};
    cell.rows = {ok, bad};
    rep.cells.push_back(cell);

    std::ostringstream out;
    write_report_csv(out, rep);
    const auto lines = lines_of(out.str());
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "function,dim,mode,schedule_id,seed,best_value,evaluations,success");
    CHECK(lines[1] == "sphere,2,dmc,annealed,1,0.001,500,1");
    CHECK(lines[2] == "sphere,2,dmc,annealed,2,nan,0,0");

    const auto j = to_json(rep);
    CHECK(j["cells"][0]["rows"][1]["error"] == "boom");
    CHECK(j["cells"][0]["median_evaluations_to_threshold"].is_null());
}

TEST_CASE("potential from csv") {
    const Grid g = build_grid(0.0, 2.0, 5);
    std::istringstream in("x,value\n0,0\n1,2\n2,0\n");
    const auto pot = potential_from_csv(in, g);
    CHECK(pot.values == std::vector<double>{0.0, 1.0, 2.0, 1.0, 0.0});

    std::istringstream narrow("0.5,1\n1.5,1\n");
    try {
        potential_from_csv(narrow, g);
        FAIL("expected non-finite-potential");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::non_finite_potential);
    }
    std::istringstream junk("0,1\nabc,2\n");
    CHECK_THROWS_AS(potential_from_csv(junk, g), Error);
}

TEST_CASE("bundled default plan matches the built-in plan") {
    std::ifstream in(QDYN_DATA_DIR "/default_plan.json");
    REQUIRE(in);
    std::stringstream buf;
    buf << in.rdbuf();
    const auto plan = plan_from_json(parse_json_text(buf.str(), "default_plan.json"));
    CHECK(to_json(plan) == to_json(ExperimentPlan::default_plan()));
}
