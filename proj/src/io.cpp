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

#include "qdyn/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

#include "qdyn/error.hpp"

namespace qdyn {
namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
    throw Error(ErrorKind::invalid_argument, "field '" + path + "': " + what);
}

template <typename T>
T read_field(const json& obj, const std::string& key, const std::string& path, T fallback) {
    const auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        field_error(path + key, e.what());
    }
}

const json& require_array(const json& obj, const std::string& key) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_array()) field_error(key, "expected an array");
    return *it;
}

json history_json(const std::vector<HistoryRecord>& history) {
    json arr = json::array();
    for (const auto& h : history) {
        arr.push_back(json{{"outer_iter", h.outer_iter},
                           {"D", h.D},
                           {"best_value", h.best_value},
                           {"mean_value", h.mean_value},
                           {"spread", h.spread}});
    }
    return arr;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_double17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << "tau_or_t,x,re,im,abs2\n";
    for (const auto& psi : traj.states) {
        const std::string t = format_double17(psi.time);
        for (std::size_t i = 0; i < psi.size(); ++i) {
            const auto a = psi.amplitudes[i];
            out << t << ',' << format_double17(psi.grid.x(i)) << ',' << format_double17(a.real()) << ','
                << format_double17(a.imag()) << ',' << format_double17(std::norm(a)) << '\n';
        }
    }
}

void write_spectrum_csv(std::ostream& out, const Spectrum& spec) {
    out << "n,energy\n";
    for (std::size_t n = 0; n < spec.size(); ++n) out << n << ',' << format_double(spec.energies[n]) << '\n';
}

void write_eigenstate_csv(std::ostream& out, const Spectrum& spec, std::size_t n) {
    out << "n,x,phi\n";
    const auto& phi = spec.eigenstates.at(n);
    for (std::size_t i = 0; i < phi.size(); ++i)
        out << n << ',' << format_double(spec.grid.x(i)) << ',' << format_double(phi[i]) << '\n';
}

void write_softmax_trace_csv(std::ostream& out, std::span<const double> energies, double tau_max, std::size_t points) {
    if (points < 2 || !(tau_max > 0.0))
        throw Error(ErrorKind::invalid_argument, "softmax trace needs tau_max > 0 and at least two points");
    out << "tau";
    for (std::size_t k = 0; k < energies.size(); ++k) out << ",p" << k;
    out << '\n';
    for (std::size_t r = 0; r < points; ++r) {
        const double tau = tau_max * static_cast<double>(r) / static_cast<double>(points - 1);
        out << format_double(tau);
        for (double p : occupation_probabilities(energies, tau)) out << ',' << format_double(p);
        out << '\n';
    }
}

json to_json(const OptimizationResult& result) {
    return json{{"best_position", result.best_position},
                {"best_value", result.best_value},
                {"evaluations_used", result.evaluations_used},
                {"budget_exhausted", result.budget_exhausted},
                {"seed", result.seed},
                {"mode", std::string(to_string(result.mode))},
                {"history", history_json(result.history)},
                {"eref_trace", result.eref_trace}};
}

void write_history_csv(std::ostream& out, const OptimizationResult& result) {
    out << "outer_iter,D,best_value,mean_value,spread\n";
    for (const auto& h : result.history) {
        out << h.outer_iter << ',' << format_double(h.D) << ',' << format_double(h.best_value) << ','
            << format_double(h.mean_value) << ',' << format_double(h.spread) << '\n';
    }
}

ExperimentPlan plan_from_json(const json& doc) {
    if (!doc.is_object()) field_error("<root>", "plan must be a JSON object");
    ExperimentPlan plan = ExperimentPlan::default_plan();

    if (doc.contains("functions")) {
        plan.functions.clear();
        const auto& arr = require_array(doc, "functions");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string path = "functions[" + std::to_string(i) + "].";
            const auto& f = arr[i];
            if (!f.is_object() || !f.contains("name")) field_error(path + "name", "missing function name");
            FunctionSpec spec;
            spec.name = read_field<std::string>(f, "name", path, "");
            spec.dimension = read_field<std::size_t>(f, "dim", path, 2);
            if (f.contains("threshold")) spec.threshold = read_field<double>(f, "threshold", path, 0.0);
            plan.functions.push_back(std::move(spec));
        }
    }
    if (doc.contains("modes")) {
        plan.modes.clear();
        const auto& arr = require_array(doc, "modes");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (!arr[i].is_string()) field_error("modes[" + std::to_string(i) + "]", "expected a string");
            plan.modes.push_back(sampler_mode_from_string(arr[i].get<std::string>()));
        }
    }
    if (doc.contains("schedules")) {
        plan.schedules.clear();
        const auto& arr = require_array(doc, "schedules");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string path = "schedules[" + std::to_string(i) + "].";
            const auto& s = arr[i];
            if (!s.is_object()) field_error(path, "expected an object");
            ScheduleSpec spec;
            spec.kind = read_field<std::string>(s, "kind", path, "annealed");
            spec.id = read_field<std::string>(s, "id", path, spec.kind);
            spec.schedule.d_initial = read_field<double>(s, "d_initial", path, spec.schedule.d_initial);
            spec.schedule.decay = read_field<double>(s, "decay", path, spec.schedule.decay);
            spec.schedule.d_min = read_field<double>(s, "d_min", path, spec.schedule.d_min);
            spec.schedule.inner_steps = read_field<std::size_t>(s, "inner_steps", path, spec.schedule.inner_steps);
            plan.schedules.push_back(std::move(spec));
        }
    }
    if (doc.contains("seeds")) {
        plan.seeds.clear();
        const auto& arr = require_array(doc, "seeds");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (!arr[i].is_number_unsigned()) field_error("seeds[" + std::to_string(i) + "]", "expected an unsigned integer");
            plan.seeds.push_back(arr[i].get<std::uint64_t>());
        }
    }
    plan.budget = read_field<std::size_t>(doc, "budget", "", plan.budget);
    if (doc.contains("optimizer")) {
        const auto& o = doc["optimizer"];
        if (!o.is_object()) field_error("optimizer", "expected an object");
        const std::string path = "optimizer.";
        auto& b = plan.base;
        b.dtau = read_field<double>(o, "dtau", path, b.dtau);
        b.n_walkers = read_field<std::size_t>(o, "n_walkers", path, b.n_walkers);
        b.target_walkers = read_field<std::size_t>(o, "target_walkers", path, b.target_walkers);
        b.eref_gain = read_field<double>(o, "eref_gain", path, b.eref_gain);
        b.fd_offset_factor = read_field<double>(o, "fd_offset_factor", path, b.fd_offset_factor);
        b.fd_min_offset = read_field<double>(o, "fd_min_offset", path, b.fd_min_offset);
        b.reseed_after_stage = read_field<bool>(o, "reseed_after_stage", path, b.reseed_after_stage);
        b.threads = read_field<std::size_t>(o, "threads", path, b.threads);
    }
    plan.validate();
    return plan;
}

json to_json(const ExperimentPlan& plan) {
    json functions = json::array();
    for (const auto& f : plan.functions) {
        json j{{"name", f.name}, {"dim", f.dimension}};
        if (f.threshold) j["threshold"] = *f.threshold;
        functions.push_back(j);
    }
    json modes = json::array();
    for (auto m : plan.modes) modes.push_back(std::string(to_string(m)));
    json schedules = json::array();
    for (const auto& s : plan.schedules) {
        json j{{"id", s.id}, {"kind", s.kind}};
        if (s.kind == "custom") {
            j["d_initial"] = s.schedule.d_initial;
            j["decay"] = s.schedule.decay;
            j["d_min"] = s.schedule.d_min;
            j["inner_steps"] = s.schedule.inner_steps;
        }
        schedules.push_back(j);
    }
    const auto& b = plan.base;
    return json{{"functions", functions},
                {"modes", modes},
                {"schedules", schedules},
                {"seeds", plan.seeds},
                {"budget", plan.budget},
                {"optimizer",
                 {{"dtau", b.dtau},
                  {"n_walkers", b.n_walkers},
                  {"target_walkers", b.target_walkers},
                  {"eref_gain", b.eref_gain},
                  {"fd_offset_factor", b.fd_offset_factor},
                  {"fd_min_offset", b.fd_min_offset},
                  {"reseed_after_stage", b.reseed_after_stage}}}};
}

json to_json(const ExperimentReport& report) {
    json cells = json::array();
    for (const auto& c : report.cells) {
        json rows = json::array();
        for (const auto& r : c.rows) {
            json row{{"seed", r.seed},
                     {"best_value", r.best_value},
                     {"best_position", r.best_position},
                     {"evaluations", r.evaluations},
                     {"success", r.success},
                     {"budget_exhausted", r.budget_exhausted}};
            if (!r.error.empty()) row["error"] = r.error;
            rows.push_back(row);
        }
        json cell{{"function", c.function},
                  {"dim", c.dimension},
                  {"mode", std::string(to_string(c.mode))},
                  {"schedule_id", c.schedule_id},
                  {"threshold", c.threshold},
                  {"success_rate", c.success_rate},
                  {"median_best_value", c.median_best_value},
                  {"median_evaluations_to_threshold", nullptr},
                  {"rows", rows}};
        if (c.median_evaluations_to_threshold) cell["median_evaluations_to_threshold"] = *c.median_evaluations_to_threshold;
        cells.push_back(cell);
    }
    return json{{"cells", cells}};
}

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
    out << "function,dim,mode,schedule_id,seed,best_value,evaluations,success\n";
    for (const auto& c : report.cells) {
        for (const auto& r : c.rows) {
            out << c.function << ',' << c.dimension << ',' << to_string(c.mode) << ',' << c.schedule_id << ',' << r.seed
                << ',' << format_double(r.best_value) << ',' << r.evaluations << ',' << (r.success ? 1 : 0) << '\n';
        }
    }
}

PotentialGrid potential_from_csv(std::istream& in, const Grid& grid) {
    std::vector<std::pair<double, double>> table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw Error(ErrorKind::invalid_argument, "potential csv line " + std::to_string(lineno) + ": expected x,value");
        try {
            std::size_t used = 0;
            const double x = std::stod(line.substr(0, comma), &used);
            const double v = std::stod(line.substr(comma + 1));
            table.emplace_back(x, v);
        } catch (const std::invalid_argument&) {
            if (table.empty() && lineno == 1) continue;  // header row
            throw Error(ErrorKind::invalid_argument, "potential csv line " + std::to_string(lineno) + ": not numeric");
        }
    }
    if (table.size() < 2) throw Error(ErrorKind::invalid_argument, "potential csv needs at least two rows");
    std::sort(table.begin(), table.end());
    return discretize_potential(
        [&](double x) {
            if (x < table.front().first || x > table.back().first) return std::numeric_limits<double>::quiet_NaN();
            auto hi = std::lower_bound(table.begin(), table.end(), std::make_pair(x, -std::numeric_limits<double>::infinity()));
            if (hi == table.begin()) return hi->second;
            auto lo = std::prev(hi);
            if (hi == table.end()) return lo->second;
            const double t = (x - lo->first) / (hi->first - lo->first);
            return lo->second + t * (hi->second - lo->second);
        },
        grid);
}

json parse_json_text(const std::string& text, const std::string& source_name) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // Byte offset -> line/column.
        std::size_t line = 1, col = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream msg;
        msg << source_name << ":" << line << ":" << col << ": malformed JSON (" << e.what() << ")";
        throw Error(ErrorKind::invalid_argument, msg.str());
    }
}

}  // namespace qdyn
