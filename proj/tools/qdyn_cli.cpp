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

// qdyn command-line driver.
//
// Exit codes: 0 success, 2 configuration or validation error, 3 numerical
// failure, 4 optimizer budget exhausted (result files are still written).
//
// Every option may also be given in a JSON file passed with --config. Keys are
// option names without the leading dashes ("dt", "x-min" or "x_min"). Keys may
// sit at the top level or inside a section named after the subcommand; the
// section wins. Command-line flags override the file, which overrides defaults.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qdyn/benchmark.hpp"
#include "qdyn/error.hpp"
#include "qdyn/evolution.hpp"
#include "qdyn/hamiltonian.hpp"
#include "qdyn/io.hpp"
#include "qdyn/sampler.hpp"
#include "qdyn/spectral.hpp"

namespace fs = std::filesystem;
using namespace qdyn;

namespace {

enum Exit : int { ok = 0, usage = 2, numerical = 3, exhausted = 4 };

template <typename T>
struct is_optional : std::false_type {};
template <typename T>
struct is_optional<std::optional<T>> : std::true_type {};

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::instability_detected:
        case ErrorKind::convergence_failure:
        case ErrorKind::empty_expansion:
        case ErrorKind::population_extinction:
            return numerical;
        case ErrorKind::budget_exhausted:
            return exhausted;
        default:
            return usage;
    }
}

// Binds options to variables and remembers how to fill them from JSON.
class OptionTable {
public:
    template <typename T>
    CLI::Option* add(CLI::App* app, const std::string& name, T& target, const std::string& help) {
        CLI::Option* opt = app->add_option("--" + name, target, help)->capture_default_str();
        entries_[app][name] = {opt, [&target, name](const json& j) {
                                   try {
                                       if constexpr (is_optional<T>::value)
                                           target = j.get<typename T::value_type>();
                                       else
                                           target = j.get<T>();
                                   } catch (const json::exception& e) {
                                       throw Error(ErrorKind::invalid_argument, "config field '" + name + "': " + e.what());
                                   }
                               }};
        return opt;
    }

    CLI::Option* add_flag(CLI::App* app, const std::string& name, bool& target, const std::string& help) {
        CLI::Option* opt = app->add_flag("--" + name, target, help);
        entries_[app][name] = {opt, [&target, name](const json& j) {
                                   if (!j.is_boolean())
                                       throw Error(ErrorKind::invalid_argument, "config field '" + name + "': expected a boolean");
                                   target = j.get<bool>();
                               }};
        return opt;
    }

    // Applies `doc` to options of `app` (and the global options) that were not given on the command line.
    void apply(const json& doc, CLI::App* global, CLI::App* app) const {
        if (!doc.is_object()) throw Error(ErrorKind::invalid_argument, "config root must be a JSON object");
        std::map<std::string, json> merged;
        for (const auto& [key, value] : doc.items()) {
            if (value.is_object() && is_subcommand_name(key, global)) continue;
            merged[normalize(key)] = value;
        }
        if (const auto it = doc.find(app->get_name()); it != doc.end() && it->is_object())
            for (const auto& [key, value] : it->items()) merged[normalize(key)] = value;

        for (const auto& [key, value] : merged) {
            const Entry* entry = find(app, key);
            if (entry == nullptr) entry = find(global, key);
            if (entry == nullptr) throw Error(ErrorKind::invalid_argument, "config field '" + key + "': unknown option");
            if (entry->option->count() == 0) entry->assign(value);
        }
    }

private:
    struct Entry {
        CLI::Option* option = nullptr;
        std::function<void(const json&)> assign;
    };

    static std::string normalize(std::string key) {
        std::replace(key.begin(), key.end(), '_', '-');
        return key;
    }

    static bool is_subcommand_name(const std::string& key, CLI::App* global) {
        for (const auto* sub : global->get_subcommands({})) {
            if (sub->get_name() == key) return true;
        }
        return false;
    }

    const Entry* find(CLI::App* app, const std::string& key) const {
        const auto a = entries_.find(app);
        if (a == entries_.end()) return nullptr;
        const auto e = a->second.find(key);
        return e == a->second.end() ? nullptr : &e->second;
    }

    std::map<CLI::App*, std::map<std::string, Entry>> entries_;
};

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::invalid_argument, "cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_json_text(buf.str(), path);
}

struct GridOptions {
    double x_min = -10.0;
    double x_max = 10.0;
    std::size_t points = 2001;

    void add(OptionTable& t, CLI::App* app) {
        t.add(app, "x-min", x_min, "left end of the grid");
        t.add(app, "x-max", x_max, "right end of the grid");
        t.add(app, "points", points, "number of grid points");
    }
};

struct PotentialOptions {
    std::string name = "harmonic";
    std::string csv;
    double strength = 1.0;
    double center = 0.0;
    double well = 1.0;

    void add(OptionTable& t, CLI::App* app) {
        t.add(app, "potential", name, "harmonic | double_well | free");
        t.add(app, "potential-csv", csv, "tabulated x,value potential (overrides --potential)");
        t.add(app, "strength", strength, "harmonic: s (x-c)^2; double_well: s (x^2-w^2)^2");
        t.add(app, "center", center, "harmonic centre c");
        t.add(app, "well", well, "double-well minimum w");
    }

    PotentialGrid build(const Grid& g) const {
        if (!csv.empty()) {
            std::ifstream in(csv);
            if (!in) throw Error(ErrorKind::invalid_argument, "cannot open potential file '" + csv + "'");
            return potential_from_csv(in, g);
        }
        if (name == "harmonic")
            return discretize_potential([&](double x) { return strength * (x - center) * (x - center); }, g);
        if (name == "double_well")
            return discretize_potential([&](double x) { return strength * std::pow(x * x - well * well, 2); }, g);
        if (name == "free") return zero_potential(g);
        throw Error(ErrorKind::invalid_argument, "unknown potential '" + name + "'");
    }
};

struct PacketOptions {
    double x0 = 0.0;
    double sigma = 1.0;
    double k0 = 0.0;

    void add(OptionTable& t, CLI::App* app) {
        t.add(app, "x0", x0, "initial packet centre");
        t.add(app, "sigma", sigma, "initial packet density width");
        t.add(app, "k0", k0, "initial packet wavenumber");
    }
};

struct Globals {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

// Files are only written once every computation has succeeded.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

    std::ostringstream& file(const std::string& name) { return files_[name]; }

    void commit() {
        fs::create_directories(dir_);
        for (const auto& [name, content] : files_) {
            std::ofstream out(dir_ / name, std::ios::binary);
            out << content.str();
            if (!out) throw Error(ErrorKind::invalid_argument, "cannot write '" + (dir_ / name).string() + "'");
        }
    }

private:
    fs::path dir_;
    std::map<std::string, std::ostringstream> files_;
};

void check_output_dir(const std::string& out) {
    std::error_code ec;
    const fs::path p(out);
    if (fs::exists(p, ec) && !fs::is_directory(p, ec))
        throw Error(ErrorKind::invalid_argument, "--out '" + out + "' is not a directory");
}

// ---------------------------------------------------------------- evolve

struct EvolveOptions {
    std::string mode = "imaginary";
    double D = 1.0;
    double dt = 1e-3;
    std::size_t steps = 1000;
    std::size_t sample_every = 0;
    bool no_renormalize = false;
    GridOptions grid;
    PotentialOptions potential;
    PacketOptions packet;

    void add(OptionTable& t, CLI::App* app) {
        t.add(app, "mode", mode, "real | imaginary");
        t.add(app, "D", D, "kinetic coefficient");
        t.add(app, "dt", dt, "time step");
        t.add(app, "steps", steps, "number of steps");
        t.add(app, "sample-every", sample_every, "keep every k-th state (0: first and last only)");
        t.add_flag(app, "no-renormalize", no_renormalize, "imaginary mode: skip per-step renormalization");
        grid.add(t, app);
        potential.add(t, app);
        packet.add(t, app);
    }
};

int run_evolve(const EvolveOptions& o, const Globals& g) {
    if (o.mode != "real" && o.mode != "imaginary") throw Error(ErrorKind::invalid_argument, "--mode must be real or imaginary");
    const Grid grid = build_grid(o.grid.x_min, o.grid.x_max, o.grid.points);
    const PotentialGrid pot = o.potential.build(grid);
    EvolutionConfig cfg;
    cfg.mode = o.mode == "real" ? TimeMode::real : TimeMode::imaginary;
    cfg.D = o.D;
    cfg.dt = o.dt;
    cfg.n_steps = o.steps;
    cfg.sample_every = o.sample_every;
    cfg.renormalize_each_step = !o.no_renormalize;
    cfg.validate();
    const WaveFunction psi0 = gaussian_packet(grid, o.packet.x0, o.packet.sigma, o.packet.k0);
    check_output_dir(g.out);

    const Trajectory traj = evolve(psi0, pot, cfg);
    const auto& final_state = traj.final_state();
    const double norm = final_state.norm_squared();
    const auto split = energy_decomposition(final_state, pot, cfg.D);

    OutputSet out(g.out);
    write_trajectory_csv(out.file("trajectory.csv"), traj);
    const json summary{{"mode", o.mode},
                       {"steps", o.steps},
                       {"time", final_state.time},
                       {"final_norm", norm},
                       {"energy", split.total},
                       {"kinetic", split.kinetic},
                       {"potential", split.potential},
                       {"warnings", traj.warnings}};
    out.file("summary.json") << summary.dump(2) << '\n';
    out.commit();
    if (!g.quiet) {
        std::cout << "norm " << format_double(norm) << "  energy " << format_double(split.total) << '\n';
        for (const auto& w : traj.warnings) std::cerr << "warning: " << w << '\n';
    }
    return ok;
}

// -------------------------------------------------------------- spectrum

struct SpectrumOptions {
    double D = 1.0;
    std::size_t levels = default_spectrum_levels;
    std::size_t states = 4;
    std::vector<double> softmax_trace;  // tau_max, k
    std::size_t trace_points = 101;
    GridOptions grid;
    PotentialOptions potential;

    void add(OptionTable& t, CLI::App* app) {
        t.add(app, "D", D, "kinetic coefficient");
        t.add(app, "levels", levels, "number of eigenpairs");
        t.add(app, "states", states, "write state_<n>.csv for the lowest n levels");
        t.add(app, "softmax-trace", softmax_trace, "TAU_MAX K: occupation trace over the lowest K levels")
            ->expected(2);
        t.add(app, "trace-points", trace_points, "rows in the softmax trace");
        grid.add(t, app);
        potential.add(t, app);
    }
};

int run_spectrum(const SpectrumOptions& o, const Globals& g) {
    const Grid grid = build_grid(o.grid.x_min, o.grid.x_max, o.grid.points);
    const PotentialGrid pot = o.potential.build(grid);
    if (!(o.D > 0.0)) throw Error(ErrorKind::invalid_argument, "--D must be positive");
    if (o.levels < 1 || o.levels > grid.size())
        throw Error(ErrorKind::invalid_argument, "--levels must lie in [1, points]");
    double tau_max = 0.0;
    std::size_t trace_levels = 0;
    if (!o.softmax_trace.empty()) {
        if (o.softmax_trace.size() != 2) throw Error(ErrorKind::invalid_argument, "--softmax-trace takes TAU_MAX K");
        tau_max = o.softmax_trace[0];
        const double k = o.softmax_trace[1];
        if (!(tau_max > 0.0) || !(k >= 1.0) || k != std::floor(k) || k > static_cast<double>(o.levels))
            throw Error(ErrorKind::invalid_argument, "--softmax-trace needs TAU_MAX > 0 and an integer K in [1, levels]");
        if (o.trace_points < 2) throw Error(ErrorKind::invalid_argument, "--trace-points must be >= 2");
        trace_levels = static_cast<std::size_t>(k);
    }
    check_output_dir(g.out);

    const Spectrum spec = eigensolve(pot, o.D, o.levels);
    OutputSet out(g.out);
    write_spectrum_csv(out.file("spectrum.csv"), spec);
    for (std::size_t n = 0; n < std::min(o.states, spec.size()); ++n)
        write_eigenstate_csv(out.file("state_" + std::to_string(n) + ".csv"), spec, n);
    if (trace_levels > 0) {
        const std::span<const double> energies(spec.energies.data(), trace_levels);
        write_softmax_trace_csv(out.file("softmax_trace.csv"), energies, tau_max, o.trace_points);
    }
    out.commit();
    if (!g.quiet)
        for (std::size_t n = 0; n < spec.size(); ++n) std::cout << "E" << n << " " << format_double(spec.energies[n]) << '\n';
    return ok;
}

// -------------------------------------------------------------- optimize

struct OptimizeOptions {
    std::string objective = "sphere";
    std::size_t dim = 2;
    std::string mode = "dmc";
    std::string schedule = "annealed";
    OptimizerConfig cfg;
    AnnealingSchedule custom;
    std::optional<double> d_initial, decay, d_min;
    std::optional<std::size_t> inner_steps;

    void add(OptionTable& t, CLI::App* app) {
        t.add(app, "objective", objective, "builtin function name");
        t.add(app, "dim", dim, "dimension");
        t.add(app, "mode", mode, "diffusion | drift | dmc");
        t.add(app, "schedule", schedule, "annealed | fixed_min");
        t.add(app, "dtau", cfg.dtau, "inner time step");
        t.add(app, "walkers", cfg.n_walkers, "initial walkers");
        t.add(app, "target-walkers", cfg.target_walkers, "dmc population target");
        t.add(app, "eref-gain", cfg.eref_gain, "dmc population-control gain");
        t.add(app, "fd-offset-factor", cfg.fd_offset_factor, "gradient probe offset / step scale");
        t.add(app, "fd-min-offset", cfg.fd_min_offset, "smallest gradient probe offset");
        t.add(app, "max-evals", cfg.max_evaluations, "evaluation budget");
        t.add(app, "threads", cfg.threads, "worker threads (0: all)");
        t.add_flag(app, "reseed-after-stage", cfg.reseed_after_stage, "restart walkers at the incumbent per level");
        t.add(app, "d-initial", d_initial, "override the first D level");
        t.add(app, "decay", decay, "override the D decay factor");
        t.add(app, "d-min", d_min, "override the last D level");
        t.add(app, "inner-steps", inner_steps, "override steps per level");
    }
};

int run_optimize(OptimizeOptions o, const Globals& g) {
    const BenchmarkFunction fn = builtin_function(o.objective, o.dim);
    const Objective obj = fn.objective();
    o.cfg.mode = sampler_mode_from_string(o.mode);
    if (g.seed) o.cfg.seed = *g.seed;
    if (o.schedule != "annealed" && o.schedule != "fixed_min")
        throw Error(ErrorKind::invalid_argument, "--schedule must be annealed or fixed_min");
    AnnealingSchedule sched = ScheduleSpec{o.schedule, o.schedule, {}}.resolve(obj);
    if (o.d_initial) sched.d_initial = *o.d_initial;
    if (o.decay) sched.decay = *o.decay;
    if (o.d_min) sched.d_min = *o.d_min;
    if (o.inner_steps) sched.inner_steps = *o.inner_steps;
    sched.validate();
    o.cfg.validate();
    check_output_dir(g.out);

    const OptimizationResult res = optimize(obj, sched, o.cfg);
    OutputSet out(g.out);
    json doc = to_json(res);
    doc["objective"] = o.objective;
    doc["dim"] = o.dim;
    out.file("result.json") << doc.dump(2) << '\n';
    write_history_csv(out.file("history.csv"), res);
    out.commit();
    if (!g.quiet) {
        std::cout << "best " << format_double(res.best_value) << " after " << res.evaluations_used << " evaluations\n";
        if (res.budget_exhausted) std::cerr << "warning: evaluation budget exhausted\n";
    }
    return res.budget_exhausted ? exhausted : ok;
}

// ----------------------------------------------------------------- bench

struct BenchOptions {
    std::string plan;
    std::optional<std::size_t> budget;
    std::optional<std::size_t> threads;

    void add(OptionTable& t, CLI::App* app) {
        t.add(app, "plan", plan, "experiment plan JSON (default: built-in plan)");
        t.add(app, "budget", budget, "override the per-run evaluation budget");
        t.add(app, "threads", threads, "worker threads per run");
    }
};

int run_bench(const BenchOptions& o, const Globals& g) {
    ExperimentPlan plan = o.plan.empty() ? ExperimentPlan::default_plan() : plan_from_json(load_json_file(o.plan));
    if (o.budget) plan.budget = *o.budget;
    if (o.threads) plan.base.threads = *o.threads;
    if (g.seed) plan.seeds = {*g.seed};
    plan.validate();
    check_output_dir(g.out);

    const ExperimentReport report = run_plan(plan);
    OutputSet out(g.out);
    out.file("report.json") << to_json(report).dump(2) << '\n';
    write_report_csv(out.file("report.csv"), report);
    out.commit();
    if (!g.quiet) {
        for (const auto& c : report.cells)
            std::cout << c.function << " d=" << c.dimension << " " << to_string(c.mode) << " " << c.schedule_id
                      << " success " << format_double(c.success_rate) << '\n';
    }
    return ok;
}

// ------------------------------------------------------------ wavepacket

struct WavepacketOptions {
    double D = 1.0;
    double dt = 5e-3;
    double t_max = 5.0;
    std::size_t samples = 21;
    GridOptions grid{-60.0, 60.0, 4801};
    PacketOptions packet;

    void add(OptionTable& t, CLI::App* app) {
        t.add(app, "D", D, "kinetic coefficient");
        t.add(app, "dt", dt, "time step");
        t.add(app, "t-max", t_max, "final time");
        t.add(app, "samples", samples, "output rows including t = 0");
        grid.add(t, app);
        packet.add(t, app);
    }
};

int run_wavepacket(const WavepacketOptions& o, const Globals& g) {
    const Grid grid = build_grid(o.grid.x_min, o.grid.x_max, o.grid.points);
    if (o.samples < 2) throw Error(ErrorKind::invalid_argument, "--samples must be >= 2");
    if (!(o.t_max > 0.0) || !(o.dt > 0.0)) throw Error(ErrorKind::invalid_argument, "--t-max and --dt must be positive");
    const auto total = static_cast<std::size_t>(std::llround(o.t_max / o.dt));
    if (total % (o.samples - 1) != 0)
        throw Error(ErrorKind::invalid_argument, "t-max/dt must be a multiple of samples-1");
    EvolutionConfig cfg;
    cfg.mode = TimeMode::real;
    cfg.D = o.D;
    cfg.dt = o.dt;
    cfg.n_steps = total;
    cfg.sample_every = total / (o.samples - 1);
    cfg.validate();
    free_packet_width(o.packet.sigma, o.D, 0.0);  // validates sigma
    const WaveFunction psi0 = gaussian_packet(grid, o.packet.x0, o.packet.sigma, o.packet.k0);
    check_output_dir(g.out);

    const Trajectory traj = evolve_real(psi0, zero_potential(grid), cfg);
    OutputSet out(g.out);
    auto& csv = out.file("wavepacket.csv");
    csv << "t,width_analytic,width_numeric\n";
    for (const auto& psi : traj.states)
        csv << format_double(psi.time) << ',' << format_double(free_packet_width(o.packet.sigma, o.D, psi.time)) << ','
            << format_double(density_width(psi)) << '\n';
    out.commit();
    if (!g.quiet) std::cout << "wrote " << traj.states.size() << " samples\n";
    for (const auto& w : traj.warnings)
        if (!g.quiet) std::cerr << "warning: " << w << '\n';
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qdyn: quantum-dynamics solvers and diffusion-based optimizers"};
    app.require_subcommand(1);
    OptionTable table;
    Globals globals;
    app.add_option("--config", globals.config, "JSON config file");
    table.add(&app, "out", globals.out, "output directory");
    table.add(&app, "seed", globals.seed, "random seed");
    table.add_flag(&app, "quiet", globals.quiet, "suppress console output");

    EvolveOptions evolve_opts;
    SpectrumOptions spectrum_opts;
    OptimizeOptions optimize_opts;
    BenchOptions bench_opts;
    WavepacketOptions wavepacket_opts;

    auto* evolve_cmd = app.add_subcommand("evolve", "real- or imaginary-time grid evolution");
    evolve_opts.add(table, evolve_cmd);
    auto* spectrum_cmd = app.add_subcommand("spectrum", "eigenpairs and occupation traces");
    spectrum_opts.add(table, spectrum_cmd);
    auto* optimize_cmd = app.add_subcommand("optimize", "minimize a builtin objective");
    optimize_opts.add(table, optimize_cmd);
    auto* bench_cmd = app.add_subcommand("bench", "run an experiment plan");
    bench_opts.add(table, bench_cmd);
    auto* wavepacket_cmd = app.add_subcommand("wavepacket", "free packet width versus the analytic law");
    wavepacket_opts.add(table, wavepacket_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    CLI::App* chosen = app.get_subcommands().front();
    try {
        if (!globals.config.empty()) table.apply(load_json_file(globals.config), &app, chosen);
        if (chosen == evolve_cmd) return run_evolve(evolve_opts, globals);
        if (chosen == spectrum_cmd) return run_spectrum(spectrum_opts, globals);
        if (chosen == optimize_cmd) return run_optimize(optimize_opts, globals);
        if (chosen == bench_cmd) return run_bench(bench_opts, globals);
        return run_wavepacket(wavepacket_opts, globals);
    } catch (const Error& e) {
        std::cerr << "qdyn: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "qdyn: " << e.what() << '\n';
        return usage;
    }
}
