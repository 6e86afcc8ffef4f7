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

#include "qdyn/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "qdyn/error.hpp"

namespace qdyn {
namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double sphere(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

double rastrigin(std::span<const double> x) {
    double s = 10.0 * static_cast<double>(x.size());
    for (double v : x) s += v * v - 10.0 * std::cos(two_pi * v);
    return s;
}

double ackley(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    double sq = 0.0, cs = 0.0;
    for (double v : x) {
        sq += v * v;
        cs += std::cos(two_pi * v);
    }
    return -20.0 * std::exp(-0.2 * std::sqrt(sq / n)) - std::exp(cs / n) + 20.0 + std::numbers::e;
}

double rosenbrock(std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double a = x[i + 1] - x[i] * x[i];
        const double b = 1.0 - x[i];
        s += 100.0 * a * a + b * b;
    }
    return s;
}

double styblinski_tang(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) {
        const double v2 = v * v;
        s += v2 * v2 - 16.0 * v2 + 5.0 * v;
    }
    return 0.5 * s;
}

// Smallest root of 4x^3 - 32x + 5, the per-coordinate minimizer of styblinski_tang.
double styblinski_tang_argmin() {
    double x = -2.9;
    for (int it = 0; it < 50; ++it) x -= (4.0 * x * x * x - 32.0 * x + 5.0) / (12.0 * x * x - 32.0);
    return x;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

const std::vector<std::string>& builtin_function_names() {
    static const std::vector<std::string> names{"sphere", "rastrigin", "ackley", "rosenbrock", "styblinski_tang"};
    return names;
}

BenchmarkFunction builtin_function(const std::string& name, std::size_t dimension) {
    if (dimension == 0) throw Error(ErrorKind::invalid_argument, "benchmark dimension must be >= 1");
    auto box = [&](double lo, double hi, double at, auto fn) {
        BenchmarkFunction f;
        f.name = name;
        f.dimension = dimension;
        f.lower_bounds.assign(dimension, lo);
        f.upper_bounds.assign(dimension, hi);
        f.known_minimum_position.assign(dimension, at);
        f.evaluate = fn;
        f.known_minimum_value = fn(f.known_minimum_position);
        return f;
    };
    if (name == "sphere") return box(-5.12, 5.12, 0.0, sphere);
    if (name == "rastrigin") return box(-5.12, 5.12, 0.0, rastrigin);
    if (name == "ackley") {
        auto f = box(-32.768, 32.768, 0.0, ackley);
        f.known_minimum_value = 0.0;  // analytic; the float evaluation is within 1e-15
        return f;
    }
    if (name == "rosenbrock") return box(-5.0, 10.0, 1.0, rosenbrock);
    if (name == "styblinski_tang") return box(-5.0, 5.0, styblinski_tang_argmin(), styblinski_tang);
    throw Error(ErrorKind::unknown_function, "no builtin function named '" + name + "'");
}

double default_success_threshold(const std::string& name) { return name == "rosenbrock" ? 1.0 : 1e-2; }

AnnealingSchedule ScheduleSpec::resolve(const Objective& obj) const {
    if (kind == "annealed") return AnnealingSchedule::default_for(obj);
    if (kind == "fixed_min") {
        const auto annealed = AnnealingSchedule::default_for(obj);
        return AnnealingSchedule::fixed(annealed.d_min, annealed.levels().size() * annealed.inner_steps);
    }
    if (kind == "custom") {
        schedule.validate();
        return schedule;
    }
    throw Error(ErrorKind::invalid_argument, "unknown schedule kind '" + kind + "'");
}

void ExperimentPlan::validate() const {
    if (functions.empty() || modes.empty() || schedules.empty() || seeds.empty())
        throw Error(ErrorKind::invalid_argument, "plan needs non-empty functions, modes, schedules and seeds");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw Error(ErrorKind::invalid_argument, "plan seeds must be distinct");
    std::set<std::string> ids;
    for (const auto& s : schedules) {
        if (!ids.insert(s.id).second) throw Error(ErrorKind::invalid_argument, "duplicate schedule id '" + s.id + "'");
        if (s.kind != "annealed" && s.kind != "fixed_min" && s.kind != "custom")
            throw Error(ErrorKind::invalid_argument, "unknown schedule kind '" + s.kind + "'");
        if (s.kind == "custom") s.schedule.validate();
    }
    for (const auto& f : functions) {
        const auto& names = builtin_function_names();
        if (std::find(names.begin(), names.end(), f.name) == names.end())
            throw Error(ErrorKind::unknown_function, "no builtin function named '" + f.name + "'");
        if (f.dimension == 0) throw Error(ErrorKind::invalid_argument, "function dimension must be >= 1");
    }
    OptimizerConfig probe = base;
    probe.max_evaluations = budget;
    probe.validate();
}

ExperimentPlan ExperimentPlan::default_plan() {
    ExperimentPlan plan;
    plan.functions = {{"sphere", 5, std::nullopt}, {"rastrigin", 2, std::nullopt}, {"ackley", 2, std::nullopt}};
    plan.modes = {SamplerMode::dmc, SamplerMode::drift, SamplerMode::diffusion};
    plan.schedules = {{"annealed", "annealed", {}}, {"fixed_min", "fixed_min", {}}};
    for (std::uint64_t s = 1; s <= 10; ++s) plan.seeds.push_back(s);
    plan.budget = 200000;
    return plan;
}

ExperimentReport run_plan(const ExperimentPlan& plan) {
    plan.validate();
    ExperimentReport report;
    for (const auto& fspec : plan.functions) {
        const BenchmarkFunction fn = builtin_function(fspec.name, fspec.dimension);
        const Objective obj = fn.objective();
        const double threshold = fspec.threshold.value_or(default_success_threshold(fspec.name));
        for (SamplerMode mode : plan.modes) {
            for (const auto& sspec : plan.schedules) {
                CellReport cell;
                cell.function = fspec.name;
                cell.dimension = fspec.dimension;
                cell.mode = mode;
                cell.schedule_id = sspec.id;
                cell.threshold = threshold;
                const AnnealingSchedule schedule = sspec.resolve(obj);

                std::vector<double> bests, evals_to;
                std::size_t successes = 0;
                for (std::uint64_t seed : plan.seeds) {
                    SeedRow row;
                    row.seed = seed;
                    OptimizerConfig cfg = plan.base;
                    cfg.mode = mode;
                    cfg.seed = seed;
                    cfg.max_evaluations = plan.budget;
                    try {
                        const auto res = optimize(obj, schedule, cfg);
                        row.best_value = res.best_value;
                        row.best_position = res.best_position;
                        row.evaluations = res.evaluations_used;
                        row.budget_exhausted = res.budget_exhausted;
                        row.success = res.best_value - fn.known_minimum_value < threshold;
                        if (auto e = res.evaluations_to(fn.known_minimum_value + threshold))
                            evals_to.push_back(static_cast<double>(*e));
                        bests.push_back(res.best_value);
                    } catch (const Error& e) {
                        row.best_value = std::numeric_limits<double>::quiet_NaN();
                        row.error = e.what();
                    }
                    successes += row.success ? 1 : 0;
                    cell.rows.push_back(std::move(row));
                }
                cell.success_rate = static_cast<double>(successes) / static_cast<double>(plan.seeds.size());
                cell.median_best_value = median(bests);
                if (!evals_to.empty()) cell.median_evaluations_to_threshold = median(evals_to);
                report.cells.push_back(std::move(cell));
            }
        }
    }
    return report;
}

}  // namespace qdyn
