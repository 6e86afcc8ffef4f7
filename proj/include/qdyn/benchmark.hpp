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

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qdyn/sampler.hpp"

namespace qdyn {

struct BenchmarkFunction {
    std::string name;
    std::size_t dimension = 0;
    Point lower_bounds;
    Point upper_bounds;
    Point known_minimum_position;
    double known_minimum_value = 0.0;
    std::function<double(std::span<const double>)> evaluate;

    Objective objective() const { return Objective{dimension, lower_bounds, upper_bounds, evaluate}; }
};

/// sphere, rastrigin, ackley, rosenbrock or styblinski_tang in standard form
/// with canonical bounds. Throws Error(unknown_function) otherwise.
BenchmarkFunction builtin_function(const std::string& name, std::size_t dimension);

const std::vector<std::string>& builtin_function_names();

/// Success threshold on best_value - known_minimum_value: 1 for rosenbrock, 1e-2 otherwise.
double default_success_threshold(const std::string& name);

struct FunctionSpec {
    std::string name;
    std::size_t dimension = 2;
    std::optional<double> threshold;  // overrides default_success_threshold
};

/// How a plan cell builds its annealing schedule.
///   annealed  - AnnealingSchedule::default_for(objective)
///   fixed_min - one level at the annealed schedule's d_min, running as many
///               steps as the whole annealed schedule
///   custom    - the explicit `schedule`
struct ScheduleSpec {
    std::string id;
    std::string kind = "annealed";
    AnnealingSchedule schedule;

    AnnealingSchedule resolve(const Objective& obj) const;
};

struct ExperimentPlan {
    std::vector<FunctionSpec> functions;
    std::vector<SamplerMode> modes;
    std::vector<ScheduleSpec> schedules;
    std::vector<std::uint64_t> seeds;
    std::size_t budget = 200000;
    OptimizerConfig base;  // seed, mode and max_evaluations are set per cell

    void validate() const;
    static ExperimentPlan default_plan();
};

struct SeedRow {
    std::uint64_t seed = 0;
    double best_value = 0.0;  // NaN when the run failed
    Point best_position;
    std::size_t evaluations = 0;
    bool success = false;
    bool budget_exhausted = false;
    std::string error;  // empty unless the run threw
};

struct CellReport {
    std::string function;
    std::size_t dimension = 0;
    SamplerMode mode = SamplerMode::dmc;
    std::string schedule_id;
    double threshold = 0.0;
    double success_rate = 0.0;
    double median_best_value = 0.0;
    std::optional<double> median_evaluations_to_threshold;  // over successful seeds
    std::vector<SeedRow> rows;
};

struct ExperimentReport {
    std::vector<CellReport> cells;  // function-major, then mode, then schedule
};

/// Runs every (function, mode, schedule, seed) combination. Failures in one
/// run are recorded in its row and do not stop the plan.
ExperimentReport run_plan(const ExperimentPlan& plan);

}  // namespace qdyn
