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

#include <iosfwd>
#include <span>
#include <string>

#include <json.hpp>

#include "qdyn/benchmark.hpp"
#include "qdyn/evolution.hpp"
#include "qdyn/sampler.hpp"
#include "qdyn/spectral.hpp"

namespace qdyn {

using json = nlohmann::json;

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);
/// Fixed 17 significant digits.
std::string format_double17(double v);

// tau_or_t,x,re,im,abs2 -- one row per (sample, grid point).
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

// n,energy
void write_spectrum_csv(std::ostream& out, const Spectrum& spec);
// n,x,phi for a single eigenstate.
void write_eigenstate_csv(std::ostream& out, const Spectrum& spec, std::size_t n);
// tau,p0,...,p{k-1} on `points` evenly spaced tau values in [0, tau_max].
void write_softmax_trace_csv(std::ostream& out, std::span<const double> energies, double tau_max, std::size_t points);

json to_json(const OptimizationResult& result);
// outer_iter,D,best_value,mean_value,spread
void write_history_csv(std::ostream& out, const OptimizationResult& result);

/// Parses a plan document. Missing keys fall back to ExperimentPlan::default_plan();
/// type errors throw Error(invalid_argument) naming the offending field.
ExperimentPlan plan_from_json(const json& doc);
json to_json(const ExperimentPlan& plan);

json to_json(const ExperimentReport& report);
// function,dim,mode,schedule_id,seed,best_value,evaluations,success
void write_report_csv(std::ostream& out, const ExperimentReport& report);

/// Reads `x,value` rows (header optional) and linearly interpolates onto the grid.
/// Grid points outside the tabulated range throw Error(non_finite_potential).
PotentialGrid potential_from_csv(std::istream& in, const Grid& grid);

/// Parses JSON text; syntax errors throw Error(invalid_argument) with line and column.
json parse_json_text(const std::string& text, const std::string& source_name);

}  // namespace qdyn
