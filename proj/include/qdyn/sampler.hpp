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

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qdyn {

using Point = std::vector<double>;

/// Black-box objective over a box.
struct Objective {
    std::size_t dimension = 0;
    Point lower_bounds;
    Point upper_bounds;
    // Must be safe to call concurrently.
    std::function<double(std::span<const double>)> evaluate;

    void validate() const;
    double max_width() const;
    void clamp(std::span<double> x) const;
};

/// Counts every call to the wrapped objective and enforces the evaluation limit.
class EvaluationBudget {
public:
    explicit EvaluationBudget(std::size_t limit = std::numeric_limits<std::size_t>::max()) : limit_(limit) {}

    std::size_t limit() const noexcept { return limit_; }
    std::size_t used() const noexcept { return used_.load(std::memory_order_relaxed); }
    std::size_t remaining() const noexcept { return limit_ - std::min(limit_, used()); }

    // Throws Error(budget_exhausted) when `count` more calls would exceed the limit.
    void reserve(std::size_t count) const;

    double evaluate(const Objective& obj, std::span<const double> x);

private:
    std::size_t limit_;
    std::atomic<std::size_t> used_{0};
};

/// Counter-based 64-bit generator: output k is splitmix64(key + k * golden).
/// Cheap to construct, so every walker can own a fresh stream per step.
class CounterStream {
public:
    using result_type = std::uint64_t;

    explicit CounterStream(std::uint64_t key) : state_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Deterministic random stream for one walker at one generation.
///
/// Streams are keyed by (seed, generation, walker, purpose) so results do not
/// depend on execution order or thread count.
CounterStream walker_stream(std::uint64_t seed, std::uint64_t generation, std::uint64_t walker,
                            std::uint64_t purpose);

struct WalkerPopulation {
    std::vector<Point> positions;
    std::vector<double> values;   // objective at each position
    std::vector<double> weights;  // branching leaves every weight at 1
    std::uint64_t generation = 0;
    Point best_position;
    double best_value = std::numeric_limits<double>::infinity();

    std::size_t size() const noexcept { return positions.size(); }
    // Folds values into the incumbent in walker order; ties keep the earlier point.
    void update_best();
    double mean_value() const;
    // RMS distance of the walkers from their centroid.
    double spread() const;
};

enum class SamplerMode { diffusion, drift, dmc };

std::string_view to_string(SamplerMode mode);
SamplerMode sampler_mode_from_string(std::string_view name);

/// Outer annealing loop: D_k = d_initial * decay^k for every D_k >= d_min.
struct AnnealingSchedule {
    double d_initial = 1.0;
    double decay = 0.5;
    double d_min = 1e-6;
    std::size_t inner_steps = 50;

    void validate() const;
    std::vector<double> levels() const;

    // d_initial = (widest bound)^2 / 4, decay 0.5, d_min = 1e-6 d_initial, 50 inner steps.
    static AnnealingSchedule default_for(const Objective& obj);
    // A single level at D = d with the given number of steps.
    static AnnealingSchedule fixed(double d, std::size_t inner_steps);
};

struct OptimizerConfig {
    // Defaults fixed by the pilot runs recorded in docs/pilot_runs.md.
    SamplerMode mode = SamplerMode::dmc;
    double dtau = 0.2;
    std::size_t n_walkers = 16;       // initial population
    std::size_t target_walkers = 64;  // dmc population control target
    double eref_gain = 1.0;
    double fd_offset_factor = 0.1;
    double fd_min_offset = 1e-8;
    std::uint64_t seed = 0;
    std::size_t max_evaluations = 200000;
    // Restart every walker at the incumbent when an annealing level ends.
    bool reseed_after_stage = false;
    // 0 picks the hardware concurrency, capped by QDYN_THREADS.
    std::size_t threads = 0;

    void validate() const;
};

/// Runtime context shared by the individual step operations.
struct StepContext {
    std::uint64_t seed = 0;
    EvaluationBudget* budget = nullptr;
    std::size_t threads = 1;
};

/// Central difference per coordinate, (f(x + h e_j) - f(x - h e_j)) / 2h.
/// Probes are clamped into the box, which degrades to a one-sided difference
/// at a wall. Charges 2 * dimension evaluations.
Point estimate_gradient(const Objective& obj, std::span<const double> x, double h, EvaluationBudget& budget);

/// Uniform over the box; every walker is evaluated.
WalkerPopulation initialize_population(const Objective& obj, std::size_t n_walkers, StepContext& ctx);

/// Gaussian move with per-coordinate standard deviation sqrt(2 D dtau), clamp,
/// re-evaluate, fold the incumbent.
void diffusion_step(WalkerPopulation& pop, const Objective& obj, double D, double dtau, StepContext& ctx);

/// Gradient move -grad(zeta) dtau plus the diffusion displacement. The
/// gradient probe offset is max(fd_min_offset, fd_offset_factor * sqrt(2 D dtau)).
void drift_step(WalkerPopulation& pop, const Objective& obj, double D, double dtau, const OptimizerConfig& cfg,
                StepContext& ctx);

/// Birth/death branching with weight exp(-(zeta - e_ref) dtau), realized as
/// floor(w + u) copies. Uses the cached walker values (no evaluations).
/// Returns the updated reference energy
///   mean(zeta) - eref_gain * ln(N / target_walkers) / dtau.
double dmc_reweight(WalkerPopulation& pop, double e_ref, double dtau, const OptimizerConfig& cfg, StepContext& ctx);

struct HistoryRecord {
    std::size_t outer_iter = 0;
    double D = 0.0;
    double best_value = 0.0;
    double mean_value = 0.0;
    double spread = 0.0;
};

struct Improvement {
    std::size_t evaluations = 0;
    double best_value = 0.0;
};

struct OptimizationResult {
    Point best_position;
    double best_value = std::numeric_limits<double>::infinity();
    std::size_t evaluations_used = 0;
    bool budget_exhausted = false;
    std::uint64_t seed = 0;
    SamplerMode mode = SamplerMode::dmc;
    std::vector<HistoryRecord> history;
    std::vector<double> eref_trace;          // dmc mode, one entry per inner step
    std::vector<Improvement> improvements;   // every step that lowered best_value

    // First evaluation count at which best_value dropped below `target`, if ever.
    std::optional<std::size_t> evaluations_to(double target) const;
};

/// Two nested loops: the outer loop walks the annealing levels, the inner loop
/// runs inner_steps of the configured step at fixed D. Running out of budget
/// stops early and sets budget_exhausted; the best point so far is returned.
OptimizationResult optimize(const Objective& obj, const AnnealingSchedule& schedule, const OptimizerConfig& cfg);

/// Thread count after applying QDYN_THREADS.
std::size_t resolve_threads(std::size_t requested);

}  // namespace qdyn
