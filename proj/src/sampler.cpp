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

#include "qdyn/sampler.hpp"

#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>
#include <thread>

#include "qdyn/error.hpp"
#include "qdyn/parallel.hpp"

namespace qdyn {
namespace {

// Stream purposes; distinct keys keep the per-walker streams independent.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kMoveStream = 2;
constexpr std::uint64_t kBranchStream = 3;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void require_step_args(double D, double dtau) {
    if (!(D >= 0.0) || !std::isfinite(D)) throw Error(ErrorKind::invalid_argument, "D must be >= 0");
    if (!(dtau > 0.0) || !std::isfinite(dtau)) throw Error(ErrorKind::invalid_argument, "dtau must be > 0");
}

EvaluationBudget& budget_of(StepContext& ctx) {
    if (ctx.budget == nullptr) throw Error(ErrorKind::invalid_argument, "step context has no evaluation budget");
    return *ctx.budget;
}

// Budget already reserved by the caller.
Point central_difference(const Objective& obj, std::span<const double> x, double h, EvaluationBudget& budget) {
    Point grad(x.size());
    Point probe(x.begin(), x.end());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double lo = std::max(obj.lower_bounds[j], x[j] - h);
        const double hi = std::min(obj.upper_bounds[j], x[j] + h);
        probe[j] = hi;
        const double f_hi = budget.evaluate(obj, probe);
        probe[j] = lo;
        const double f_lo = budget.evaluate(obj, probe);
        probe[j] = x[j];
        grad[j] = hi > lo ? (f_hi - f_lo) / (hi - lo) : 0.0;
    }
    return grad;
}

std::size_t step_cost(SamplerMode mode, std::size_t walkers, std::size_t dim) {
    return mode == SamplerMode::drift ? walkers * (2 * dim + 1) : walkers;
}

}  // namespace

void Objective::validate() const {
    if (dimension == 0) throw Error(ErrorKind::invalid_argument, "objective dimension must be positive");
    if (lower_bounds.size() != dimension || upper_bounds.size() != dimension)
        throw Error(ErrorKind::invalid_argument, "bounds do not match the objective dimension");
    for (std::size_t j = 0; j < dimension; ++j) {
        if (!std::isfinite(lower_bounds[j]) || !std::isfinite(upper_bounds[j]) || !(lower_bounds[j] < upper_bounds[j]))
            throw Error(ErrorKind::invalid_bounds, "objective bounds must be finite with lower < upper");
    }
    if (!evaluate) throw Error(ErrorKind::invalid_argument, "objective has no evaluate function");
}

double Objective::max_width() const {
    double w = 0.0;
    for (std::size_t j = 0; j < dimension; ++j) w = std::max(w, upper_bounds[j] - lower_bounds[j]);
    return w;
}

void Objective::clamp(std::span<double> x) const {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::clamp(x[j], lower_bounds[j], upper_bounds[j]);
}

void EvaluationBudget::reserve(std::size_t count) const {
    if (count > remaining()) {
        std::ostringstream msg;
        msg << "need " << count << " evaluations, " << remaining() << " of " << limit_ << " left";
        throw Error(ErrorKind::budget_exhausted, msg.str());
    }
}

double EvaluationBudget::evaluate(const Objective& obj, std::span<const double> x) {
    used_.fetch_add(1, std::memory_order_relaxed);
    return obj.evaluate(x);
}

CounterStream walker_stream(std::uint64_t seed, std::uint64_t generation, std::uint64_t walker,
                            std::uint64_t purpose) {
    std::uint64_t key = splitmix64(seed);
    key = splitmix64(key ^ generation);
    key = splitmix64(key ^ walker);
    key = splitmix64(key ^ purpose);
    return CounterStream(key);
}

void WalkerPopulation::update_best() {
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (values[i] < best_value) {
            best_value = values[i];
            best_position = positions[i];
        }
    }
}

double WalkerPopulation::mean_value() const {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double WalkerPopulation::spread() const {
    if (positions.empty()) return 0.0;
    const std::size_t dim = positions.front().size();
    Point centroid(dim, 0.0);
    for (const auto& x : positions)
        for (std::size_t j = 0; j < dim; ++j) centroid[j] += x[j];
    for (double& c : centroid) c /= static_cast<double>(positions.size());
    double sum = 0.0;
    for (const auto& x : positions)
        for (std::size_t j = 0; j < dim; ++j) sum += (x[j] - centroid[j]) * (x[j] - centroid[j]);
    return std::sqrt(sum / static_cast<double>(positions.size()));
}

std::string_view to_string(SamplerMode mode) {
    switch (mode) {
        case SamplerMode::diffusion: return "diffusion";
        case SamplerMode::drift: return "drift";
        case SamplerMode::dmc: return "dmc";
    }
    return "unknown";
}

SamplerMode sampler_mode_from_string(std::string_view name) {
    if (name == "diffusion") return SamplerMode::diffusion;
    if (name == "drift") return SamplerMode::drift;
    if (name == "dmc") return SamplerMode::dmc;
    throw Error(ErrorKind::invalid_argument, "unknown sampler mode '" + std::string(name) + "'");
}

void AnnealingSchedule::validate() const {
    if (!(d_min > 0.0) || !std::isfinite(d_initial) || !(d_initial >= d_min))
        throw Error(ErrorKind::invalid_argument, "schedule needs d_initial >= d_min > 0");
    if (!(decay > 0.0 && decay < 1.0)) throw Error(ErrorKind::invalid_argument, "schedule decay must lie in (0, 1)");
    if (inner_steps == 0) throw Error(ErrorKind::invalid_argument, "schedule needs inner_steps > 0");
}

std::vector<double> AnnealingSchedule::levels() const {
    validate();
    std::vector<double> out;
    for (double d = d_initial; d >= d_min; d *= decay) out.push_back(d);
    return out;
}

AnnealingSchedule AnnealingSchedule::default_for(const Objective& obj) {
    const double w = obj.max_width();
    const double d0 = w * w / 4.0;
    return AnnealingSchedule{d0, 0.5, 1e-6 * d0, 50};
}

AnnealingSchedule AnnealingSchedule::fixed(double d, std::size_t inner_steps) {
    return AnnealingSchedule{d, 0.5, d, inner_steps};
}

void OptimizerConfig::validate() const {
    if (!(dtau > 0.0) || !std::isfinite(dtau)) throw Error(ErrorKind::invalid_argument, "dtau must be > 0");
    if (n_walkers < 2) throw Error(ErrorKind::invalid_argument, "n_walkers must be >= 2");
    if (target_walkers == 0) throw Error(ErrorKind::invalid_argument, "target_walkers must be > 0");
    if (!(eref_gain > 0.0)) throw Error(ErrorKind::invalid_argument, "eref_gain must be > 0");
    if (!(fd_offset_factor > 0.0) || !(fd_min_offset > 0.0))
        throw Error(ErrorKind::invalid_argument, "finite-difference offsets must be > 0");
    if (max_evaluations == 0) throw Error(ErrorKind::invalid_argument, "max_evaluations must be > 0");
}

Point estimate_gradient(const Objective& obj, std::span<const double> x, double h, EvaluationBudget& budget) {
    if (!(h > 0.0)) throw Error(ErrorKind::invalid_argument, "finite-difference offset must be > 0");
    if (x.size() != obj.dimension) throw Error(ErrorKind::invalid_argument, "point has the wrong dimension");
    budget.reserve(2 * x.size());
    return central_difference(obj, x, h, budget);
}

WalkerPopulation initialize_population(const Objective& obj, std::size_t n_walkers, StepContext& ctx) {
    auto& budget = budget_of(ctx);
    budget.reserve(n_walkers);
    WalkerPopulation pop;
    pop.positions.assign(n_walkers, Point(obj.dimension));
    pop.values.assign(n_walkers, 0.0);
    pop.weights.assign(n_walkers, 1.0);
    parallel_for(n_walkers, ctx.threads, [&](std::size_t i) {
        auto rng = walker_stream(ctx.seed, 0, i, kInitStream);
        auto& x = pop.positions[i];
        for (std::size_t j = 0; j < obj.dimension; ++j) {
            std::uniform_real_distribution<double> u(obj.lower_bounds[j], obj.upper_bounds[j]);
            x[j] = u(rng);
        }
        pop.values[i] = budget.evaluate(obj, x);
    });
    pop.update_best();
    return pop;
}

void diffusion_step(WalkerPopulation& pop, const Objective& obj, double D, double dtau, StepContext& ctx) {
    require_step_args(D, dtau);
    auto& budget = budget_of(ctx);
    budget.reserve(pop.size());
    ++pop.generation;
    const double sigma = std::sqrt(2.0 * D * dtau);
    parallel_for(pop.size(), ctx.threads, [&](std::size_t i) {
        auto& x = pop.positions[i];
        if (sigma > 0.0) {
            auto rng = walker_stream(ctx.seed, pop.generation, i, kMoveStream);
            std::normal_distribution<double> normal(0.0, 1.0);
            for (double& xj : x) xj += sigma * normal(rng);
            obj.clamp(x);
        }
        pop.values[i] = budget.evaluate(obj, x);
    });
    pop.update_best();
}

void drift_step(WalkerPopulation& pop, const Objective& obj, double D, double dtau, const OptimizerConfig& cfg,
                StepContext& ctx) {
    require_step_args(D, dtau);
    auto& budget = budget_of(ctx);
    budget.reserve(step_cost(SamplerMode::drift, pop.size(), obj.dimension));
    ++pop.generation;
    const double sigma = std::sqrt(2.0 * D * dtau);
    const double h = std::max(cfg.fd_min_offset, cfg.fd_offset_factor * sigma);
    parallel_for(pop.size(), ctx.threads, [&](std::size_t i) {
        auto& x = pop.positions[i];
        const Point grad = central_difference(obj, x, h, budget);
        for (std::size_t j = 0; j < x.size(); ++j) x[j] -= grad[j] * dtau;
        if (sigma > 0.0) {
            auto rng = walker_stream(ctx.seed, pop.generation, i, kMoveStream);
            std::normal_distribution<double> normal(0.0, 1.0);
            for (double& xj : x) xj += sigma * normal(rng);
        }
        obj.clamp(x);
        pop.values[i] = budget.evaluate(obj, x);
    });
    pop.update_best();
}

double dmc_reweight(WalkerPopulation& pop, double e_ref, double dtau, const OptimizerConfig& cfg, StepContext& ctx) {
    if (pop.size() == 0) throw Error(ErrorKind::population_extinction, "empty population");
    if (!(dtau > 0.0)) throw Error(ErrorKind::invalid_argument, "dtau must be > 0");
    const std::size_t n = pop.size();
    std::vector<std::size_t> copies(n);
    parallel_for(n, ctx.threads, [&](std::size_t i) {
        auto rng = walker_stream(ctx.seed, pop.generation, i, kBranchStream);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        const double w = std::exp(-(pop.values[i] - e_ref) * dtau);
        const double c = std::floor(w + uniform(rng));
        copies[i] = std::isfinite(c) ? static_cast<std::size_t>(std::min(c, 1e9)) : std::size_t{1000000000};
    });

    const std::size_t cap = 10 * cfg.target_walkers;
    std::vector<Point> positions;
    std::vector<double> values;
    positions.reserve(std::min(cap, 2 * n));
    values.reserve(std::min(cap, 2 * n));
    for (std::size_t i = 0; i < n && positions.size() < cap; ++i) {
        for (std::size_t c = 0; c < copies[i] && positions.size() < cap; ++c) {
            positions.push_back(pop.positions[i]);
            values.push_back(pop.values[i]);
        }
    }
    if (positions.empty()) {
        std::ostringstream msg;
        msg << "all " << n << " walkers died (e_ref=" << e_ref << ", dtau=" << dtau << ")";
        throw Error(ErrorKind::population_extinction, msg.str());
    }
    pop.positions = std::move(positions);
    pop.values = std::move(values);
    pop.weights.assign(pop.positions.size(), 1.0);

    const double ratio = static_cast<double>(pop.size()) / static_cast<double>(cfg.target_walkers);
    return pop.mean_value() - cfg.eref_gain * std::log(ratio) / dtau;
}

std::optional<std::size_t> OptimizationResult::evaluations_to(double target) const {
    for (const auto& imp : improvements)
        if (imp.best_value < target) return imp.evaluations;
    return std::nullopt;
}

std::size_t resolve_threads(std::size_t requested) {
    std::size_t n = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("QDYN_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
    }
    return n;
}

OptimizationResult optimize(const Objective& obj, const AnnealingSchedule& schedule, const OptimizerConfig& cfg) {
    obj.validate();
    schedule.validate();
    cfg.validate();
    if (cfg.max_evaluations < cfg.n_walkers + step_cost(cfg.mode, cfg.n_walkers, obj.dimension))
        throw Error(ErrorKind::invalid_argument, "max_evaluations does not cover initialization plus one sweep");

    EvaluationBudget budget(cfg.max_evaluations);
    StepContext ctx{cfg.seed, &budget, resolve_threads(cfg.threads)};

    OptimizationResult result;
    result.seed = cfg.seed;
    result.mode = cfg.mode;

    WalkerPopulation pop = initialize_population(obj, cfg.n_walkers, ctx);
    result.improvements.push_back({budget.used(), pop.best_value});
    double e_ref = pop.mean_value();

    const auto levels = schedule.levels();
    for (std::size_t k = 0; k < levels.size() && !result.budget_exhausted; ++k) {
        const double D = levels[k];
        for (std::size_t s = 0; s < schedule.inner_steps; ++s) {
            if (budget.remaining() < step_cost(cfg.mode, pop.size(), obj.dimension)) {
                result.budget_exhausted = true;
                break;
            }
            const double before = pop.best_value;
            switch (cfg.mode) {
                case SamplerMode::diffusion:
                    diffusion_step(pop, obj, D, cfg.dtau, ctx);
                    break;
                case SamplerMode::drift:
                    drift_step(pop, obj, D, cfg.dtau, cfg, ctx);
                    break;
                case SamplerMode::dmc:
                    diffusion_step(pop, obj, D, cfg.dtau, ctx);
                    // Reference energy re-centred on the diffused population before branching.
                    e_ref = pop.mean_value() - cfg.eref_gain *
                                                   std::log(static_cast<double>(pop.size()) /
                                                            static_cast<double>(cfg.target_walkers)) /
                                                   cfg.dtau;
                    e_ref = dmc_reweight(pop, e_ref, cfg.dtau, cfg, ctx);
                    result.eref_trace.push_back(e_ref);
                    break;
            }
            if (pop.best_value < before) result.improvements.push_back({budget.used(), pop.best_value});
        }
        result.history.push_back({k, D, pop.best_value, pop.mean_value(), pop.spread()});
        if (cfg.reseed_after_stage) {
            for (auto& x : pop.positions) x = pop.best_position;
            pop.values.assign(pop.size(), pop.best_value);
        }
    }

    result.best_position = pop.best_position;
    result.best_value = pop.best_value;
    result.evaluations_used = budget.used();
    return result;
}

}  // namespace qdyn
