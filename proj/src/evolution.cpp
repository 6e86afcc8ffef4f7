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

#include "qdyn/evolution.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include "qdyn/error.hpp"
#include "qdyn/hamiltonian.hpp"

namespace qdyn {
namespace {

// FFTW's planner is not thread safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// exp(D L dtau) for the zero-wall Laplacian L, applied to complex amplitudes.
class SineKineticPropagator {
public:
    SineKineticPropagator(std::size_t n, double dx, double D, double dtau) : n_(n), factors_(n) {
        buffer_ = fftw_alloc_real(2 * n);
        {
            std::lock_guard lock(planner_mutex());
            int len = static_cast<int>(n);
            fftw_r2r_kind kind = FFTW_RODFT00;
            // Real and imaginary parts are two interleaved stride-2 transforms.
            plan_ = fftw_plan_many_r2r(1, &len, 2, buffer_, nullptr, 2, 1, buffer_, nullptr, 2, 1, &kind,
                                       FFTW_ESTIMATE);
        }
        const double m = static_cast<double>(n + 1);
        const double norm = 1.0 / (2.0 * m);
        for (std::size_t j = 0; j < n; ++j) {
            const double s = std::sin(std::numbers::pi * static_cast<double>(j + 1) / (2.0 * m));
            const double lambda = 4.0 * s * s / (dx * dx);
            factors_[j] = std::exp(-D * lambda * dtau) * norm;
        }
    }

    SineKineticPropagator(const SineKineticPropagator&) = delete;
    SineKineticPropagator& operator=(const SineKineticPropagator&) = delete;

    ~SineKineticPropagator() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(buffer_);
    }

    void apply(std::vector<complex>& psi) {
        for (std::size_t i = 0; i < n_; ++i) {
            buffer_[2 * i] = psi[i].real();
            buffer_[2 * i + 1] = psi[i].imag();
        }
        fftw_execute(plan_);
        for (std::size_t j = 0; j < n_; ++j) {
            buffer_[2 * j] *= factors_[j];
            buffer_[2 * j + 1] *= factors_[j];
        }
        fftw_execute(plan_);
        for (std::size_t i = 0; i < n_; ++i) psi[i] = complex(buffer_[2 * i], buffer_[2 * i + 1]);
    }

private:
    std::size_t n_;
    std::vector<double> factors_;
    double* buffer_ = nullptr;
    fftw_plan plan_ = nullptr;
};

// Crank-Nicolson step for i dpsi/dt = H psi with H tridiagonal.
class CrankNicolsonStepper {
public:
    CrankNicolsonStepper(const PotentialGrid& pot, double D, double dt)
        : n_(pot.size()), dx_(pot.grid.dx()), D_(D), dt_(dt), pot_(pot.values), cprime_(n_), inv_denom_(n_), rhs_(n_) {
        const double c = D / (dx_ * dx_);
        const complex half_i(0.0, 0.5 * dt);
        off_ = -half_i * c;
        // Forward sweep coefficients depend only on the matrix, so factor once.
        for (std::size_t i = 0; i < n_; ++i) {
            const complex diag = 1.0 + half_i * (2.0 * c + pot_[i]);
            const complex denom = i == 0 ? diag : diag - off_ * cprime_[i - 1];
            inv_denom_[i] = 1.0 / denom;
            cprime_[i] = off_ * inv_denom_[i];
        }
    }

    void step(std::vector<complex>& psi) {
        apply_hamiltonian(psi, pot_, D_, dx_, rhs_);
        const complex half_i(0.0, 0.5 * dt_);
        for (std::size_t i = 0; i < n_; ++i) rhs_[i] = psi[i] - half_i * rhs_[i];
        // Thomas elimination; psi is reused as the d' scratch array.
        psi[0] = rhs_[0] * inv_denom_[0];
        for (std::size_t i = 1; i < n_; ++i) psi[i] = (rhs_[i] - off_ * psi[i - 1]) * inv_denom_[i];
        for (std::size_t i = n_ - 1; i-- > 0;) psi[i] -= cprime_[i] * psi[i + 1];
    }

private:
    std::size_t n_;
    double dx_;
    double D_;
    double dt_;
    std::vector<double> pot_;
    complex off_;
    std::vector<complex> cprime_;
    std::vector<complex> inv_denom_;
    std::vector<complex> rhs_;
};

void check_finite(const std::vector<complex>& psi, std::size_t step) {
    for (const auto& a : psi) {
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
            std::ostringstream msg;
            msg << "non-finite amplitude after step " << step;
            throw Error(ErrorKind::instability_detected, msg.str());
        }
    }
}

class TrajectoryRecorder {
public:
    TrajectoryRecorder(const WaveFunction& psi0, const EvolutionConfig& cfg) : cfg_(cfg) {
        out_.states.push_back(psi0);
        check_boundary(psi0);
    }

    void record(const WaveFunction& psi, std::size_t step) {
        const bool last = step == cfg_.n_steps;
        const bool sampled = cfg_.sample_every > 0 && step % cfg_.sample_every == 0;
        if (last || sampled) {
            out_.states.push_back(psi);
            check_boundary(psi);
        }
    }

    Trajectory take() { return std::move(out_); }

private:
    void check_boundary(const WaveFunction& psi) {
        if (warned_ || psi.size() == 0) return;
        const double scale = std::sqrt(psi.norm_squared());
        if (!(scale > 0.0)) return;
        const double edge = std::max(std::abs(psi.amplitudes.front()), std::abs(psi.amplitudes.back())) / scale;
        if (edge > cfg_.boundary_tolerance) {
            std::ostringstream msg;
            msg << "boundary amplitude " << edge << " exceeds " << cfg_.boundary_tolerance << " at time "
                << psi.time << "; widen the domain";
            out_.warnings.push_back(msg.str());
            warned_ = true;
        }
    }

    const EvolutionConfig& cfg_;
    Trajectory out_;
    bool warned_ = false;
};

}  // namespace

void EvolutionConfig::validate() const {
    if (!(D > 0.0) || !std::isfinite(D)) throw Error(ErrorKind::invalid_argument, "D must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::invalid_argument, "dt must be positive");
}

Trajectory evolve_real(const WaveFunction& psi0, const PotentialGrid& pot, const EvolutionConfig& cfg) {
    cfg.validate();
    if (cfg.mode != TimeMode::real) throw Error(ErrorKind::invalid_argument, "evolve_real needs mode=real");
    require_same_grid(psi0.grid, pot.grid);
    if (!psi0.is_normalized(1e-8)) throw Error(ErrorKind::invalid_argument, "real-time evolution needs a normalized state");

    TrajectoryRecorder rec(psi0, cfg);
    if (cfg.n_steps == 0) return rec.take();

    CrankNicolsonStepper stepper(pot, cfg.D, cfg.dt);
    WaveFunction psi = psi0;
    for (std::size_t step = 1; step <= cfg.n_steps; ++step) {
        stepper.step(psi.amplitudes);
        check_finite(psi.amplitudes, step);
        psi.time = psi0.time + static_cast<double>(step) * cfg.dt;
        rec.record(psi, step);
    }
    return rec.take();
}

Trajectory evolve_imaginary(const WaveFunction& psi0, const PotentialGrid& pot, const EvolutionConfig& cfg) {
    cfg.validate();
    if (cfg.mode != TimeMode::imaginary)
        throw Error(ErrorKind::invalid_argument, "evolve_imaginary needs mode=imaginary");
    require_same_grid(psi0.grid, pot.grid);

    TrajectoryRecorder rec(psi0, cfg);
    if (cfg.n_steps == 0) return rec.take();

    SineKineticPropagator kinetic(psi0.size(), psi0.grid.dx(), cfg.D, cfg.dt);
    std::vector<double> half_potential(pot.size());
    for (std::size_t i = 0; i < pot.size(); ++i) half_potential[i] = std::exp(-0.5 * cfg.dt * pot.values[i]);

    WaveFunction psi = psi0;
    for (std::size_t step = 1; step <= cfg.n_steps; ++step) {
        auto& a = psi.amplitudes;
        for (std::size_t i = 0; i < a.size(); ++i) a[i] *= half_potential[i];
        kinetic.apply(a);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] *= half_potential[i];
        check_finite(a, step);
        if (cfg.renormalize_each_step) psi.normalize();
        psi.time = psi0.time + static_cast<double>(step) * cfg.dt;
        rec.record(psi, step);
    }
    return rec.take();
}

Trajectory evolve(const WaveFunction& psi0, const PotentialGrid& pot, const EvolutionConfig& cfg) {
    return cfg.mode == TimeMode::real ? evolve_real(psi0, pot, cfg) : evolve_imaginary(psi0, pot, cfg);
}

double free_packet_width(double sigma0, double D, double t) {
    if (!(sigma0 > 0.0) || !(D > 0.0) || !(t >= 0.0))
        throw Error(ErrorKind::invalid_argument, "free_packet_width needs sigma0 > 0, D > 0, t >= 0");
    const double r = D * t / (sigma0 * sigma0);
    return sigma0 * std::sqrt(1.0 + r * r);
}

double diffusion_green_function(std::span<const double> x, double tau, double D) {
    if (!(tau > 0.0) || !(D > 0.0)) throw Error(ErrorKind::invalid_argument, "heat kernel needs tau > 0, D > 0");
    if (x.empty()) throw Error(ErrorKind::invalid_argument, "heat kernel needs dim >= 1");
    double r2 = 0.0;
    for (double xi : x) r2 += xi * xi;
    const double four_dt = 4.0 * D * tau;
    const double dim = static_cast<double>(x.size());
    return std::pow(std::numbers::pi * four_dt, -0.5 * dim) * std::exp(-r2 / four_dt);
}

double diffusion_green_function(double x, double tau, double D) {
    return diffusion_green_function(std::span<const double>(&x, 1), tau, D);
}

double density_width(const WaveFunction& psi) {
    double mass = 0.0, first = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const double p = std::norm(psi.amplitudes[i]);
        mass += p;
        first += p * psi.grid.x(i);
    }
    const double mean = first / mass;
    double second = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const double u = psi.grid.x(i) - mean;
        second += std::norm(psi.amplitudes[i]) * u * u;
    }
    return std::sqrt(second / mass);
}

}  // namespace qdyn
