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
#include <numbers>
#include <random>

#include "qdyn/error.hpp"
#include "qdyn/evolution.hpp"
#include "qdyn/hamiltonian.hpp"
#include "qdyn/spectral.hpp"

using namespace qdyn;

namespace {

EvolutionConfig real_cfg(double D, double dt, std::size_t steps) {
    EvolutionConfig cfg;
    cfg.mode = TimeMode::real;
    cfg.D = D;
    cfg.dt = dt;
    cfg.n_steps = steps;
    return cfg;
}

EvolutionConfig imag_cfg(double D, double dt, std::size_t steps, bool renormalize) {
    EvolutionConfig cfg;
    cfg.mode = TimeMode::imaginary;
    cfg.D = D;
    cfg.dt = dt;
    cfg.n_steps = steps;
    cfg.renormalize_each_step = renormalize;
    return cfg;
}

// Variance of the exact free packet |psi(x,t)|^2 by trapezoidal quadrature of
// the closed-form solution exp(-x^2 / (4 (sigma0^2 + i D t))).
double quadrature_width(double sigma0, double D, double t) {
    const complex a = 4.0 * complex(sigma0 * sigma0, D * t);
    const double L = 60.0 * (sigma0 + D * t / sigma0);
    const int n = 200000;
    const double h = 2.0 * L / n;
    double m0 = 0.0, m2 = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = -L + i * h;
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        const double p = std::norm(std::exp(-x * x / a));
        m0 += w * p;
        m2 += w * p * x * x;
    }
    return std::sqrt(m2 / m0);
}

// Simpson rule on [0, R] for the radial heat-kernel mass in `dim` dimensions.
double radial_kernel_mass(int dim, double tau, double D) {
    const double surface[] = {0.0, 2.0, 2.0 * std::numbers::pi, 4.0 * std::numbers::pi};
    const double R = 20.0 * std::sqrt(2.0 * D * tau);
    const int n = 20000;
    const double h = R / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double r = i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const double g = std::pow(4.0 * std::numbers::pi * D * tau, -0.5 * dim) * std::exp(-r * r / (4.0 * D * tau));
        sum += w * surface[dim] * std::pow(r, dim - 1) * g;
    }
    return sum * h / 3.0;
}

}  // namespace

TEST_CASE("zero steps return the input unchanged") {
    const Grid g = build_grid(-10.0, 10.0, 201);
    const auto psi0 = gaussian_packet(g, 0.5, 1.0, 1.0);
    const auto pot = discretize_potential([](double x) { return x * x; }, g);
    for (auto mode : {TimeMode::real, TimeMode::imaginary}) {
        EvolutionConfig cfg = mode == TimeMode::real ? real_cfg(1.0, 1e-3, 0) : imag_cfg(1.0, 1e-3, 0, true);
        const auto traj = evolve(psi0, pot, cfg);
        REQUIRE(traj.states.size() == 1);
        CHECK(traj.final_state().amplitudes == psi0.amplitudes);
        CHECK(traj.final_state().time == psi0.time);
    }
}

TEST_CASE("config validation") {
    const Grid g = build_grid(-1.0, 1.0, 11);
    const auto psi0 = gaussian_packet(g, 0.0, 0.2);
    const auto pot = zero_potential(g);
    auto expect_invalid = [&](EvolutionConfig cfg) {
        try {
            evolve(psi0, pot, cfg);
            FAIL("expected invalid-argument");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::invalid_argument);
        }
    };
    expect_invalid(real_cfg(0.0, 1e-3, 1));
    expect_invalid(real_cfg(1.0, -1e-3, 1));
    expect_invalid(imag_cfg(-1.0, 1e-3, 1, true));

    auto unnormalized = psi0;
    for (auto& a : unnormalized.amplitudes) a *= 2.0;
    CHECK_THROWS_AS(evolve_real(unnormalized, pot, real_cfg(1.0, 1e-3, 1)), Error);
    CHECK_THROWS_AS(evolve_real(psi0, pot, imag_cfg(1.0, 1e-3, 1, true)), Error);
}

TEST_CASE("real-time evolution preserves the norm") {
    const Grid g = build_grid(-20.0, 20.0, 801);
    const auto pot = discretize_potential([](double x) { return 0.5 * x * x - 2.0 * std::cos(x); }, g);
    const auto psi0 = gaussian_packet(g, -2.0, 0.7, 1.5);

    auto cfg = real_cfg(0.8, 1e-3, 200);
    cfg.sample_every = 1;
    const auto traj = evolve_real(psi0, pot, cfg);
    for (std::size_t s = 1; s < traj.states.size(); ++s)
        CHECK(std::abs(traj.states[s].norm_squared() - traj.states[s - 1].norm_squared()) <= 1e-10);

    const auto long_run = evolve_real(psi0, pot, real_cfg(0.8, 1e-3, 10000));
    CHECK(std::abs(long_run.final_state().norm_squared() - 1.0) <= 1e-6);
    CHECK(long_run.final_state().time == doctest::Approx(10.0));
}

TEST_CASE("free_packet_width analytic values") {
    CHECK(free_packet_width(1.0, 1.0, 0.0) == 1.0);
    CHECK(free_packet_width(1.0, 1.0, 1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    // Linear growth D t / sigma0 for large t.
    const double t = 1e6;
    CHECK(free_packet_width(1.0, 1.0, t) / t == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(free_packet_width(2.0, 0.5, t) / (0.5 * t / 2.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(free_packet_width(0.0, 1.0, 1.0), Error);
    CHECK_THROWS_AS(free_packet_width(1.0, 1.0, -1.0), Error);
}

TEST_CASE("free_packet_width agrees with quadrature of the exact free solution") {
    for (double t : {0.0, 0.5, 1.0, 3.0, 7.5}) {
        CHECK(free_packet_width(1.0, 1.0, t) == doctest::Approx(quadrature_width(1.0, 1.0, t)).epsilon(1e-6));
        CHECK(free_packet_width(0.8, 0.5, t) == doctest::Approx(quadrature_width(0.8, 0.5, t)).epsilon(1e-6));
    }
}

TEST_CASE("wave packet dispersion matches the analytic width") {
    const double sigma0 = 1.0, D = 1.0, L = 60.0;
    const Grid g = build_grid(-L, L, 4801);
    const auto psi0 = gaussian_packet(g, 0.0, sigma0);
    auto cfg = real_cfg(D, 5e-3, 1600);
    cfg.sample_every = 100;
    const auto traj = evolve_real(psi0, zero_potential(g), cfg);
    for (const auto& psi : traj.states) {
        const double analytic = free_packet_width(sigma0, D, psi.time);
        if (6.0 * analytic > L) break;
        CHECK(density_width(psi) == doctest::Approx(analytic).epsilon(0.01));
    }
}

TEST_CASE("constant-slope potential only adds a global phase in real time") {
    // Crank-Nicolson keeps this up to O(dt^2).
    const Grid g = build_grid(-30.0, 30.0, 1201);
    const auto psi0 = gaussian_packet(g, 0.0, 1.0, 0.5);
    auto zeta = [](double x) { return 0.25 * x * x; };
    const auto slope_pot = taylor_potential(zeta, g, 2.0, 1);
    auto density_gap = [&](double dt) {
        const auto steps = static_cast<std::size_t>(std::lround(2.0 / dt));
        const auto free = evolve_real(psi0, zero_potential(g), real_cfg(1.0, dt, steps)).final_state();
        const auto sloped = evolve_real(psi0, slope_pot, real_cfg(1.0, dt, steps)).final_state();
        double worst = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            worst = std::max(worst, std::abs(std::norm(sloped.amplitudes[i]) - std::norm(free.amplitudes[i])));
        return worst;
    };
    const double coarse = density_gap(2e-3), fine = density_gap(1e-3);
    CHECK(fine < 1e-5);
    CHECK(coarse / fine > 3.5);
    CHECK(coarse / fine < 4.5);
}

TEST_CASE("stationary state keeps its density") {
    const Grid g = build_grid(-10.0, 10.0, 1001);
    const auto pot = discretize_potential([](double x) { return x * x; }, g);
    const auto spec = eigensolve(pot, 1.0, 1);
    const auto phi0 = spec.state(0);
    auto cfg = real_cfg(1.0, 1e-2, 500);
    cfg.sample_every = 50;
    const auto traj = evolve_real(phi0, pot, cfg);
    for (const auto& psi : traj.states)
        for (std::size_t i = 0; i < g.size(); ++i)
            CHECK(std::abs(std::norm(psi.amplitudes[i]) - std::norm(phi0.amplitudes[i])) <= 1e-6);
}

TEST_CASE("imaginary-time evolution converges to the oscillator ground state") {
    const Grid g = build_grid(-10.0, 10.0, 2001);
    const auto pot = discretize_potential([](double x) { return x * x; }, g);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    auto psi0 = make_wavefunction(g, [&](double) { return complex(u(rng), 0.0); });
    psi0.normalize();

    const auto traj = evolve_imaginary(psi0, pot, imag_cfg(1.0, 1e-3, 20000, true));
    auto exact = make_wavefunction(g, [](double x) { return complex(std::exp(-0.5 * x * x), 0.0); });
    exact.normalize();
    const auto& psi = traj.final_state();
    CHECK(std::abs(inner_product(psi, exact)) >= 0.9999);
    CHECK(rayleigh_quotient(psi, pot, 1.0) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(psi.time == doctest::Approx(20.0));
}

TEST_CASE("imaginary-time rayleigh quotient is non-increasing") {
    const Grid g = build_grid(-8.0, 8.0, 801);
    const auto pot = discretize_potential([](double x) { return 0.25 * std::pow(x * x - 4.0, 2) + 0.3 * x; }, g);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto psi0 = make_wavefunction(g, [&](double x) { return complex(std::exp(-0.1 * x * x) * (1.0 + u(rng)), 0.0); });
    psi0.normalize();
    auto cfg = imag_cfg(0.5, 1e-3, 3000, true);
    cfg.sample_every = 1;
    const auto traj = evolve_imaginary(psi0, pot, cfg);
    double prev = rayleigh_quotient(traj.states.front(), pot, cfg.D);
    for (std::size_t s = 1; s < traj.states.size(); ++s) {
        const double e = rayleigh_quotient(traj.states[s], pot, cfg.D);
        CHECK(e <= prev + 1e-8);
        prev = e;
    }
}

TEST_CASE("two-level mixture decays at the spectral rate") {
    const Grid g = build_grid(-10.0, 10.0, 1001);
    const auto pot = discretize_potential([](double x) { return x * x; }, g);
    const auto spec = eigensolve(pot, 1.0, 2);
    const double c0 = 0.6, c1 = 0.8;
    const StateExpansion mix{{c0, c1}};
    const auto psi0 = synthesize(mix, spec);

    const double tau = 1.0;
    const auto psi = evolve_imaginary(psi0, pot, imag_cfg(1.0, 1e-4, 10000, false)).final_state();
    const auto c = expand_state(psi, spec);
    const double ratio = c.coefficients[1].real() / c.coefficients[0].real();
    const double expected = (c1 / c0) * std::exp(-(spec.energies[1] - spec.energies[0]) * tau);
    CHECK(std::abs(ratio - expected) <= 1e-6);
}

TEST_CASE("free imaginary-time evolution of a spike is the heat kernel") {
    const double D = 1.0, tau = 1.0;
    const Grid g = build_grid(-20.0, 20.0, 4001);
    WaveFunction spike{g, std::vector<complex>(g.size()), 0.0};
    spike.amplitudes[g.size() / 2] = 1.0 / g.dx();
    const auto psi = evolve_imaginary(spike, zero_potential(g), imag_cfg(D, 1e-3, 1000, false)).final_state();
    double l1 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        l1 += std::abs(psi.amplitudes[i].real() - diffusion_green_function(g.x(i), tau, D)) * g.dx();
    CHECK(l1 <= 1e-3);
}

TEST_CASE("constant-slope potential is a uniform decay in imaginary time") {
    const Grid g = build_grid(-15.0, 15.0, 601);
    const auto psi0 = gaussian_packet(g, 0.0, 1.0);
    const auto pot = taylor_potential([](double x) { return std::sin(x); }, g, 0.0, 1);  // slope 1
    const auto free = evolve_imaginary(psi0, zero_potential(g), imag_cfg(1.0, 1e-2, 100, false)).final_state();
    const auto sloped = evolve_imaginary(psi0, pot, imag_cfg(1.0, 1e-2, 100, false)).final_state();
    const double factor = std::exp(-1.0 * 1.0);
    for (std::size_t i = 0; i < g.size(); i += 20)
        CHECK(sloped.amplitudes[i].real() == doctest::Approx(factor * free.amplitudes[i].real()).epsilon(1e-8));
}

TEST_CASE("instability and boundary diagnostics") {
    const Grid g = build_grid(-5.0, 5.0, 101);
    const auto psi0 = gaussian_packet(g, 0.0, 0.5);
    const auto deep = discretize_potential([](double) { return -1e6; }, g);
    try {
        evolve_imaginary(psi0, deep, imag_cfg(1.0, 1.0, 5, false));
        FAIL("expected instability-detected");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::instability_detected);
    }

    const auto wide = gaussian_packet(g, 0.0, 2.0);
    const auto traj = evolve_real(wide, zero_potential(g), real_cfg(1.0, 1e-2, 10));
    CHECK_FALSE(traj.warnings.empty());

    const Grid big = build_grid(-30.0, 30.0, 601);
    const auto quiet = evolve_real(gaussian_packet(big, 0.0, 1.0), zero_potential(big), real_cfg(1.0, 1e-2, 10));
    CHECK(quiet.warnings.empty());
}

TEST_CASE("trajectory sampling keeps the initial and final states") {
    const Grid g = build_grid(-10.0, 10.0, 201);
    const auto psi0 = gaussian_packet(g, 0.0, 1.0);
    auto cfg = imag_cfg(1.0, 1e-2, 25, true);
    cfg.sample_every = 10;
    const auto traj = evolve_imaginary(psi0, zero_potential(g), cfg);
    REQUIRE(traj.states.size() == 4);  // steps 0, 10, 20, 25
    CHECK(traj.states[1].time == doctest::Approx(0.1));
    CHECK(traj.states[3].time == doctest::Approx(0.25));
}

TEST_CASE("heat kernel") {
    const double D = 0.7, tau = 1.3;
    CHECK(diffusion_green_function(0.0, tau, D) == doctest::Approx(1.0 / std::sqrt(4.0 * std::numbers::pi * D * tau)));
    for (double x : {0.1, 0.5, 1.7, 4.0}) CHECK(diffusion_green_function(x, tau, D) == diffusion_green_function(-x, tau, D));
    for (int dim = 1; dim <= 3; ++dim) CHECK(std::abs(radial_kernel_mass(dim, tau, D) - 1.0) <= 1e-6);

    // Same normalization through the implementation, by trapezoid on a line.
    double m0 = 0.0, m2 = 0.0;
    const double h = 1e-3;
    for (int i = -40000; i <= 40000; ++i) {
        const double x = i * h;
        const double gval = diffusion_green_function(x, tau, D);
        m0 += gval * h;
        m2 += gval * x * x * h;
    }
    CHECK(std::abs(m0 - 1.0) <= 1e-6);
    CHECK(m2 == doctest::Approx(2.0 * D * tau).epsilon(1e-6));

    const std::vector<double> x3{0.3, -0.2, 0.5};
    const double r2 = 0.09 + 0.04 + 0.25;
    CHECK(diffusion_green_function(x3, tau, D) ==
          doctest::Approx(std::pow(4.0 * std::numbers::pi * D * tau, -1.5) * std::exp(-r2 / (4.0 * D * tau))));
    CHECK_THROWS_AS(diffusion_green_function(0.0, 0.0, D), Error);
}
