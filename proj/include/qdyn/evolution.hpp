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
#include <span>
#include <string>
#include <vector>

#include "qdyn/grid.hpp"

namespace qdyn {

enum class TimeMode { real, imaginary };

struct EvolutionConfig {
    double D = 1.0;
    double dt = 1e-3;
    std::size_t n_steps = 0;
    TimeMode mode = TimeMode::imaginary;
    bool renormalize_each_step = true;  // imaginary mode only
    // Keep every k-th state; 0 keeps only the initial and final states.
    std::size_t sample_every = 0;
    // Amplitude at either wall above this (relative to the state norm) adds a warning.
    double boundary_tolerance = 1e-12;

    void validate() const;
};

struct Trajectory {
    std::vector<WaveFunction> states;  // first entry is the input state, last is the final state
    std::vector<std::string> warnings;

    const WaveFunction& final_state() const { return states.back(); }
};

/// Real-time evolution i dpsi/dt = H psi.
///
/// Each step solves the Crank-Nicolson system (1 + i dt H/2) psi' = (1 - i dt H/2) psi
/// with a tridiagonal elimination. The step is unitary, so the norm is preserved
/// to roundoff. Requires a normalized input and cfg.mode == real.
Trajectory evolve_real(const WaveFunction& psi0, const PotentialGrid& pot, const EvolutionConfig& cfg);

/// Imaginary-time evolution dpsi/dtau = (D d^2/dx^2 - V) psi.
///
/// Strang splitting exp(-V dtau/2) exp(D L dtau) exp(-V dtau/2), where L is the
/// finite-difference Laplacian with zero walls. L is diagonal in the type-I
/// discrete sine basis, so the kinetic factor is applied exactly through two
/// DSTs. With renormalize_each_step the state is rescaled to unit norm after
/// every step; otherwise the raw decaying amplitudes are kept.
Trajectory evolve_imaginary(const WaveFunction& psi0, const PotentialGrid& pot, const EvolutionConfig& cfg);

/// Dispatches on cfg.mode.
Trajectory evolve(const WaveFunction& psi0, const PotentialGrid& pot, const EvolutionConfig& cfg);

/// Density width of a free Gaussian packet under i dpsi/dt = -D psi'':
/// sigma0 * sqrt(1 + (D t / sigma0^2)^2).
double free_packet_width(double sigma0, double D, double t);

/// Heat kernel (4 pi D tau)^(-dim/2) exp(-|x|^2 / (4 D tau)), dim = x.size().
double diffusion_green_function(std::span<const double> x, double tau, double D);
double diffusion_green_function(double x, double tau, double D);

/// Standard deviation of |psi|^2 about its mean position.
double density_width(const WaveFunction& psi);

}  // namespace qdyn
