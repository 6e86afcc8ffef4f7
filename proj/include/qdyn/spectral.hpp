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
#include <vector>

#include "qdyn/evolution.hpp"
#include "qdyn/grid.hpp"

namespace qdyn {

inline constexpr std::size_t default_spectrum_levels = 16;

/// Lowest eigenpairs of the finite-difference Hamiltonian.
///
/// Eigenstates are real, orthonormal under the dx-weighted inner product and
/// sign-fixed so that their first non-negligible sample is positive.
struct Spectrum {
    Grid grid;
    double D = 1.0;
    std::vector<double> energies;                 // ascending
    std::vector<std::vector<double>> eigenstates;  // eigenstates[n][i] = phi_n(x_i)

    std::size_t size() const noexcept { return energies.size(); }
    WaveFunction state(std::size_t n) const;
};

struct StateExpansion {
    std::vector<complex> coefficients;

    std::size_t size() const noexcept { return coefficients.size(); }
    double norm_squared() const;
};

struct EnergySplit {
    double kinetic = 0.0;
    double potential = 0.0;
    double total = 0.0;
};

struct GroundStateLimit {
    std::size_t index = 0;
    double dominance_tau = 0.0;  // +inf when a degenerate level never separates
};

/// Lowest k eigenpairs, 1 <= k <= n_points - 2. Backed by LAPACK dstevr.
Spectrum eigensolve(const PotentialGrid& pot, double D, std::size_t k = default_spectrum_levels);

/// c_n = <phi_n|psi>.
StateExpansion expand_state(const WaveFunction& psi, const Spectrum& spec);

/// Sum_n c_n phi_n on the spectrum grid.
WaveFunction synthesize(const StateExpansion& expansion, const Spectrum& spec);

/// Per-level propagation factor exp(-i E t) for complex time t.
///
/// Real-time factors use t on the real axis; imaginary-time factors are the
/// same expression at t = -i tau.
complex propagation_factor(double energy, complex t);

/// Real mode multiplies c_n by exp(-i E_n t); imaginary mode by exp(-E_n tau).
StateExpansion spectral_propagate(const StateExpansion& expansion, std::span<const double> energies, double time,
                                  TimeMode mode);
StateExpansion spectral_propagate(const StateExpansion& expansion, const Spectrum& spec, double time, TimeMode mode);

/// Lowest level with a nonzero coefficient and the smallest tau after which its
/// term exceeds every other term by a factor of 100.
GroundStateLimit ground_state_limit(const StateExpansion& expansion, std::span<const double> energies);
GroundStateLimit ground_state_limit(const StateExpansion& expansion, const Spectrum& spec);

/// E_d = <psi|-D d^2|psi>, E_p = <psi|V|psi>, both divided by <psi|psi>.
EnergySplit energy_decomposition(const WaveFunction& psi, const PotentialGrid& pot, double D);

/// exp(-E_k tau) / Sum_i exp(-E_i tau), computed with the minimum energy
/// subtracted first.
std::vector<double> occupation_probabilities(std::span<const double> energies, double tau);

/// 1 / (1 + exp(-delta_e tau)); bit-identical to the first entry of
/// occupation_probabilities({0, delta_e}, tau).
double two_level_probability(double delta_e, double tau);

/// Born-rule weights |c_n exp(-E_n tau)|^2 / Sum, reported next to the energy
/// Softmax for comparison. Unlike occupation_probabilities these keep the
/// coefficients and decay at twice the rate.
std::vector<double> born_weights(const StateExpansion& expansion, std::span<const double> energies, double tau);

}  // namespace qdyn
