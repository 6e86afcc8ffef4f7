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

#include "qdyn/spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qdyn/error.hpp"
#include "qdyn/hamiltonian.hpp"

namespace qdyn {

WaveFunction Spectrum::state(std::size_t n) const {
    WaveFunction psi{grid, std::vector<complex>(grid.size()), 0.0};
    const auto& phi = eigenstates.at(n);
    for (std::size_t i = 0; i < phi.size(); ++i) psi.amplitudes[i] = phi[i];
    return psi;
}

double StateExpansion::norm_squared() const {
    double sum = 0.0;
    for (const auto& c : coefficients) sum += std::norm(c);
    return sum;
}

Spectrum eigensolve(const PotentialGrid& pot, double D, std::size_t k) {
    const std::size_t n = pot.size();
    if (!(D > 0.0) || !std::isfinite(D)) throw Error(ErrorKind::invalid_argument, "D must be positive");
    // The zero-wall operator has n eigenpairs; k = n gives a complete basis.
    if (k < 1 || k > n) {
        std::ostringstream msg;
        msg << "requested " << k << " levels on a grid of " << n << " points";
        throw Error(ErrorKind::invalid_argument, msg.str());
    }

    const double dx = pot.grid.dx();
    const double c = D / (dx * dx);
    std::vector<double> diag(n), off(n > 1 ? n - 1 : 1, -c);
    for (std::size_t i = 0; i < n; ++i) diag[i] = 2.0 * c + pot.values[i];

    const auto ni = static_cast<lapack_int>(n);
    const auto ki = static_cast<lapack_int>(k);
    lapack_int found = 0;
    std::vector<double> w(n);
    std::vector<double> z(n * k);
    std::vector<lapack_int> isuppz(2 * k);
    const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', ni, diag.data(), off.data(), 0.0, 0.0, 1, ki,
                                           0.0, &found, w.data(), z.data(), ni, isuppz.data());
    if (info != 0 || found != ki) {
        std::ostringstream msg;
        msg << "dstevr returned info=" << info << ", found " << found << " of " << k << " eigenpairs";
        throw Error(ErrorKind::convergence_failure, msg.str());
    }

    Spectrum spec{pot.grid, D, std::vector<double>(w.begin(), w.begin() + ki), {}};
    spec.eigenstates.reserve(k);
    const double scale = 1.0 / std::sqrt(dx);
    for (std::size_t m = 0; m < k; ++m) {
        std::vector<double> phi(z.begin() + static_cast<std::ptrdiff_t>(m * n),
                                z.begin() + static_cast<std::ptrdiff_t>((m + 1) * n));
        double peak = 0.0;
        for (double v : phi) peak = std::max(peak, std::abs(v));
        double sign = 1.0;
        for (double v : phi) {
            if (std::abs(v) > 1e-8 * peak) {
                sign = v > 0.0 ? 1.0 : -1.0;
                break;
            }
        }
        for (double& v : phi) v *= sign * scale;
        spec.eigenstates.push_back(std::move(phi));
    }
    return spec;
}

StateExpansion expand_state(const WaveFunction& psi, const Spectrum& spec) {
    require_same_grid(psi.grid, spec.grid);
    const double dx = psi.grid.dx();
    StateExpansion out{std::vector<complex>(spec.size())};
    for (std::size_t m = 0; m < spec.size(); ++m) {
        const auto& phi = spec.eigenstates[m];
        complex sum{};
        for (std::size_t i = 0; i < phi.size(); ++i) sum += phi[i] * psi.amplitudes[i];
        out.coefficients[m] = sum * dx;
    }
    return out;
}

WaveFunction synthesize(const StateExpansion& expansion, const Spectrum& spec) {
    if (expansion.size() != spec.size())
        throw Error(ErrorKind::invalid_argument, "expansion and spectrum sizes differ");
    WaveFunction psi{spec.grid, std::vector<complex>(spec.grid.size()), 0.0};
    for (std::size_t m = 0; m < spec.size(); ++m) {
        const auto& phi = spec.eigenstates[m];
        for (std::size_t i = 0; i < phi.size(); ++i) psi.amplitudes[i] += expansion.coefficients[m] * phi[i];
    }
    return psi;
}

complex propagation_factor(double energy, complex t) { return std::exp(complex(0.0, -energy) * t); }

StateExpansion spectral_propagate(const StateExpansion& expansion, std::span<const double> energies, double time,
                                  TimeMode mode) {
    if (expansion.size() != energies.size())
        throw Error(ErrorKind::invalid_argument, "expansion and energy list sizes differ");
    if (mode == TimeMode::imaginary && !(time >= 0.0))
        throw Error(ErrorKind::invalid_argument, "imaginary-time propagation needs tau >= 0");
    const complex t = mode == TimeMode::real ? complex(time, 0.0) : complex(0.0, -time);
    StateExpansion out = expansion;
    for (std::size_t m = 0; m < out.size(); ++m) out.coefficients[m] *= propagation_factor(energies[m], t);
    return out;
}

StateExpansion spectral_propagate(const StateExpansion& expansion, const Spectrum& spec, double time, TimeMode mode) {
    return spectral_propagate(expansion, spec.energies, time, mode);
}

GroundStateLimit ground_state_limit(const StateExpansion& expansion, std::span<const double> energies) {
    if (expansion.size() != energies.size())
        throw Error(ErrorKind::invalid_argument, "expansion and energy list sizes differ");
    std::size_t lead = expansion.size();
    for (std::size_t m = 0; m < expansion.size(); ++m) {
        if (expansion.coefficients[m] != complex{}) {
            lead = m;
            break;
        }
    }
    if (lead == expansion.size()) throw Error(ErrorKind::empty_expansion, "all coefficients are zero");

    constexpr double dominance_ratio = 100.0;
    const double lead_mag = std::abs(expansion.coefficients[lead]);
    const double e_lead = energies[lead];
    double tau = 0.0;
    for (std::size_t m = lead + 1; m < expansion.size(); ++m) {
        const double mag = std::abs(expansion.coefficients[m]);
        if (mag == 0.0) continue;
        const double gap = energies[m] - e_lead;
        if (!(gap > 1e-12 * std::max(1.0, std::abs(e_lead)))) return {lead, std::numeric_limits<double>::infinity()};
        // |c_lead| e^{-E_lead tau} = 100 |c_m| e^{-E_m tau}
        tau = std::max(tau, std::log(dominance_ratio * mag / lead_mag) / gap);
    }
    return {lead, tau};
}

GroundStateLimit ground_state_limit(const StateExpansion& expansion, const Spectrum& spec) {
    return ground_state_limit(expansion, spec.energies);
}

EnergySplit energy_decomposition(const WaveFunction& psi, const PotentialGrid& pot, double D) {
    require_same_grid(psi.grid, pot.grid);
    const std::size_t n = psi.size();
    const double dx = psi.grid.dx();
    std::vector<complex> kin(n);
    const std::vector<double> no_potential(n, 0.0);
    apply_hamiltonian(psi.amplitudes, no_potential, D, dx, kin);

    double kinetic = 0.0, potential = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        kinetic += (std::conj(psi.amplitudes[i]) * kin[i]).real();
        potential += pot.values[i] * std::norm(psi.amplitudes[i]);
        mass += std::norm(psi.amplitudes[i]);
    }
    if (!(mass > 0.0)) throw Error(ErrorKind::invalid_argument, "energy of a zero state");
    EnergySplit split;
    split.kinetic = kinetic / mass;
    split.potential = potential / mass;
    split.total = split.kinetic + split.potential;
    return split;
}

std::vector<double> occupation_probabilities(std::span<const double> energies, double tau) {
    if (energies.empty()) throw Error(ErrorKind::invalid_argument, "occupation needs at least one level");
    const double e_min = *std::min_element(energies.begin(), energies.end());
    std::vector<double> p(energies.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < energies.size(); ++k) {
        p[k] = std::exp(-(energies[k] - e_min) * tau);
        sum += p[k];
    }
    for (double& v : p) v /= sum;
    return p;
}

double two_level_probability(double delta_e, double tau) {
    // Same operation order as occupation_probabilities({0, delta_e}, tau)[0].
    if (delta_e >= 0.0) {
        const double upper = std::exp(-delta_e * tau);
        return 1.0 / (1.0 + upper);
    }
    const double lower = std::exp(delta_e * tau);
    return lower / (lower + 1.0);
}

std::vector<double> born_weights(const StateExpansion& expansion, std::span<const double> energies, double tau) {
    if (expansion.size() != energies.size() || energies.empty())
        throw Error(ErrorKind::invalid_argument, "expansion and energy list sizes differ");
    const double e_min = *std::min_element(energies.begin(), energies.end());
    std::vector<double> w(energies.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < energies.size(); ++k) {
        const double decay = std::exp(-(energies[k] - e_min) * tau);
        w[k] = std::norm(expansion.coefficients[k]) * decay * decay;
        sum += w[k];
    }
    if (!(sum > 0.0)) throw Error(ErrorKind::empty_expansion, "all coefficients are zero");
    for (double& v : w) v /= sum;
    return w;
}

}  // namespace qdyn
