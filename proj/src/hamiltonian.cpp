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

#include "qdyn/hamiltonian.hpp"

#include "qdyn/error.hpp"

namespace qdyn {

void apply_hamiltonian(std::span<const complex> psi, std::span<const double> pot, double D, double dx,
                       std::span<complex> out) {
    const std::size_t n = psi.size();
    const double c = D / (dx * dx);
    for (std::size_t i = 0; i < n; ++i) {
        const complex left = i > 0 ? psi[i - 1] : complex{};
        const complex right = i + 1 < n ? psi[i + 1] : complex{};
        out[i] = -c * (right - 2.0 * psi[i] + left) + pot[i] * psi[i];
    }
}

WaveFunction apply_hamiltonian(const WaveFunction& psi, const PotentialGrid& pot, double D) {
    require_same_grid(psi.grid, pot.grid);
    WaveFunction out{psi.grid, std::vector<complex>(psi.size()), psi.time};
    apply_hamiltonian(psi.amplitudes, pot.values, D, psi.grid.dx(), out.amplitudes);
    return out;
}

complex inner_product(const WaveFunction& psi, const WaveFunction& phi) {
    require_same_grid(psi.grid, phi.grid);
    complex sum{};
    for (std::size_t i = 0; i < psi.size(); ++i) sum += std::conj(psi.amplitudes[i]) * phi.amplitudes[i];
    return sum * psi.grid.dx();
}

double rayleigh_quotient(const WaveFunction& psi, const PotentialGrid& pot, double D) {
    const WaveFunction h_psi = apply_hamiltonian(psi, pot, D);
    return inner_product(psi, h_psi).real() / psi.norm_squared();
}

}  // namespace qdyn
