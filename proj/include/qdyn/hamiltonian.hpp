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

#include <span>

#include "qdyn/grid.hpp"

namespace qdyn {

/// H psi for H = -D d^2/dx^2 + V on the grid.
///
/// Second-order central differences; neighbours outside the grid are zero
/// (hard walls just beyond both endpoints).
WaveFunction apply_hamiltonian(const WaveFunction& psi, const PotentialGrid& pot, double D);

/// Same stencil on raw amplitudes; `out` must have the size of `psi`.
void apply_hamiltonian(std::span<const complex> psi, std::span<const double> pot, double D, double dx,
                       std::span<complex> out);

// <psi|phi> with dx weights.
complex inner_product(const WaveFunction& psi, const WaveFunction& phi);

// <psi|H|psi> / <psi|psi>.
double rayleigh_quotient(const WaveFunction& psi, const PotentialGrid& pot, double D);

}  // namespace qdyn
