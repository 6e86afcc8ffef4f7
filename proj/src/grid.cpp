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

#include "qdyn/grid.hpp"

#include <cmath>
#include <algorithm>
#include <sstream>

#include "qdyn/error.hpp"

namespace qdyn {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_bounds: return "invalid-bounds";
        case ErrorKind::invalid_argument: return "invalid-argument";
        case ErrorKind::non_finite_potential: return "non-finite-potential";
        case ErrorKind::grid_mismatch: return "grid-mismatch";
        case ErrorKind::instability_detected: return "instability-detected";
        case ErrorKind::convergence_failure: return "convergence-failure";
        case ErrorKind::empty_expansion: return "empty-expansion";
        case ErrorKind::budget_exhausted: return "budget-exhausted";
        case ErrorKind::population_extinction: return "population-extinction";
        case ErrorKind::unknown_function: return "unknown-function";
    }
    return "unknown-error";
}

Grid::Grid(double x_min, double x_max, std::size_t n_points)
    : x_min_(x_min),
      x_max_(x_max),
      n_points_(n_points),
      dx_((x_max - x_min) / static_cast<double>(n_points - 1)) {}

Grid build_grid(double x_min, double x_max, std::size_t n_points) {
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min) || n_points < 3) {
        std::ostringstream msg;
        msg << "grid needs x_max > x_min and n_points >= 3 (got [" << x_min << ", " << x_max
            << "], n=" << n_points << ")";
        throw Error(ErrorKind::invalid_bounds, msg.str());
    }
    return Grid(x_min, x_max, n_points);
}

std::vector<double> Grid::points() const {
    std::vector<double> xs(n_points_);
    for (std::size_t i = 0; i < n_points_; ++i) xs[i] = x(i);
    return xs;
}

double WaveFunction::norm_squared() const {
    double sum = 0.0;
    for (const auto& a : amplitudes) sum += std::norm(a);
    return sum * grid.dx();
}

void WaveFunction::normalize() {
    const double n2 = norm_squared();
    if (!(n2 > 0.0) || !std::isfinite(n2))
        throw Error(ErrorKind::invalid_argument, "cannot normalize a zero or non-finite state");
    const double scale = 1.0 / std::sqrt(n2);
    for (auto& a : amplitudes) a *= scale;
}

bool WaveFunction::is_normalized(double tol) const { return std::abs(norm_squared() - 1.0) <= tol; }

WaveFunction make_wavefunction(const Grid& grid, const std::function<complex(double)>& f) {
    WaveFunction psi{grid, std::vector<complex>(grid.size()), 0.0};
    for (std::size_t i = 0; i < grid.size(); ++i) psi.amplitudes[i] = f(grid.x(i));
    return psi;
}

WaveFunction gaussian_packet(const Grid& grid, double center, double sigma, double k0) {
    if (!(sigma > 0.0)) throw Error(ErrorKind::invalid_argument, "packet width must be positive");
    auto psi = make_wavefunction(grid, [&](double x) {
        const double u = x - center;
        return std::exp(complex(-u * u / (4.0 * sigma * sigma), k0 * x));
    });
    psi.normalize();
    return psi;
}

PotentialGrid discretize_potential(const std::function<double(double)>& f, const Grid& grid) {
    PotentialGrid pot{grid, std::vector<double>(grid.size())};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = f(grid.x(i));
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "potential is " << v << " at x=" << grid.x(i);
            throw Error(ErrorKind::non_finite_potential, msg.str());
        }
        pot.values[i] = v;
    }
    return pot;
}

PotentialGrid zero_potential(const Grid& grid) { return PotentialGrid{grid, std::vector<double>(grid.size(), 0.0)}; }

PotentialGrid taylor_potential(const std::function<double(double)>& f, const Grid& grid, double x0, int order) {
    switch (order) {
        case 0:
            return zero_potential(grid);
        case 1: {
            const double h = 1e-5 * std::max(1.0, std::abs(x0));
            const double slope = (f(x0 + h) - f(x0 - h)) / (2.0 * h);
            return discretize_potential([slope](double) { return slope; }, grid);
        }
        default:
            throw Error(ErrorKind::invalid_argument, "taylor order must be 0 or 1");
    }
}

void require_same_grid(const Grid& a, const Grid& b) {
    if (!(a == b)) throw Error(ErrorKind::grid_mismatch, "operands live on different grids");
}

}  // namespace qdyn
