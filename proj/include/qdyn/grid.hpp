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

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace qdyn {

using complex = std::complex<double>;

/// Uniform 1-D grid with both endpoints included.
///
/// Point i sits at x_min + i*dx, except the last point which is pinned to
/// x_max so the endpoints are reproduced exactly.
class Grid {
public:
    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    std::size_t size() const noexcept { return n_points_; }
    double dx() const noexcept { return dx_; }

    double x(std::size_t i) const noexcept {
        return i + 1 == n_points_ ? x_max_ : x_min_ + static_cast<double>(i) * dx_;
    }
    std::vector<double> points() const;

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    friend Grid build_grid(double x_min, double x_max, std::size_t n_points);
    Grid(double x_min, double x_max, std::size_t n_points);

    double x_min_;
    double x_max_;
    std::size_t n_points_;
    double dx_;
};

/// Throws Error(invalid_bounds) unless x_max > x_min and n_points >= 3.
Grid build_grid(double x_min, double x_max, std::size_t n_points);

struct WaveFunction {
    Grid grid;
    std::vector<complex> amplitudes;
    double time = 0.0;  // t in real mode, tau in imaginary mode

    std::size_t size() const noexcept { return amplitudes.size(); }

    // Sum_i |psi_i|^2 dx.
    double norm_squared() const;
    // Scales to norm_squared() == 1. Throws if the state is identically zero.
    void normalize();
    bool is_normalized(double tol = 1e-10) const;
};

WaveFunction make_wavefunction(const Grid& grid, const std::function<complex(double)>& f);

/// Normalized Gaussian packet whose probability density has standard
/// deviation `sigma` and whose carrier wave number is `k0`.
WaveFunction gaussian_packet(const Grid& grid, double center, double sigma, double k0 = 0.0);

struct PotentialGrid {
    Grid grid;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

/// values_i = f(x_i). Throws Error(non_finite_potential) on any non-finite sample.
PotentialGrid discretize_potential(const std::function<double(double)>& f, const Grid& grid);

PotentialGrid zero_potential(const Grid& grid);

/// Taylor truncation of an objective around x0 used as a potential.
///
/// order 0 drops the constant and yields the free-particle potential; order 1
/// is the constant slope d(zeta)/dx at x0 (no (x - x0) factor), which only
/// contributes a global phase in real time and a uniform decay in imaginary
/// time.
PotentialGrid taylor_potential(const std::function<double(double)>& f, const Grid& grid, double x0, int order);

void require_same_grid(const Grid& a, const Grid& b);

}  // namespace qdyn
