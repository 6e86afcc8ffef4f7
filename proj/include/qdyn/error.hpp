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

#include <stdexcept>
#include <string>
#include <string_view>

namespace qdyn {

enum class ErrorKind {
    invalid_bounds,
    invalid_argument,
    non_finite_potential,
    grid_mismatch,
    instability_detected,
    convergence_failure,
    empty_expansion,
    budget_exhausted,
    population_extinction,
    unknown_function,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this type; `kind()` lets callers
// (the CLI in particular) map failures onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace qdyn
