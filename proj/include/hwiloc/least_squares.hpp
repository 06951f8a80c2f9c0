// SPDX-License-Identifier: Apache-2.0
//
// hwiloc: mmWave OFDM MIMO localization under hardware impairments
// Copyright (C) 2026 The hwiloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "hwiloc/types.hpp"

#include <functional>
#include <vector>

namespace hwiloc {

/// Local quadratic model of a sum-of-squares cost ||r(x)||^2 at x:
/// cost(x + d) ~ cost + 2 g^T d + d^T H d with g = J^T r, H = J^T J.
struct QuadraticModel {
    double cost = 0.0;
    VecX gradient;
    MatX normal;
};

QuadraticModel quadratic_model(const VecX& residual, const MatX& jacobian);

struct LmOptions {
    int max_iterations = 200;
    double relative_tolerance = 1e-12;
    double absolute_tolerance = 0.0;
    double initial_damping = 1e-3;
};

struct LmResult {
    VecX x;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> cost_history;  ///< cost after each accepted step, starting with the initial cost
};

/// Levenberg-Marquardt on a manifold. `linearize` returns the model at x in
/// tangent coordinates, `retract` maps (x, step) back onto the manifold.
/// Only cost-decreasing steps are accepted.
LmResult levenberg_marquardt(const VecX& x0, const std::function<QuadraticModel(const VecX&)>& linearize,
                             const std::function<double(const VecX&)>& cost,
                             const std::function<VecX(const VecX&, const VecX&)>& retract,
                             const LmOptions& options = {});

/// Solves the symmetric positive semi-definite system A x = b after diagonal
/// equilibration. Throws SingularGeometryError when A is numerically singular.
MatX solve_spd(const MatX& a, const MatX& b);
/// Inverse of a symmetric positive definite matrix via solve_spd.
MatX inverse_spd(const MatX& a);

}  // namespace hwiloc
