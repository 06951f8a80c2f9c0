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

#include "hwiloc/least_squares.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace hwiloc {

namespace {

VecX equilibration(const MatX& h) {
    VecX s(h.rows());
    for (Eigen::Index i = 0; i < h.rows(); ++i) s(i) = h(i, i) > 0.0 ? 1.0 / std::sqrt(h(i, i)) : 1.0;
    return s;
}

}  // namespace

QuadraticModel quadratic_model(const VecX& residual, const MatX& jacobian) {
    QuadraticModel m;
    m.cost = residual.squaredNorm();
    m.gradient = jacobian.transpose() * residual;
    m.normal = jacobian.transpose() * jacobian;
    return m;
}

LmResult levenberg_marquardt(const VecX& x0, const std::function<QuadraticModel(const VecX&)>& linearize,
                             const std::function<double(const VecX&)>& cost,
                             const std::function<VecX(const VecX&, const VecX&)>& retract,
                             const LmOptions& options) {
    LmResult out;
    out.x = x0;
    QuadraticModel model = linearize(out.x);
    out.cost = model.cost;
    out.cost_history.push_back(out.cost);
    if (!std::isfinite(out.cost)) return out;

    double damping = options.initial_damping;
    double growth = 2.0;
    while (out.iterations < options.max_iterations) {
        ++out.iterations;
        if (out.cost <= options.absolute_tolerance) {
            out.converged = true;
            break;
        }
        const VecX s = equilibration(model.normal);
        MatX scaled = s.asDiagonal() * model.normal * s.asDiagonal();
        const VecX scaled_grad = s.cwiseProduct(model.gradient);
        if (scaled_grad.lpNorm<Eigen::Infinity>() <= 1e-15 * std::max(out.cost, 1e-300)) {
            out.converged = true;
            break;
        }
        scaled.diagonal().array() += damping;
        const Eigen::LDLT<MatX> ldlt(scaled);
        const VecX step = s.cwiseProduct(ldlt.solve(-scaled_grad));
        if (!step.allFinite()) {
            damping *= growth;
            growth *= 2.0;
            continue;
        }
        const double predicted = -(2.0 * model.gradient.dot(step) + step.dot(model.normal * step));
        const VecX candidate = retract(out.x, step);
        const double new_cost = cost(candidate);

        if (std::isfinite(new_cost) && new_cost < out.cost) {
            const double decrease = out.cost - new_cost;
            const double ratio = predicted > 0.0 ? decrease / predicted : 1.0;
            out.x = candidate;
            const double previous = out.cost;
            model = linearize(out.x);
            out.cost = model.cost;
            out.cost_history.push_back(out.cost);
            damping *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * ratio - 1.0, 3));
            growth = 2.0;
            if (previous - out.cost <= options.relative_tolerance * previous + options.absolute_tolerance) {
                out.converged = true;
                break;
            }
        } else {
            damping *= growth;
            growth *= 2.0;
            if (damping > 1e16) {
                // no descent direction left at working precision
                out.converged = true;
                break;
            }
        }
    }
    return out;
}

MatX solve_spd(const MatX& a, const MatX& b) {
    if (a.rows() != a.cols() || a.rows() != b.rows()) throw DimensionError("solve_spd: shape mismatch");
    const VecX s = equilibration(a);
    const MatX scaled = s.asDiagonal() * a * s.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<MatX> eig(scaled);
    const VecX ev = eig.eigenvalues();
    if (!(ev.minCoeff() > 1e-13 * std::max(ev.maxCoeff(), 0.0)) || !ev.allFinite())
        throw SingularGeometryError("information matrix is singular");
    const MatX inv_scaled = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    return s.asDiagonal() * (inv_scaled * (s.asDiagonal() * b));
}

MatX inverse_spd(const MatX& a) { return solve_spd(a, MatX::Identity(a.rows(), a.cols())); }

}  // namespace hwiloc
