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

#include "hwiloc/state_estimation.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace hwiloc {

namespace {

int residual_size(SyncMode mode) { return mode == SyncMode::Synchronized ? 5 : 4; }

MatX weight_root(const MatX& w) {
    const Eigen::SelfAdjointEigenSolver<MatX> eig(0.5 * (w + w.transpose()));
    const VecX ev = eig.eigenvalues().cwiseMax(0.0);
    return ev.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

void check_inputs(std::size_t n_est, const std::vector<Pose>& bs_poses) {
    if (n_est != bs_poses.size()) throw DimensionError("one channel estimate per BS is required");
    if (bs_poses.size() < 2) throw SingularGeometryError("at least two BSs are required");
}

VecX link_residual(const StateVector& s, const LinkEstimate& est, const Pose& bs, double wavelength,
                   SyncMode mode) {
    const ChannelParams c = channel_params_from_state(s, bs, wavelength);
    VecX e(5);
    e << wrap_angle(c.phi_b - est.eta.phi_b), c.theta_b - est.eta.theta_b, wrap_angle(c.phi_u - est.eta.phi_u),
        c.theta_u - est.eta.theta_u, c.tau - est.eta.tau;
    e = to_range_units(e);
    return mode == SyncMode::Synchronized ? e : VecX(e.head(4));
}

}  // namespace

VecX stacked_geometric(const StateVector& s, const std::vector<Pose>& bs_poses, double wavelength) {
    VecX out(5 * bs_poses.size());
    for (std::size_t l = 0; l < bs_poses.size(); ++l)
        out.segment(5 * l, 5) = channel_params_from_state(s, bs_poses[l], wavelength).geometric();
    return out;
}

VecX to_range_units(const VecX& residual) {
    VecX e = residual;
    if (e.size() >= 5) e(4) *= kSpeedOfLight;
    return e;
}

MatX weight_to_range_units(const MatX& weight) {
    MatX w = weight;
    if (w.rows() >= 5) {
        w.row(4) /= kSpeedOfLight;
        w.col(4) /= kSpeedOfLight;
    }
    return w;
}

StateVector ls_coarse(const std::vector<ChannelParams>& estimates, const std::vector<Pose>& bs_poses, SyncMode mode) {
    check_inputs(estimates.size(), bs_poses);
    const int n_links = static_cast<int>(bs_poses.size());

    Mat3X world_dirs(3, n_links), ue_dirs(3, n_links);
    for (int l = 0; l < n_links; ++l) {
        world_dirs.col(l) = bs_poses[l].rotation * direction_vector(estimates[l].phi_b, estimates[l].theta_b);
        ue_dirs.col(l) = direction_vector(estimates[l].phi_u, estimates[l].theta_u);
    }
    // R_U t_U = -R_B t_B for every link
    const Mat3 cross = -world_dirs * ue_dirs.transpose();
    Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 fix = Mat3::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) fix(2, 2) = -1.0;

    StateVector s;
    s.rotation = svd.matrixU() * fix * svd.matrixV().transpose();

    if (mode == SyncMode::Synchronized) {
        MatX a(3 * n_links, 4);
        VecX q(3 * n_links);
        for (int l = 0; l < n_links; ++l) {
            a.block(3 * l, 0, 3, 3) = Mat3::Identity();
            a.block(3 * l, 3, 3, 1) = world_dirs.col(l);
            q.segment(3 * l, 3) = bs_poses[l].position + kSpeedOfLight * estimates[l].tau * world_dirs.col(l);
        }
        Eigen::JacobiSVD<MatX> ls(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const VecX sv = ls.singularValues();
        if (!(sv(sv.size() - 1) > 1e-10 * sv(0))) throw SingularGeometryError("position/clock system is rank deficient");
        const VecX x = ls.solve(q);
        s.position = x.head<3>();
        s.clock_offset = x(3) / kSpeedOfLight;
    } else {
        MatX a = MatX::Zero(3 * n_links, 3 + n_links);
        VecX q(3 * n_links);
        for (int l = 0; l < n_links; ++l) {
            a.block(3 * l, 0, 3, 3) = Mat3::Identity();
            a.block(3 * l, 3 + l, 3, 1) = -world_dirs.col(l);
            q.segment(3 * l, 3) = bs_poses[l].position;
        }
        Eigen::JacobiSVD<MatX> ls(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const VecX sv = ls.singularValues();
        if (!(sv(sv.size() - 1) > 1e-10 * sv(0))) throw SingularGeometryError("angle-only position system is rank deficient");
        const VecX x = ls.solve(q);
        s.position = x.head<3>();
        s.clock_offset = 0.0;
    }
    return s;
}

double state_objective(const StateVector& s, const std::vector<LinkEstimate>& estimates,
                       const std::vector<Pose>& bs_poses, double wavelength, SyncMode mode) {
    check_inputs(estimates.size(), bs_poses);
    double total = 0.0;
    for (std::size_t l = 0; l < bs_poses.size(); ++l) {
        const VecX e = link_residual(s, estimates[l], bs_poses[l], wavelength, mode);
        const int n = residual_size(mode);
        const MatX w = weight_to_range_units(estimates[l].weight).topLeftCorner(n, n);
        total += e.dot(w * e);
    }
    return total;
}

StateVector retract_state(const StateVector& s, const VecX& tangent) {
    StateVector out = s;
    out.position += tangent.head<3>();
    out.clock_offset += tangent(3) / kSpeedOfLight;
    out.rotation = retract_rotation(s.rotation, tangent.tail<3>());
    return out;
}

StateResult mmle_state(const std::vector<LinkEstimate>& estimates, const StateVector& init,
                       const std::vector<Pose>& bs_poses, double wavelength, SyncMode mode,
                       const LmOptions& options) {
    check_inputs(estimates.size(), bs_poses);
    const int n = residual_size(mode);
    for (const LinkEstimate& e : estimates) {
        if (e.weight.rows() < n || e.weight.cols() < n) throw DimensionError("weight matrix is too small");
    }
    std::vector<MatX> roots;
    for (const LinkEstimate& e : estimates) roots.push_back(weight_root(weight_to_range_units(e.weight).topLeftCorner(n, n)));

    // Reduced tangent: the clock column is dropped in asynchronous mode.
    const bool with_clock = mode == SyncMode::Synchronized;
    const int dims = with_clock ? 7 : 6;
    auto expand = [&](const VecX& reduced) {
        VecX full = VecX::Zero(7);
        full.head<3>() = reduced.head<3>();
        if (with_clock) {
            full(3) = reduced(3);
            full.tail<3>() = reduced.tail<3>();
        } else {
            full.tail<3>() = reduced.tail<3>();
        }
        return full;
    };

    auto residual = [&](const StateVector& s) {
        VecX r(n * static_cast<Eigen::Index>(bs_poses.size()));
        for (std::size_t l = 0; l < bs_poses.size(); ++l)
            r.segment(n * l, n) = roots[l] * link_residual(s, estimates[l], bs_poses[l], wavelength, mode);
        return r;
    };
    auto unpack = [](const VecX& x) { return StateVector::from_vector(x); };

    auto linearize = [&](const VecX& x) {
        const StateVector s = unpack(x);
        const VecX r0 = residual(s);
        MatX jac(r0.size(), dims);
        const double steps[7] = {1e-6, 1e-6, 1e-6, 1e-6, 1e-7, 1e-7, 1e-7};
        for (int i = 0; i < dims; ++i) {
            VecX t = VecX::Zero(dims);
            const double h = steps[with_clock ? i : (i < 3 ? i : i + 1)];
            t(i) = h;
            jac.col(i) = (residual(retract_state(s, expand(t))) - residual(retract_state(s, expand(-t)))) / (2.0 * h);
        }
        return quadratic_model(r0, jac);
    };
    auto cost = [&](const VecX& x) { return residual(unpack(x)).squaredNorm(); };
    auto retract = [&](const VecX& x, const VecX& step) { return retract_state(unpack(x), expand(step)).to_vector(); };

    StateVector start = init;
    start.rotation = project_to_so3(init.rotation);
    const LmResult lm = levenberg_marquardt(start.to_vector(), linearize, cost, retract, options);
    StateResult out;
    out.state = unpack(lm.x);
    out.cost = lm.cost;
    out.iterations = lm.iterations;
    out.converged = lm.converged;
    out.cost_history = lm.cost_history;
    return out;
}

}  // namespace hwiloc
