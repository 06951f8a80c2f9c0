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

#include "hwiloc/bounds.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <iostream>
#include <limits>

namespace hwiloc {

namespace {

VecX entry_noise(const LinkSetup& link) {
    const VecX per_g = noise_variances(link);
    const int k_count = link.frame.n_subcarriers();
    VecX out(per_g.size() * k_count);
    for (Eigen::Index g = 0; g < per_g.size(); ++g) out.segment(g * k_count, k_count).setConstant(per_g(g));
    return out;
}

MatX symmetrize(const MatX& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

VecX channel_difference_steps(const ChannelParams& eta, const OfdmConfig& ofdm) {
    VecX h(ChannelParams::kDim);
    const double delay_unit = 1.0 / (ofdm.n_subcarriers * ofdm.subcarrier_spacing);
    h << 1e-5, 1e-5, 1e-5, 1e-5, 1e-5 * delay_unit, 1e-5 * std::max(std::abs(eta.rho), 1e-300), 1e-5;
    return h;
}

ParametricMean channel_mean_model(const LinkSetup& link) {
    ParametricMean m;
    m.mean = [link](const VecX& theta) { return mm_mean(ChannelParams::from_vector(theta), link); };
    m.jacobian = [link](const VecX& theta) { return mm_jacobian(ChannelParams::from_vector(theta), link); };
    m.noise_var = entry_noise(link);
    return m;
}

MatX fisher_information(const ParametricMean& model, const VecX& theta) {
    const CMat jac = model.jacobian(theta);
    if (jac.rows() != model.noise_var.size()) throw DimensionError("noise variances do not match the model");
    const CMat weighted = model.noise_var.cwiseInverse().cast<cdouble>().asDiagonal() * jac;
    return symmetrize(2.0 * (jac.adjoint() * weighted).real());
}

MatX fim_channel(const ChannelParams& eta, const LinkSetup& link) {
    return fisher_information(channel_mean_model(link), eta.to_vector());
}

MatX schur_complement(const MatX& info, const std::vector<int>& keep, const std::vector<int>& drop) {
    const int nk = static_cast<int>(keep.size()), nd = static_cast<int>(drop.size());
    MatX kk(nk, nk), kd(nk, nd), dd(nd, nd);
    for (int i = 0; i < nk; ++i) {
        for (int j = 0; j < nk; ++j) kk(i, j) = info(keep[i], keep[j]);
        for (int j = 0; j < nd; ++j) kd(i, j) = info(keep[i], drop[j]);
    }
    for (int i = 0; i < nd; ++i)
        for (int j = 0; j < nd; ++j) dd(i, j) = info(drop[i], drop[j]);
    if (nd == 0) return kk;
    MatX dd_inv;
    try {
        dd_inv = inverse_symmetric(dd);
    } catch (const SingularGeometryError&) {
        std::cerr << "warning: singular nuisance block, applying Tikhonov regularization\n";
        MatX reg = dd;
        reg.diagonal().array() += 1e-12 * std::max(dd.trace(), 1e-300);
        dd_inv = inverse_symmetric(reg);
    }
    return symmetrize(kk - kd * dd_inv * kd.transpose());
}

MatX efim_nonnuisance(const MatX& fim7) {
    if (fim7.rows() != 7 || fim7.cols() != 7) throw DimensionError("efim_nonnuisance expects a 7x7 FIM");
    return schur_complement(fim7, {0, 1, 2, 3, 4}, {5, 6});
}

MatX angle_information(const MatX& efim5) {
    if (efim5.rows() != 5 || efim5.cols() != 5) throw DimensionError("angle_information expects a 5x5 EFIM");
    return schur_complement(efim5, {0, 1, 2, 3}, {4});
}

MatX inverse_symmetric(const MatX& m) {
    if (m.rows() != m.cols()) throw DimensionError("inverse_symmetric expects a square matrix");
    const Eigen::Index n = m.rows();
    VecX s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = std::abs(m(i, i));
        s(i) = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
    }
    const MatX scaled = s.asDiagonal() * symmetrize(m) * s.asDiagonal();
    if (!scaled.allFinite()) throw SingularGeometryError("matrix has non-finite entries");
    const Eigen::SelfAdjointEigenSolver<MatX> eig(scaled);
    const VecX ev = eig.eigenvalues();
    const double largest = ev.cwiseAbs().maxCoeff();
    if (!(ev.cwiseAbs().minCoeff() > 1e-14 * largest)) throw SingularGeometryError("matrix is singular");
    const MatX inv = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    return symmetrize(s.asDiagonal() * inv * s.asDiagonal());
}

ChannelBounds channel_bounds(const MatX& bound7) {
    ChannelBounds b;
    b.aoa = std::sqrt(std::max(0.0, bound7(0, 0) + bound7(1, 1)));
    b.aod = std::sqrt(std::max(0.0, bound7(2, 2) + bound7(3, 3)));
    b.delay = std::sqrt(std::max(0.0, bound7(4, 4)));
    b.delay_m = b.delay * kSpeedOfLight;
    return b;
}

MatX state_jacobian(const StateVector& s, const std::vector<Pose>& bs_poses, double wavelength, SyncMode mode) {
    const bool sync = mode == SyncMode::Synchronized;
    const int rows_per_link = sync ? 5 : 4;
    const int cols = sync ? 7 : 6;
    const int n_links = static_cast<int>(bs_poses.size());
    MatX jac(rows_per_link * n_links, cols);
    const double steps[7] = {1e-6, 1e-6, 1e-6, 1e-6, 1e-7, 1e-7, 1e-7};
    for (int c = 0; c < cols; ++c) {
        const int full = sync ? c : (c < 3 ? c : c + 1);
        VecX t = VecX::Zero(7);
        t(full) = steps[full];
        const StateVector plus = retract_state(s, t), minus = retract_state(s, -t);
        for (int l = 0; l < n_links; ++l) {
            const ChannelParams cp = channel_params_from_state(plus, bs_poses[l], wavelength);
            const ChannelParams cm = channel_params_from_state(minus, bs_poses[l], wavelength);
            VecX d(5);
            d << wrap_angle(cp.phi_b - cm.phi_b), cp.theta_b - cm.theta_b, wrap_angle(cp.phi_u - cm.phi_u),
                cp.theta_u - cm.theta_u, cp.tau - cm.tau;
            d /= 2.0 * steps[full];
            // the clock tangent is in meters; report derivatives per second
            if (full == 3) d *= kSpeedOfLight;
            jac.block(rows_per_link * l, c, rows_per_link, 1) = d.head(rows_per_link);
        }
    }
    return jac;
}

StateBound crb_state(const std::vector<MatX>& efims, const StateVector& s, const std::vector<Pose>& bs_poses,
                     double wavelength, SyncMode mode) {
    if (efims.size() != bs_poses.size()) throw DimensionError("one EFIM per BS is required");
    const bool sync = mode == SyncMode::Synchronized;
    const int per_link = sync ? 5 : 4;
    const int n_links = static_cast<int>(bs_poses.size());
    MatX info = MatX::Zero(per_link * n_links, per_link * n_links);
    for (int l = 0; l < n_links; ++l)
        info.block(per_link * l, per_link * l, per_link, per_link) = sync ? efims[l] : angle_information(efims[l]);
    const MatX jac = state_jacobian(s, bs_poses, wavelength, mode);
    const MatX inner = symmetrize(jac.transpose() * info * jac);

    StateBound out;
    out.tangent = inverse_symmetric(inner);
    const auto basis = tangent_basis(s.rotation);
    MatX m = MatX::Zero(13, sync ? 7 : 6);
    m.topLeftCorner(3, 3).setIdentity();
    if (sync) {
        m(3, 3) = 1.0;
        m.bottomRightCorner(9, 3) = basis;
    } else {
        m.bottomRightCorner(9, 3) = basis;
    }
    out.full = m * out.tangent * m.transpose();
    out.peb = std::sqrt(std::max(0.0, out.tangent.topLeftCorner(3, 3).trace()));
    const MatX uu = out.tangent.bottomRightCorner(3, 3);
    out.oeb = std::sqrt(std::max(0.0, uu.trace()));
    out.oeb_deg = rad2deg(2.0 * std::asin(std::min(1.0, out.oeb / (2.0 * std::sqrt(2.0)))));
    if (sync) {
        out.ceb = std::sqrt(std::max(0.0, out.tangent(3, 3)));
        out.ceb_m = out.ceb * kSpeedOfLight;
    } else {
        out.ceb = out.ceb_m = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

PseudoTrue pseudo_true_channel(const ChannelParams& truth, const CVec& true_mean, const LinkSetup& link) {
    Observation obs;
    obs.y = true_mean;
    obs.noise_var = noise_variances(link);
    LmOptions options;
    options.relative_tolerance = 1e-15;
    const FineResult r = fine_mmle(obs, truth, link, options);
    PseudoTrue out;
    out.eta = r.eta;
    // keep the gain phase on the branch of the true value
    out.eta.xi = truth.xi + wrap_angle(r.eta.xi - truth.xi);
    out.cost = r.cost;
    out.iterations = r.iterations;
    out.converged = r.converged;
    return out;
}

McrbMatrices mcrb_matrices(const ParametricMean& model, const VecX& theta0, const CVec& true_mean) {
    const Eigen::Index n = theta0.size();
    const CVec eps = true_mean - model.mean(theta0);
    const CMat jac = model.jacobian(theta0);
    if (jac.rows() != eps.size() || model.noise_var.size() != eps.size())
        throw DimensionError("mcrb_matrices: model sizes disagree");
    if (model.steps.size() != n) throw DimensionError("mcrb_matrices: one difference step per parameter required");
    const VecX inv_var = model.noise_var.cwiseInverse();
    const CVec weighted_eps = inv_var.cast<cdouble>().cwiseProduct(eps);
    const MatX gram = (jac.adjoint() * (inv_var.cast<cdouble>().asDiagonal() * jac)).real();
    const VecX score = (jac.adjoint() * weighted_eps).real();

    // second derivatives from central differences of the analytic Jacobian
    MatX curvature(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        VecX tp = theta0, tm = theta0;
        tp(i) += model.steps(i);
        tm(i) -= model.steps(i);
        const CMat d2 = (model.jacobian(tp) - model.jacobian(tm)) / (2.0 * model.steps(i));
        curvature.row(i) = (d2.adjoint() * weighted_eps).real().transpose();
    }
    McrbMatrices out;
    out.a = 2.0 * (symmetrize(curvature) - gram);
    out.b = 4.0 * score * score.transpose() + 2.0 * gram;
    out.a = symmetrize(out.a);
    out.b = symmetrize(out.b);
    return out;
}

MatX lb_matrix(const McrbMatrices& m, const VecX& theta0, const VecX& theta_true) {
    const MatX a_inv = -inverse_symmetric(-m.a);
    const VecX bias = theta_true - theta0;
    return symmetrize(a_inv * m.b * a_inv + bias * bias.transpose());
}

StateAlb pseudo_true_state_and_alb(const std::vector<ChannelParams>& pseudo_true, const std::vector<MatX>& efims,
                                   const StateVector& truth, const std::vector<Pose>& bs_poses, double wavelength,
                                   SyncMode mode) {
    if (pseudo_true.size() != bs_poses.size() || efims.size() != bs_poses.size())
        throw DimensionError("one pseudo-true channel and EFIM per BS is required");
    std::vector<LinkEstimate> est;
    for (std::size_t l = 0; l < bs_poses.size(); ++l)
        est.push_back({pseudo_true[l], mode == SyncMode::Synchronized ? efims[l] : angle_information(efims[l])});
    LmOptions options;
    options.relative_tolerance = 1e-15;
    const StateResult r = mmle_state(est, truth, bs_poses, wavelength, mode, options);
    StateAlb out;
    out.pseudo_true = r.state;
    out.converged = r.converged;
    out.palb = (truth.position - r.state.position).norm();
    out.oalb = (truth.rotation - r.state.rotation).norm();
    out.calb = mode == SyncMode::Synchronized ? kSpeedOfLight * std::abs(truth.clock_offset - r.state.clock_offset)
                                              : std::numeric_limits<double>::quiet_NaN();
    return out;
}

BoundReport compute_bounds(const ScenarioGeometry& world, const std::vector<LinkSetup>& links,
                           const std::vector<ChannelParams>& truths, const std::vector<HwiRealization>& hwi,
                           SyncMode mode) {
    const std::size_t n = world.n_links();
    if (links.size() != n || truths.size() != n || hwi.size() != n)
        throw DimensionError("compute_bounds: one link setup, truth and realization per BS");
    BoundReport report;
    std::vector<MatX> efims;
    std::vector<ChannelParams> pseudo;
    for (std::size_t l = 0; l < n; ++l) {
        LinkBoundReport lr;
        lr.truth = truths[l];
        const MatX fim = fim_channel(lr.truth, links[l]);
        lr.crb = inverse_symmetric(fim);
        lr.crb_scalars = channel_bounds(lr.crb);
        efims.push_back(efim_nonnuisance(fim));

        const CVec true_mean = tm_mean(lr.truth, hwi[l], links[l]);
        const PseudoTrue pt = pseudo_true_channel(lr.truth, true_mean, links[l]);
        lr.pseudo_true = pt.eta;
        lr.pseudo_true_converged = pt.converged;
        ParametricMean model = channel_mean_model(links[l]);
        model.steps = channel_difference_steps(pt.eta, links[l].ofdm);
        const McrbMatrices ab = mcrb_matrices(model, pt.eta.to_vector(), true_mean);
        lr.lb = lb_matrix(ab, pt.eta.to_vector(), lr.truth.to_vector());
        lr.lb_scalars = channel_bounds(lr.lb);
        pseudo.push_back(pt.eta);
        report.links.push_back(lr);
    }
    report.state = crb_state(efims, world.ue, world.bs_poses, world.wavelength(), mode);
    report.alb = pseudo_true_state_and_alb(pseudo, efims, world.ue, world.bs_poses, world.wavelength(), mode);
    return report;
}

}  // namespace hwiloc
