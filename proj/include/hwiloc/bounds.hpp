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

#include "hwiloc/channel_estimation.hpp"
#include "hwiloc/forward_model.hpp"
#include "hwiloc/state_estimation.hpp"

#include <functional>
#include <vector>

namespace hwiloc {

/// Complex Gaussian observation model y ~ CN(mean(theta), diag(noise_var)).
struct ParametricMean {
    std::function<CVec(const VecX&)> mean;
    std::function<CMat(const VecX&)> jacobian;
    VecX steps;      ///< finite-difference step per parameter
    VecX noise_var;  ///< per observation entry
};

/// Channel-parameter model of one link (7 parameters, ChannelParams order).
ParametricMean channel_mean_model(const LinkSetup& link);
/// Steps dtheta used for second derivatives: 1e-5 rad, 1e-5 / (K df), 1e-5 rho.
VecX channel_difference_steps(const ChannelParams& eta, const OfdmConfig& ofdm);

/// 2 sum Re(J^H J) / sigma^2.
MatX fisher_information(const ParametricMean& model, const VecX& theta);
MatX fim_channel(const ChannelParams& eta, const LinkSetup& link);

/// Schur complement removing `drop` from an information matrix.
MatX schur_complement(const MatX& info, const std::vector<int>& keep, const std::vector<int>& drop);
/// 5x5 equivalent FIM of the geometric parameters (gain removed).
MatX efim_nonnuisance(const MatX& fim7);
/// 4x4 information of the angles with the delay also removed.
MatX angle_information(const MatX& efim5);

/// Inverse of a symmetric matrix after symmetric diagonal equilibration.
/// Throws SingularGeometryError when singular.
MatX inverse_symmetric(const MatX& m);

struct ChannelBounds {
    double aoa = 0.0;        ///< sqrt of the azimuth + elevation diagonal at the BS, rad
    double aod = 0.0;        ///< same at the UE, rad
    double delay = 0.0;      ///< s
    double delay_m = 0.0;
};
ChannelBounds channel_bounds(const MatX& bound7);

/// d c / d [p, B, u] for every link, stacked; B in seconds, u in the SO(3)
/// tangent basis. Asynchronous mode drops delays and the clock column.
MatX state_jacobian(const StateVector& s, const std::vector<Pose>& bs_poses, double wavelength, SyncMode mode);

struct StateBound {
    MatX tangent;  ///< bound in tangent coordinates (7x7 or 6x6)
    MatX full;     ///< 13x13 bound on [p, B, vec(R)]
    double peb = 0.0;
    double ceb = 0.0;    ///< s (NaN when asynchronous)
    double ceb_m = 0.0;
    double oeb = 0.0;    ///< Frobenius
    double oeb_deg = 0.0;
};

/// Constrained CRB M (M^T J^T I J M)^-1 M^T from per-link 5x5 EFIMs.
/// Throws SingularGeometryError for unobservable geometries.
StateBound crb_state(const std::vector<MatX>& efims, const StateVector& s, const std::vector<Pose>& bs_poses,
                     double wavelength, SyncMode mode = SyncMode::Synchronized);

struct PseudoTrue {
    ChannelParams eta;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// argmin ||true_mean - mu(eta)||^2 (noise-weighted), started from `truth`.
PseudoTrue pseudo_true_channel(const ChannelParams& truth, const CVec& true_mean, const LinkSetup& link);

struct McrbMatrices {
    MatX a;
    MatX b;
};

/// A = 2 sum Re(conj(d2 mu) eps - conj(J_i) J_j) / sigma^2,
/// B = 4 (sum Re(conj(J_i) eps) / sigma^2)(sum Re(conj(J_j) eps) / sigma^2) + 2 sum Re(conj(J_i) J_j) / sigma^2,
/// with eps = true_mean - mean(theta0).
McrbMatrices mcrb_matrices(const ParametricMean& model, const VecX& theta0, const CVec& true_mean);

/// A^-1 B A^-1 + (theta_true - theta0)(theta_true - theta0)^T.
MatX lb_matrix(const McrbMatrices& m, const VecX& theta0, const VecX& theta_true);

struct StateAlb {
    StateVector pseudo_true;
    double palb = 0.0;
    double calb = 0.0;  ///< m (NaN when asynchronous)
    double oalb = 0.0;
    bool converged = false;
};

/// Pseudo-true state from the per-link pseudo-true channels weighted by the
/// EFIMs at the true channels, and its distance to the true state.
StateAlb pseudo_true_state_and_alb(const std::vector<ChannelParams>& pseudo_true, const std::vector<MatX>& efims,
                                   const StateVector& truth, const std::vector<Pose>& bs_poses, double wavelength,
                                   SyncMode mode = SyncMode::Synchronized);

struct LinkBoundReport {
    ChannelParams truth;
    ChannelParams pseudo_true;
    MatX crb;
    MatX lb;
    ChannelBounds crb_scalars;
    ChannelBounds lb_scalars;
    bool pseudo_true_converged = true;
};

struct BoundReport {
    std::vector<LinkBoundReport> links;
    StateBound state;
    StateAlb alb;
};

/// Per-link CRB and LB plus the state CRB and ALB for one impairment realization.
/// `truths[l]` is the true channel of link l, `hwi[l]` its realization.
BoundReport compute_bounds(const ScenarioGeometry& world, const std::vector<LinkSetup>& links,
                           const std::vector<ChannelParams>& truths, const std::vector<HwiRealization>& hwi,
                           SyncMode mode);

}  // namespace hwiloc
