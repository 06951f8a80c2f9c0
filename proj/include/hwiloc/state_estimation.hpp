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

#include "hwiloc/geometry.hpp"
#include "hwiloc/least_squares.hpp"

#include <vector>

namespace hwiloc {

enum class SyncMode { Synchronized, Asynchronous };

/// One link's channel estimate with its information weight. In synchronized
/// mode the weight is 5x5 over (phi_B, theta_B, phi_U, theta_U, tau); in
/// asynchronous mode it is 4x4 over the angles.
struct LinkEstimate {
    ChannelParams eta;
    MatX weight;
};

/// Geometric channel parameters c(s) of each link, stacked (5 per link).
VecX stacked_geometric(const StateVector& s, const std::vector<Pose>& bs_poses, double wavelength);

/// delay residuals in meters: e_m = D e, W_m = D^-1 W D^-1, D = diag(1, 1, 1, 1, c).
VecX to_range_units(const VecX& residual);
MatX weight_to_range_units(const MatX& weight);

/// Closed-form initialization: rotation by orthogonal Procrustes, then
/// position and clock by linear least squares. In asynchronous mode the
/// delays are unused, per-link ranges are solved for and the clock stays 0.
StateVector ls_coarse(const std::vector<ChannelParams>& estimates, const std::vector<Pose>& bs_poses,
                      SyncMode mode = SyncMode::Synchronized);

struct StateResult {
    StateVector state;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> cost_history;
};

/// Weighted objective sum_l (c_l(s) - c_hat_l)^T W_l (c_l(s) - c_hat_l); azimuth residuals wrapped.
double state_objective(const StateVector& s, const std::vector<LinkEstimate>& estimates,
                       const std::vector<Pose>& bs_poses, double wavelength, SyncMode mode);

/// Weighted refinement over position, clock and rotation; the rotation is
/// updated through the SO(3) retraction. The clock is held fixed in
/// asynchronous mode.
StateResult mmle_state(const std::vector<LinkEstimate>& estimates, const StateVector& init,
                       const std::vector<Pose>& bs_poses, double wavelength, SyncMode mode = SyncMode::Synchronized,
                       const LmOptions& options = {});

/// Moves a state along tangent coordinates [dp (m), d(c B) (m), u].
StateVector retract_state(const StateVector& s, const VecX& tangent);

}  // namespace hwiloc
