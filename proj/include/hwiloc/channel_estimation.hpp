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

#include "hwiloc/forward_model.hpp"
#include "hwiloc/least_squares.hpp"

#include <array>
#include <vector>

namespace hwiloc {

/// Per-beam, per-subcarrier channel ratios y / x arranged as an
/// M1 x M2 x M3 x M4 x K tensor (last index fastest).
struct BeamspaceTensor {
    std::array<int, 5> dims{1, 1, 1, 1, 1};
    CVec data;

    std::size_t index(int m1, int m2, int m3, int m4, int k) const {
        return ((((static_cast<std::size_t>(m1) * dims[1] + m2) * dims[2] + m3) * dims[3] + m4) * dims[4]) + k;
    }
    cdouble operator()(int m1, int m2, int m3, int m4, int k) const { return data(index(m1, m2, m3, m4, k)); }
    /// Mode-n unfolding (dims[n] x product of the others).
    CMat unfold(int mode) const;
};

BeamspaceTensor assemble_tensor(const Observation& obs, const PilotFrame& frame);

struct CoarseEstimate {
    ChannelParams eta;  ///< gain fields left at rho = 1, xi = 0
    SpatialFrequencies omega;
    std::array<CVec, 5> factors;
};

/// Rank-1 factorization of the tensor followed by per-mode matched-filter
/// searches and inversion of the spatial frequencies into angles and delay.
/// Throws EstimationError when the tensor carries no energy.
CoarseEstimate coarse_estimate(const BeamspaceTensor& tensor, const PilotFrame& frame, const OfdmConfig& ofdm);

/// theta = asin(omega2 / pi), phi = asin(omega1 / (pi cos(theta))), front hemisphere.
AzEl angles_from_frequencies(double omega_horizontal, double omega_vertical);

struct FineResult {
    ChannelParams eta;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> cost_history;
};

/// Gain-eliminated cost ||y - gamma (gamma^H y) / ||gamma||^2||^2 at the
/// geometric parameters c, with gamma the unit-gain mean. Noise-whitened.
double projected_cost(const VecX& geometric, const Observation& obs, const LinkSetup& link);
/// Best complex gain gamma^H y / ||gamma||^2 at c.
cdouble optimal_gain(const VecX& geometric, const Observation& obs, const LinkSetup& link);

/// Mismatched ML refinement over the five geometric parameters.
FineResult fine_mmle(const Observation& obs, const ChannelParams& init, const LinkSetup& link,
                     const LmOptions& options = {});

struct ChannelEstimate {
    CoarseEstimate coarse;
    FineResult fine;
};

ChannelEstimate estimate_channel(const Observation& obs, const LinkSetup& link, const LmOptions& options = {});

}  // namespace hwiloc
