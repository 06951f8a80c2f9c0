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
#include "hwiloc/impairments.hpp"
#include "hwiloc/types.hpp"

#include <array>
#include <random>
#include <vector>

namespace hwiloc {

enum class Waveform { Ofdm, DftSpread };
enum class SweepOrder { BsFirst, UeFirst };

struct OfdmConfig {
    double carrier_hz = 60e9;
    double subcarrier_spacing = 240e3;
    int n_subcarriers = 100;
    int cp_len = -1;  ///< negative selects floor(K / 8)
    double noise_psd_dbm_hz = -173.855;
    double noise_figure_db = 10.0;
    double noise_bandwidth_hz = 0.0;  ///< zero selects K * subcarrier_spacing
    double tx_power_dbm = 0.0;
    Waveform waveform = Waveform::Ofdm;

    double wavelength() const { return kSpeedOfLight / carrier_hz; }
    int cyclic_prefix() const { return cp_len < 0 ? n_subcarriers / 8 : cp_len; }
    double bandwidth() const;
    double tx_power_w() const;
    /// sigma_n^2 = N0 * W * NF, watts.
    double noise_variance() const;
    void validate() const;
};

struct SweepConfig {
    std::array<int, 4> beams{4, 4, 3, 3};
    double grid_step = 0.15;
    double prior_offset = 0.05;
    SweepOrder order = SweepOrder::BsFirst;

    int n_transmissions() const { return beams[0] * beams[1] * beams[2] * beams[3]; }
};

/// Per-axis beam grids: axes are (BS y, BS z, UE y, UE z). Column m of
/// `matrices[n]` is the axis steering vector at `grid[n](m)`.
struct Codebooks {
    std::array<VecX, 4> grid;
    std::array<VecX, 4> coordinates;
    std::array<CMat, 4> matrices;
    double wavelength = 0.0;

    int beams(int axis) const { return static_cast<int>(grid[axis].size()); }
};

using BeamIndex = std::array<int, 4>;

struct PilotFrame {
    CMat pilots;     ///< G x K
    CMat precoders;  ///< N_U x G
    CMat combiners;  ///< N_B x G
    Codebooks codebooks;
    std::vector<BeamIndex> schedule;

    int n_transmissions() const { return static_cast<int>(pilots.rows()); }
    int n_subcarriers() const { return static_cast<int>(pilots.cols()); }
};

/// Everything needed to evaluate the observation mean of one BS-UE link.
struct LinkSetup {
    ArrayLayout bs_array;
    ArrayLayout ue_array;
    OfdmConfig ofdm;
    PilotFrame frame;
};

struct Observation {
    CVec y;          ///< stacked g-major, index g * K + k
    VecX noise_var;  ///< per transmission, w_g^H w_g sigma_n^2
};

/// Location prior: true spatial frequencies shifted by `offset`.
std::array<double, 4> prior_frequencies(const ChannelParams& eta, double offset);

/// Grids omega_{n,m} = prior_n + ((2m - M_n - 1) / 2) step, m = 1..M_n.
Codebooks build_codebooks(const std::array<double, 4>& prior, const SweepConfig& sweep, const ArrayLayout& bs,
                          const ArrayLayout& ue, double wavelength);

/// Beam indices per transmission. BS-first: g = ((m3 M4 + m4) M1 + m1) M2 + m2.
std::vector<BeamIndex> sweep_schedule(const std::array<int, 4>& beams, SweepOrder order);

/// Random-phase pilots of power P / N_U with matched beams from the codebooks.
/// DFT-spread pilots are F s_g with constant-modulus s_g.
PilotFrame make_pilot_frame(const Codebooks& codebooks, const SweepConfig& sweep, const OfdmConfig& ofdm,
                            int n_ue_elements, std::mt19937_64& rng);

/// Mismatched-model mean mu_{g,k} = alpha (w_g^T a_B)(a_U^T v_g) d_k x_{g,k}.
CVec mm_mean(const ChannelParams& eta, const LinkSetup& link);
/// d mu / d eta, columns ordered as ChannelParams::to_vector().
CMat mm_jacobian(const ChannelParams& eta, const LinkSetup& link);

/// Hardware-impaired mean: TX IQI, TX PN/CFO, PA, coupled and perturbed
/// channel, delay, RX PN/CFO and RX IQI.
CVec tm_mean(const ChannelParams& eta, const HwiRealization& hwi, const LinkSetup& link);

/// Per-transmission noise variance w_g^H w_g sigma_n^2.
VecX noise_variances(const LinkSetup& link);
Observation add_noise(const CVec& mean, const LinkSetup& link, std::mt19937_64& rng);

}  // namespace hwiloc
