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
#include "hwiloc/impairments.hpp"

#include <random>
#include <vector>

namespace hwiloc {

/// Square M-QAM with Gray labels and unit average energy.
class QamConstellation {
public:
    explicit QamConstellation(int order);
    int order() const { return static_cast<int>(points_.size()); }
    /// Point carrying label `label`.
    cdouble point(int label) const { return points_[label]; }
    /// Label of the nearest point (minimum Euclidean distance).
    int decide(cdouble sample) const;

private:
    int side_;
    double spacing_;
    std::vector<cdouble> points_;
    std::vector<int> gray_to_label_;
};

struct CommSetup {
    int modulation_order = 16;
    int ofdm_symbols = 20;   ///< per realization
    int realizations = 50;
    void validate() const;
    long long symbols() const { return static_cast<long long>(ofdm_symbols) * realizations; }
};

/// Link used for data transmission: true channel, arrays and OFDM parameters.
struct CommLink {
    ChannelParams eta;
    ArrayLayout bs_array;
    ArrayLayout ue_array;
    OfdmConfig ofdm;
};

/// Unit-modulus conjugate beams matched to the impaired array responses.
struct MatchedBeams {
    CVec precoder;
    CVec combiner;
};
MatchedBeams matched_beams(const CommLink& link, const HwiRealization& hwi);

/// 1 - (1 - 2 (1 - 1/sqrt(M)) Q(sqrt(3 snr / (M - 1))))^2.
double ser_analytic(int order, double snr);

struct EquivalentNoise {
    double signal = 0.0;      ///< mean |h|^2 P / N_U with the known channel
    double hwi_mean = 0.0;    ///< mean |y_true - h x|^2 without noise
    double hwi_min = 0.0;     ///< smallest per-OFDM-symbol mean
    double hwi_max = 0.0;     ///< largest per-OFDM-symbol mean
    double background = 0.0;  ///< ||w||^2 sigma_n^2

    double snr() const { return signal / (hwi_mean + background); }
    double snr_worst() const { return signal / (hwi_max + background); }
    double snr_best() const { return signal / (hwi_min + background); }
};

/// One block of OFDM data symbols through the true and the known channel.
struct DataBlock {
    LinkSetup setup;   ///< frame whose pilots are the transmitted data
    std::vector<int> labels;  ///< g * K + k
    CVec received;     ///< noise-free true-model output
    CVec reference;    ///< h x with the known channel: static array impairments and PA linear gain
};
DataBlock transmit_block(const CommLink& link, const HwiRealization& hwi, const QamConstellation& qam,
                         int ofdm_symbols, std::mt19937_64& rng);

EquivalentNoise equivalent_hwi_noise(const DataBlock& block);

struct SerResult {
    double ser = 0.0;
    double halfwidth = 0.0;  ///< 95% Wilson interval
    long long errors = 0;
    long long symbols = 0;
    double analytic = 0.0;        ///< averaged over realizations, mean HWI noise
    double analytic_low = 0.0;    ///< with the smallest per-symbol HWI noise
    double analytic_high = 0.0;   ///< with the largest per-symbol HWI noise
    double hwi_power = 0.0;       ///< mean over realizations
    double background_power = 0.0;
};

/// Monte-Carlo SER with fresh impairments per realization, equalization by
/// the known channel and minimum-distance decisions. The analytic fields use
/// the equivalent noise of the same blocks.
SerResult ser_monte_carlo(const CommSetup& setup, const CommLink& link, const HwiConfig& hwi,
                          std::mt19937_64& rng);

/// Wilson score interval halfwidth for `errors` out of `trials` at z.
double wilson_halfwidth(long long errors, long long trials, double z = 1.959963984540054);

}  // namespace hwiloc
