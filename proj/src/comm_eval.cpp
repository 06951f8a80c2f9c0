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
#include "hwiloc/comm_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hwiloc {

namespace {

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

CVec unit_modulus_conjugate(const CVec& response) {
    CVec out(response.size());
    for (Eigen::Index i = 0; i < response.size(); ++i) {
        const double a = std::abs(response(i));
        out(i) = a > 0.0 ? std::conj(response(i)) / a : cdouble(1.0, 0.0);
    }
    return out;
}

}  // namespace

QamConstellation::QamConstellation(int order) {
    side_ = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
    if (order < 4 || side_ * side_ != order) throw ConfigError("modulation order must be a perfect square >= 4");
    // levels -(side-1)..(side-1) in steps of 2, unit average energy
    spacing_ = std::sqrt(3.0 / (2.0 * (order - 1)));
    points_.resize(order);
    gray_to_label_.resize(side_);
    for (int i = 0; i < side_; ++i) gray_to_label_[i ^ (i >> 1)] = i;
    int bits = 0;
    while ((1 << bits) < side_) ++bits;
    for (int label = 0; label < order; ++label) {
        const int gi = gray_to_label_[label >> bits];
        const int gq = gray_to_label_[label & (side_ - 1)];
        points_[label] = spacing_ * cdouble(2.0 * gi - (side_ - 1), 2.0 * gq - (side_ - 1));
    }
}

int QamConstellation::decide(cdouble sample) const {
    auto level = [&](double v) {
        const int i = static_cast<int>(std::lround((v / spacing_ + (side_ - 1)) / 2.0));
        return std::clamp(i, 0, side_ - 1);
    };
    int bits = 0;
    while ((1 << bits) < side_) ++bits;
    const int li = level(sample.real()), lq = level(sample.imag());
    return ((li ^ (li >> 1)) << bits) | (lq ^ (lq >> 1));
}

void CommSetup::validate() const {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(modulation_order))));
    if (modulation_order < 4 || side * side != modulation_order)
        throw ConfigError("comm.modulation_order must be a perfect square >= 4");
    if (ofdm_symbols < 1) throw ConfigError("comm.ofdm_symbols must be positive");
    if (realizations < 1) throw ConfigError("comm.realizations must be positive");
}

MatchedBeams matched_beams(const CommLink& link, const HwiRealization& hwi) {
    const double fc = link.ofdm.carrier_hz;
    const CVec a_b = hwi.rx.coupling * perturbed_steering_vector(link.bs_array, hwi.rx.displacement, hwi.rx.gains,
                                                                 link.eta.phi_b, link.eta.theta_b, fc);
    const CVec a_u = hwi.tx.coupling * perturbed_steering_vector(link.ue_array, hwi.tx.displacement, hwi.tx.gains,
                                                                 link.eta.phi_u, link.eta.theta_u, fc);
    return {unit_modulus_conjugate(a_u), unit_modulus_conjugate(a_b)};
}

double ser_analytic(int order, double snr) {
    if (!(snr >= 0.0)) throw std::invalid_argument("ser_analytic: SNR must be non-negative");
    const double m = static_cast<double>(order);
    if (std::isinf(snr)) return 0.0;
    const double p = 2.0 * (1.0 - 1.0 / std::sqrt(m)) * q_function(std::sqrt(3.0 * snr / (m - 1.0)));
    return std::clamp(1.0 - (1.0 - p) * (1.0 - p), 0.0, 1.0);
}

DataBlock transmit_block(const CommLink& link, const HwiRealization& hwi, const QamConstellation& qam,
                         int ofdm_symbols, std::mt19937_64& rng) {
    const int k_count = link.ofdm.n_subcarriers;
    const MatchedBeams beams = matched_beams(link, hwi);
    DataBlock b;
    b.setup.bs_array = link.bs_array;
    b.setup.ue_array = link.ue_array;
    b.setup.ofdm = link.ofdm;
    PilotFrame& f = b.setup.frame;
    f.pilots.resize(ofdm_symbols, k_count);
    f.precoders = beams.precoder.replicate(1, ofdm_symbols);
    f.combiners = beams.combiner.replicate(1, ofdm_symbols);
    const double amplitude = std::sqrt(link.ofdm.tx_power_w() / link.ue_array.size());
    std::uniform_int_distribution<int> pick(0, qam.order() - 1);
    b.labels.resize(static_cast<std::size_t>(ofdm_symbols) * k_count);
    for (int g = 0; g < ofdm_symbols; ++g)
        for (int k = 0; k < k_count; ++k) {
            const int label = pick(rng);
            b.labels[static_cast<std::size_t>(g) * k_count + k] = label;
            f.pilots(g, k) = amplitude * qam.point(label);
        }
    // the receiver knows the static array responses and the PA small-signal gain
    b.received = tm_mean(link.eta, hwi, b.setup);
    b.reference = tm_mean(link.eta, hwi.channel_only(), b.setup);
    if (!hwi.pa.coeffs.empty()) b.reference *= hwi.pa.coeffs.front();
    return b;
}

EquivalentNoise equivalent_hwi_noise(const DataBlock& block) {
    const int g_count = block.setup.frame.n_transmissions();
    const int k_count = block.setup.frame.n_subcarriers();
    EquivalentNoise n;
    // channel power times the nominal symbol energy, independent of the drawn data
    const double energy = block.setup.ofdm.tx_power_w() / block.setup.ue_array.size();
    for (int g = 0; g < g_count; ++g)
        for (int k = 0; k < k_count; ++k)
            n.signal += std::norm(block.reference(g * k_count + k) / block.setup.frame.pilots(g, k));
    n.signal *= energy / block.reference.size();
    n.hwi_mean = (block.received - block.reference).squaredNorm() / block.reference.size();
    n.hwi_min = std::numeric_limits<double>::infinity();
    n.hwi_max = 0.0;
    for (int g = 0; g < g_count; ++g) {
        const double p = (block.received - block.reference).segment(g * k_count, k_count).squaredNorm() / k_count;
        n.hwi_min = std::min(n.hwi_min, p);
        n.hwi_max = std::max(n.hwi_max, p);
    }
    n.background = block.setup.frame.combiners.col(0).squaredNorm() * block.setup.ofdm.noise_variance();
    return n;
}

double wilson_halfwidth(long long errors, long long trials, double z) {
    if (trials <= 0) return 0.0;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(errors) / n;
    return z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / (1.0 + z * z / n);
}

SerResult ser_monte_carlo(const CommSetup& setup, const CommLink& link, const HwiConfig& hwi,
                          std::mt19937_64& rng) {
    setup.validate();
    hwi.validate();
    const QamConstellation qam(setup.modulation_order);
    const int k_count = link.ofdm.n_subcarriers;
    const double amplitude = std::sqrt(link.ofdm.tx_power_w() / link.ue_array.size());
    SerResult out;
    for (int r = 0; r < setup.realizations; ++r) {
        const HwiRealization h =
            sample_realization(hwi, link.ue_array, link.bs_array, setup.ofdm_symbols, k_count, rng);
        const DataBlock block = transmit_block(link, h, qam, setup.ofdm_symbols, rng);
        const Observation obs = add_noise(block.received, block.setup, rng);
        for (Eigen::Index i = 0; i < obs.y.size(); ++i) {
            const cdouble channel = block.reference(i) / block.setup.frame.pilots(i / k_count, i % k_count);
            const cdouble equalized = obs.y(i) / (channel * amplitude);
            if (qam.decide(equalized) != block.labels[i]) ++out.errors;
        }
        out.symbols += obs.y.size();
        const EquivalentNoise n = equivalent_hwi_noise(block);
        out.analytic += ser_analytic(qam.order(), n.snr());
        out.analytic_low += ser_analytic(qam.order(), n.snr_best());
        out.analytic_high += ser_analytic(qam.order(), n.snr_worst());
        out.hwi_power += n.hwi_mean;
        out.background_power = n.background;
    }
    const double count = setup.realizations;
    out.analytic /= count;
    out.analytic_low /= count;
    out.analytic_high /= count;
    out.hwi_power /= count;
    out.ser = static_cast<double>(out.errors) / static_cast<double>(out.symbols);
    out.halfwidth = wilson_halfwidth(out.errors, out.symbols);
    return out;
}

}  // namespace hwiloc
