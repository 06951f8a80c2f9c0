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

#include "hwiloc/forward_model.hpp"

#include <cmath>
#include <limits>

namespace hwiloc {

namespace {

void check_link(const LinkSetup& link) {
    const PilotFrame& f = link.frame;
    if (f.pilots.cols() != link.ofdm.n_subcarriers) throw DimensionError("pilot frame does not match K");
    if (f.precoders.rows() != link.ue_array.size() || f.precoders.cols() != f.n_transmissions())
        throw DimensionError("precoders do not match the UE array or G");
    if (f.combiners.rows() != link.bs_array.size() || f.combiners.cols() != f.n_transmissions())
        throw DimensionError("combiners do not match the BS array or G");
}

CVec delay_ramp(double tau, const OfdmConfig& ofdm) {
    CVec d(ofdm.n_subcarriers);
    for (int k = 0; k < ofdm.n_subcarriers; ++k) d(k) = std::polar(1.0, -2.0 * kPi * k * ofdm.subcarrier_spacing * tau);
    return d;
}

bool unit_modulus(const CVec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(std::abs(v(i)) - 1.0) > 1e-12) return false;
    }
    return true;
}

}  // namespace

double OfdmConfig::bandwidth() const {
    return noise_bandwidth_hz > 0.0 ? noise_bandwidth_hz : n_subcarriers * subcarrier_spacing;
}

double OfdmConfig::tx_power_w() const { return 1e-3 * std::pow(10.0, tx_power_dbm / 10.0); }

double OfdmConfig::noise_variance() const {
    const double n0 = 1e-3 * std::pow(10.0, noise_psd_dbm_hz / 10.0);
    return n0 * bandwidth() * std::pow(10.0, noise_figure_db / 10.0);
}

void OfdmConfig::validate() const {
    if (!(carrier_hz > 0.0)) throw ConfigError("ofdm.carrier_hz must be positive");
    if (!(subcarrier_spacing > 0.0)) throw ConfigError("ofdm.subcarrier_spacing must be positive");
    if (n_subcarriers < 1) throw ConfigError("ofdm.n_subcarriers must be >= 1");
    if (!std::isfinite(tx_power_dbm)) throw ConfigError("ofdm.tx_power_dbm must be finite");
    if (noise_bandwidth_hz < 0.0) throw ConfigError("ofdm.noise_bandwidth_hz must be non-negative");
}

std::array<double, 4> prior_frequencies(const ChannelParams& eta, double offset) {
    const SpatialFrequencies w = spatial_frequencies(eta, 1.0);
    return {w.omega[0] + offset, w.omega[1] + offset, w.omega[2] + offset, w.omega[3] + offset};
}

Codebooks build_codebooks(const std::array<double, 4>& prior, const SweepConfig& sweep, const ArrayLayout& bs,
                          const ArrayLayout& ue, double wavelength) {
    Codebooks cb;
    cb.wavelength = wavelength;
    cb.coordinates = {bs.y_coordinates(), bs.z_coordinates(), ue.y_coordinates(), ue.z_coordinates()};
    for (int n = 0; n < 4; ++n) {
        const int m_n = sweep.beams[n];
        if (m_n < 1) throw ConfigError("sweep.beams entries must be >= 1");
        if (!std::isfinite(prior[n])) throw ConfigError("location prior must be finite");
        cb.grid[n].resize(m_n);
        cb.matrices[n].resize(cb.coordinates[n].size(), m_n);
        for (int m = 1; m <= m_n; ++m) {
            const double omega = prior[n] + 0.5 * (2 * m - m_n - 1) * sweep.grid_step;
            cb.grid[n](m - 1) = omega;
            cb.matrices[n].col(m - 1) = axis_steering(cb.coordinates[n], omega, wavelength);
        }
    }
    return cb;
}

std::vector<BeamIndex> sweep_schedule(const std::array<int, 4>& beams, SweepOrder order) {
    std::vector<BeamIndex> out;
    out.reserve(static_cast<std::size_t>(beams[0]) * beams[1] * beams[2] * beams[3]);
    if (order == SweepOrder::BsFirst) {
        for (int m3 = 0; m3 < beams[2]; ++m3)
            for (int m4 = 0; m4 < beams[3]; ++m4)
                for (int m1 = 0; m1 < beams[0]; ++m1)
                    for (int m2 = 0; m2 < beams[1]; ++m2) out.push_back({m1, m2, m3, m4});
    } else {
        for (int m1 = 0; m1 < beams[0]; ++m1)
            for (int m2 = 0; m2 < beams[1]; ++m2)
                for (int m3 = 0; m3 < beams[2]; ++m3)
                    for (int m4 = 0; m4 < beams[3]; ++m4) out.push_back({m1, m2, m3, m4});
    }
    return out;
}

PilotFrame make_pilot_frame(const Codebooks& codebooks, const SweepConfig& sweep, const OfdmConfig& ofdm,
                            int n_ue_elements, std::mt19937_64& rng) {
    ofdm.validate();
    PilotFrame f;
    f.codebooks = codebooks;
    f.schedule = sweep_schedule(sweep.beams, sweep.order);
    const int g_count = static_cast<int>(f.schedule.size());
    const int k_count = ofdm.n_subcarriers;
    const double amplitude = std::sqrt(ofdm.tx_power_w() / n_ue_elements);

    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    f.pilots.resize(g_count, k_count);
    for (int g = 0; g < g_count; ++g)
        for (int k = 0; k < k_count; ++k) f.pilots(g, k) = std::polar(amplitude, phase(rng));
    if (ofdm.waveform == Waveform::DftSpread) {
        const Dft dft(k_count);
        for (int g = 0; g < g_count; ++g) f.pilots.row(g) = dft.forward(f.pilots.row(g).transpose()).transpose();
    }

    const int n_bs = static_cast<int>(codebooks.coordinates[0].size() * codebooks.coordinates[1].size());
    const int n_ue = static_cast<int>(codebooks.coordinates[2].size() * codebooks.coordinates[3].size());
    if (n_ue != n_ue_elements) throw DimensionError("codebooks do not match the UE array");
    f.combiners.resize(n_bs, g_count);
    f.precoders.resize(n_ue, g_count);
    for (int g = 0; g < g_count; ++g) {
        const BeamIndex& b = f.schedule[g];
        const CVec t1 = codebooks.matrices[0].col(b[0]), t2 = codebooks.matrices[1].col(b[1]);
        const CVec t3 = codebooks.matrices[2].col(b[2]), t4 = codebooks.matrices[3].col(b[3]);
        for (Eigen::Index iy = 0; iy < t1.size(); ++iy)
            for (Eigen::Index iz = 0; iz < t2.size(); ++iz) f.combiners(iy * t2.size() + iz, g) = std::conj(t1(iy) * t2(iz));
        for (Eigen::Index iy = 0; iy < t3.size(); ++iy)
            for (Eigen::Index iz = 0; iz < t4.size(); ++iz) f.precoders(iy * t4.size() + iz, g) = std::conj(t3(iy) * t4(iz));
    }
    return f;
}

CVec mm_mean(const ChannelParams& eta, const LinkSetup& link) {
    check_link(link);
    const double fc = link.ofdm.carrier_hz;
    const CVec a_b = steering_vector(link.bs_array, eta.phi_b, eta.theta_b, fc);
    const CVec a_u = steering_vector(link.ue_array, eta.phi_u, eta.theta_u, fc);
    const CVec d = delay_ramp(eta.tau, link.ofdm);
    const cdouble alpha = eta.gain();
    const PilotFrame& f = link.frame;
    const int k_count = f.n_subcarriers();
    const CVec bs_gain = f.combiners.transpose() * a_b;
    const CVec ue_gain = f.precoders.transpose() * a_u;
    CVec mu(f.n_transmissions() * k_count);
    for (int g = 0; g < f.n_transmissions(); ++g) {
        const cdouble scale = alpha * bs_gain(g) * ue_gain(g);
        for (int k = 0; k < k_count; ++k) mu(g * k_count + k) = scale * d(k) * f.pilots(g, k);
    }
    return mu;
}

CMat mm_jacobian(const ChannelParams& eta, const LinkSetup& link) {
    check_link(link);
    const double fc = link.ofdm.carrier_hz;
    const SteeringDerivatives sb = steering_vector_with_derivatives(link.bs_array, eta.phi_b, eta.theta_b, fc);
    const SteeringDerivatives su = steering_vector_with_derivatives(link.ue_array, eta.phi_u, eta.theta_u, fc);
    const CVec d = delay_ramp(eta.tau, link.ofdm);
    const cdouble unit_gain = std::polar(1.0, -eta.xi);
    const cdouble alpha = eta.gain();
    const PilotFrame& f = link.frame;
    const int k_count = f.n_subcarriers();
    const CMat wt = f.combiners.transpose();
    const CMat vt = f.precoders.transpose();
    const CVec b0 = wt * sb.value, b_az = wt * sb.d_azimuth, b_el = wt * sb.d_elevation;
    const CVec u0 = vt * su.value, u_az = vt * su.d_azimuth, u_el = vt * su.d_elevation;

    CMat jac(f.n_transmissions() * k_count, ChannelParams::kDim);
    for (int g = 0; g < f.n_transmissions(); ++g) {
        const cdouble base = b0(g) * u0(g);
        for (int k = 0; k < k_count; ++k) {
            const cdouble dx = d(k) * f.pilots(g, k);
            const cdouble mu = alpha * base * dx;
            const int row = g * k_count + k;
            jac(row, 0) = alpha * b_az(g) * u0(g) * dx;
            jac(row, 1) = alpha * b_el(g) * u0(g) * dx;
            jac(row, 2) = alpha * b0(g) * u_az(g) * dx;
            jac(row, 3) = alpha * b0(g) * u_el(g) * dx;
            jac(row, 4) = -kJ * 2.0 * kPi * static_cast<double>(k) * link.ofdm.subcarrier_spacing * mu;
            jac(row, 5) = unit_gain * base * dx;
            jac(row, 6) = -kJ * mu;
        }
    }
    return jac;
}

CVec tm_mean(const ChannelParams& eta, const HwiRealization& hwi, const LinkSetup& link) {
    check_link(link);
    const PilotFrame& f = link.frame;
    const int g_count = f.n_transmissions();
    const int k_count = f.n_subcarriers();
    const int n_ue = link.ue_array.size();
    const int n_bs = link.bs_array.size();
    if (hwi.tx.n_elements() != n_ue || hwi.rx.n_elements() != n_bs)
        throw DimensionError("impairment realization does not match the arrays");
    if (hwi.tx.pn.rows() != g_count || hwi.tx.pn.cols() != k_count || hwi.rx.pn.rows() != g_count ||
        hwi.rx.pn.cols() != k_count)
        throw DimensionError("phase-noise samples do not match G x K");

    const double fc = link.ofdm.carrier_hz;
    const int cp = link.ofdm.cyclic_prefix();
    const Dft dft(k_count);
    const CVec a_b = hwi.rx.coupling * perturbed_steering_vector(link.bs_array, hwi.rx.displacement, hwi.rx.gains,
                                                                 eta.phi_b, eta.theta_b, fc);
    const CVec a_u = hwi.tx.coupling * perturbed_steering_vector(link.ue_array, hwi.tx.displacement, hwi.tx.gains,
                                                                 eta.phi_u, eta.theta_u, fc);
    const CVec d = delay_ramp(eta.tau, link.ofdm);
    const cdouble alpha = eta.gain();
    const bool linear_pa = hwi.pa.is_identity();

    CVec out(g_count * k_count);
    for (int g = 0; g < g_count; ++g) {
        const CVec v = f.precoders.col(g);
        CVec s = dft.inverse(f.pilots.row(g).transpose());
        s = apply_iqi(s, hwi.tx.iqi);
        s = (cfo_matrix(hwi.tx.cfo, g, k_count, cp).array() * pn_matrix(hwi.tx.pn.row(g).transpose()).array() *
             s.array())
                .matrix();

        // columns of the transmitted block are the per-antenna signals after the PA
        CVec radiated(k_count);
        if (linear_pa || unit_modulus(v)) {
            // h(v s) = v h(s) for |v| = 1, so one stream carries every antenna
            radiated = dft.forward(pa_transfer(s, hwi.pa)) * (v.transpose() * a_u)(0);
        } else {
            radiated.setZero();
            for (int n = 0; n < n_ue; ++n) radiated += dft.forward(pa_transfer((v(n) * s).eval(), hwi.pa)) * a_u(n);
        }

        const cdouble bs_gain = (a_b.transpose() * f.combiners.col(g))(0);
        CVec z = (alpha * bs_gain) * (d.array() * radiated.array()).matrix();
        CVec r = dft.inverse(z);
        r = (cfo_matrix(hwi.rx.cfo, g, k_count, cp).array() * pn_matrix(hwi.rx.pn.row(g).transpose()).array() *
             r.array())
                .matrix();
        r = apply_iqi(r, hwi.rx.iqi);
        out.segment(g * k_count, k_count) = dft.forward(r);
    }
    return out;
}

VecX noise_variances(const LinkSetup& link) {
    const double sigma2 = link.ofdm.noise_variance();
    VecX var(link.frame.n_transmissions());
    for (int g = 0; g < var.size(); ++g) var(g) = link.frame.combiners.col(g).squaredNorm() * sigma2;
    return var;
}

Observation add_noise(const CVec& mean, const LinkSetup& link, std::mt19937_64& rng) {
    const int k_count = link.frame.n_subcarriers();
    if (mean.size() != link.frame.n_transmissions() * k_count) throw DimensionError("mean does not match G x K");
    Observation obs;
    obs.noise_var = noise_variances(link);
    obs.y = mean;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int g = 0; g < obs.noise_var.size(); ++g) {
        const double sd = std::sqrt(obs.noise_var(g) / 2.0);
        for (int k = 0; k < k_count; ++k) {
            const double re = normal(rng), im = normal(rng);
            obs.y(g * k_count + k) += sd * cdouble(re, im);
        }
    }
    return obs;
}

}  // namespace hwiloc
