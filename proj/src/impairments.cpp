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

#include "hwiloc/impairments.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace hwiloc {

namespace {

constexpr std::array<const char*, kImpairmentCount> kMaskNames = {"pn", "cfo", "mc", "pa", "age", "ade", "iqi"};

void require_non_negative(double v, const char* field) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
        throw ConfigError(std::string("hwi.") + field + " must be a finite non-negative number");
    }
}

}  // namespace

ImpairmentMask ImpairmentMask::all() {
    ImpairmentMask m;
    m.bits_.fill(true);
    return m;
}

ImpairmentMask ImpairmentMask::none() { return ImpairmentMask{}; }

ImpairmentMask ImpairmentMask::only(Impairment which) {
    ImpairmentMask m;
    m.set(which, true);
    return m;
}

ImpairmentMask ImpairmentMask::parse(const std::string& text) {
    if (text == "all") return all();
    if (text == "none" || text.empty()) return none();
    ImpairmentMask m;
    std::string token;
    std::istringstream in(text);
    auto consume = [&](const std::string& name) {
        for (int i = 0; i < kImpairmentCount; ++i) {
            if (name == kMaskNames[i]) {
                m.bits_[i] = true;
                return;
            }
        }
        throw ConfigError("mask: unknown impairment '" + name + "'");
    };
    for (char ch : text) {
        if (ch == '+' || ch == ',') {
            if (!token.empty()) consume(token);
            token.clear();
        } else if (ch != ' ') {
            token.push_back(ch);
        }
    }
    if (!token.empty()) consume(token);
    return m;
}

bool ImpairmentMask::any() const {
    for (bool b : bits_) {
        if (b) return true;
    }
    return false;
}

std::string ImpairmentMask::to_string() const {
    if (*this == all()) return "all";
    if (!any()) return "none";
    std::string out;
    for (int i = 0; i < kImpairmentCount; ++i) {
        if (!bits_[i]) continue;
        if (!out.empty()) out += '+';
        out += kMaskNames[i];
    }
    return out;
}

PaModel PaModel::identity() {
    PaModel pa;
    pa.coeffs = {cdouble(1.0, 0.0)};
    pa.clip_v = std::numeric_limits<double>::infinity();
    return pa;
}

bool PaModel::is_identity() const {
    if (coeffs.empty() || coeffs[0] != cdouble(1.0, 0.0)) return false;
    for (std::size_t q = 1; q < coeffs.size(); ++q) {
        if (coeffs[q] != cdouble(0.0, 0.0)) return false;
    }
    return std::isinf(clip_v);
}

HwiConfig HwiConfig::defaults() {
    HwiConfig c;
    c.sigma_pn = deg2rad(2.0);
    c.sigma_cfo = 2e-4;
    c.sigma_mc = 1e-3;
    c.pa.coeffs = {cdouble(0.9798, 0.0286), cdouble(0.0122, -0.0043), cdouble(-0.0007, 0.0001)};
    c.pa.clip_v = 1.0;
    c.pa.load_ohm = 50.0;
    c.sigma_age_amp = 2e-3;
    c.sigma_age_phase = 2e-3;
    c.sigma_ade = 5e-6;
    c.sigma_iqi_amp = 0.02;
    c.sigma_iqi_phase = 0.02;
    return c;
}

void HwiConfig::validate() const {
    require_non_negative(sigma_pn, "sigma_pn");
    require_non_negative(sigma_cfo, "sigma_cfo");
    require_non_negative(sigma_mc, "sigma_mc");
    require_non_negative(sigma_age_amp, "sigma_age_amp");
    require_non_negative(sigma_age_phase, "sigma_age_phase");
    require_non_negative(sigma_ade, "sigma_ade");
    require_non_negative(sigma_iqi_amp, "sigma_iqi_amp");
    require_non_negative(sigma_iqi_phase, "sigma_iqi_phase");
    require_non_negative(c_hwi, "c_hwi");
    if (pa.coeffs.empty()) throw ConfigError("hwi.pa_coeffs must contain at least one coefficient");
    if (!(pa.clip_v > 0.0)) throw ConfigError("hwi.pa_clip must be positive");
    if (!(pa.load_ohm > 0.0) || !std::isfinite(pa.load_ohm)) throw ConfigError("hwi.load_ohm must be positive");
}

double HwiConfig::effective(double sigma, Impairment which) const {
    return mask.enabled(which) ? sigma * c_hwi : 0.0;
}

PaModel HwiConfig::effective_pa() const {
    if (!mask.enabled(Impairment::PowerAmplifier)) {
        PaModel id = PaModel::identity();
        id.load_ohm = pa.load_ohm;
        return id;
    }
    return pa;
}

IqPair IqPair::from_imbalance(double amplitude, double phase) {
    const cdouble me = std::polar(amplitude, phase);
    return IqPair{0.5 + 0.5 * me, 0.5 - 0.5 * me};
}

EndImpairments EndImpairments::ideal(int n_elements, int n_transmissions, int n_subcarriers) {
    EndImpairments e;
    e.pn = MatX::Zero(n_transmissions, n_subcarriers);
    e.coupling = CMat::Identity(n_elements, n_elements);
    e.gains = CVec::Ones(n_elements);
    e.displacement = Mat3X::Zero(3, n_elements);
    return e;
}

HwiRealization HwiRealization::ideal(int n_ue, int n_bs, int n_transmissions, int n_subcarriers) {
    HwiRealization r;
    r.tx = EndImpairments::ideal(n_ue, n_transmissions, n_subcarriers);
    r.rx = EndImpairments::ideal(n_bs, n_transmissions, n_subcarriers);
    r.pa = PaModel::identity();
    return r;
}

HwiRealization HwiRealization::channel_only() const {
    HwiRealization r = HwiRealization::ideal(tx.n_elements(), rx.n_elements(), static_cast<int>(tx.pn.rows()),
                                             static_cast<int>(tx.pn.cols()));
    r.tx.coupling = tx.coupling;
    r.tx.gains = tx.gains;
    r.tx.displacement = tx.displacement;
    r.rx.coupling = rx.coupling;
    r.rx.gains = rx.gains;
    r.rx.displacement = rx.displacement;
    r.pa.load_ohm = pa.load_ohm;
    return r;
}

EndImpairments sample_end_impairments(const HwiConfig& cfg, const ArrayLayout& layout, int n_transmissions,
                                      int n_subcarriers, std::mt19937_64& static_rng,
                                      std::mt19937_64& dynamic_rng, bool pn_cfo_enabled) {
    const int n = layout.size();
    std::normal_distribution<double> normal(0.0, 1.0);
    EndImpairments e = EndImpairments::ideal(n, n_transmissions, n_subcarriers);

    const double s_cfo = pn_cfo_enabled ? cfg.effective(cfg.sigma_cfo, Impairment::Cfo) : 0.0;
    const double s_pn = pn_cfo_enabled ? cfg.effective(cfg.sigma_pn, Impairment::PhaseNoise) : 0.0;
    e.cfo = s_cfo * normal(dynamic_rng);
    for (int g = 0; g < n_transmissions; ++g) {
        for (int k = 0; k < n_subcarriers; ++k) e.pn(g, k) = s_pn * normal(dynamic_rng);
    }

    const double s_mc = cfg.effective(cfg.sigma_mc, Impairment::MutualCoupling);
    const double cx_re = normal(static_rng), cx_im = normal(static_rng);
    const double cxy_re = normal(static_rng), cxy_im = normal(static_rng);
    const cdouble c_x = (s_mc / std::sqrt(2.0)) * cdouble(cx_re, cx_im);
    const cdouble c_xy = (s_mc / (2.0 * std::sqrt(2.0))) * cdouble(cxy_re, cxy_im);
    e.coupling = mutual_coupling_matrix(c_x, c_xy, layout.n_y, layout.n_z);

    const double s_aa = cfg.effective(cfg.sigma_age_amp, Impairment::ArrayGain);
    const double s_ap = cfg.effective(cfg.sigma_age_phase, Impairment::ArrayGain);
    for (int i = 0; i < n; ++i) {
        const double da = normal(static_rng);
        const double dp = normal(static_rng);
        e.gains(i) = std::polar(1.0 + s_aa * da, s_ap * dp);
    }

    const double s_ad = cfg.effective(cfg.sigma_ade, Impairment::AntennaDisplacement);
    for (int i = 0; i < n; ++i) {
        const double dy = normal(static_rng);
        const double dz = normal(static_rng);
        e.displacement(1, i) = s_ad * dy;
        e.displacement(2, i) = s_ad * dz;
    }

    const double s_ia = cfg.effective(cfg.sigma_iqi_amp, Impairment::IqImbalance);
    const double s_ip = cfg.effective(cfg.sigma_iqi_phase, Impairment::IqImbalance);
    const double dm = normal(static_rng);
    const double dpsi = normal(static_rng);
    e.iqi = IqPair::from_imbalance(1.0 + s_ia * dm, s_ip * dpsi);
    return e;
}

HwiRealization sample_realization(const HwiConfig& cfg, const ArrayLayout& ue_layout,
                                  const ArrayLayout& bs_layout, int n_transmissions, int n_subcarriers,
                                  std::mt19937_64& rng) {
    cfg.validate();
    HwiRealization r;
    r.tx = sample_end_impairments(cfg, ue_layout, n_transmissions, n_subcarriers, rng, rng, cfg.tx_pn_cfo_enabled);
    r.rx = sample_end_impairments(cfg, bs_layout, n_transmissions, n_subcarriers, rng, rng, true);
    r.pa = cfg.effective_pa();
    return r;
}

Dft::Dft(int size) {
    if (size < 1) throw DimensionError("DFT size must be positive");
    matrix_.resize(size, size);
    const double scale = 1.0 / std::sqrt(static_cast<double>(size));
    for (int k = 0; k < size; ++k) {
        for (int n = 0; n < size; ++n) {
            const long long kn = (static_cast<long long>(k) * n) % size;
            matrix_(k, n) = std::polar(scale, -2.0 * kPi * static_cast<double>(kn) / size);
        }
    }
    adjoint_ = matrix_.adjoint();
}

CVec Dft::forward(const CVec& time) const {
    if (time.size() != matrix_.rows()) throw DimensionError("DFT input length mismatch");
    return matrix_ * time;
}

CVec Dft::inverse(const CVec& freq) const {
    if (freq.size() != matrix_.rows()) throw DimensionError("DFT input length mismatch");
    return adjoint_ * freq;
}

CVec cfo_matrix(double eps, int g, int n_subcarriers, int cp_len) {
    if (n_subcarriers < 1) throw DimensionError("cfo_matrix needs K >= 1");
    const double k = n_subcarriers;
    const double total = n_subcarriers + cp_len;
    const double lead = 2.0 * kPi * eps * g * total / k;
    CVec d(n_subcarriers);
    for (int n = 0; n < n_subcarriers; ++n) d(n) = std::polar(1.0, lead + 2.0 * kPi * eps * n / k);
    return d;
}

CVec pn_matrix(const Eigen::Ref<const VecX>& pn_row) {
    CVec d(pn_row.size());
    for (Eigen::Index n = 0; n < pn_row.size(); ++n) d(n) = std::polar(1.0, pn_row(n));
    return d;
}

CVec apply_pn_cfo(const CVec& freq_signal, const CVec& pn_diag, const CVec& cfo_diag, const Dft& dft) {
    if (freq_signal.size() != dft.size() || pn_diag.size() != dft.size() || cfo_diag.size() != dft.size()) {
        throw DimensionError("apply_pn_cfo: length mismatch");
    }
    const CVec time = dft.inverse(freq_signal);
    return dft.forward((cfo_diag.array() * pn_diag.array() * time.array()).matrix());
}

CMat mutual_coupling_matrix(cdouble c_x, cdouble c_xy, int n_y, int n_z) {
    if (n_y < 1 || n_z < 1) throw DimensionError("mutual_coupling_matrix needs positive dimensions");
    const int n = n_y * n_z;
    CMat c = CMat::Zero(n, n);
    for (int by = 0; by < n_y; ++by) {
        for (int bz = 0; bz < n_y; ++bz) {
            const int block_gap = std::abs(by - bz);
            if (block_gap > 1) continue;
            for (int iz = 0; iz < n_z; ++iz) {
                for (int jz = 0; jz < n_z; ++jz) {
                    const int gap = std::abs(iz - jz);
                    cdouble v(0.0, 0.0);
                    if (block_gap == 0) {
                        v = gap == 0 ? cdouble(1.0, 0.0) : (gap == 1 ? c_x : cdouble(0.0, 0.0));
                    } else {
                        v = gap == 0 ? c_x : (gap == 1 ? c_xy : cdouble(0.0, 0.0));
                    }
                    c(by * n_z + iz, bz * n_z + jz) = v;
                }
            }
        }
    }
    return c;
}

cdouble pa_polynomial(cdouble voltage, const PaModel& pa) {
    const double mag = std::abs(voltage);
    cdouble out(0.0, 0.0);
    if (mag <= pa.clip_v) {
        double power = 1.0;
        for (const cdouble& b : pa.coeffs) {
            out += b * voltage * power;
            power *= mag;
        }
    } else {
        const cdouble unit = voltage / mag;
        double power = pa.clip_v;
        for (const cdouble& b : pa.coeffs) {
            out += b * unit * power;
            power *= pa.clip_v;
        }
    }
    return out;
}

cdouble pa_transfer(cdouble sample, const PaModel& pa) {
    const double root_r = std::sqrt(pa.load_ohm);
    return root_r * pa_polynomial(sample / root_r, pa);
}

CVec pa_transfer(const CVec& samples, const PaModel& pa) {
    if (pa.is_identity()) return samples;
    CVec out(samples.size());
    for (Eigen::Index i = 0; i < samples.size(); ++i) out(i) = pa_transfer(samples(i), pa);
    return out;
}

CVec apply_iqi(const CVec& samples, const IqPair& iqi) {
    return (iqi.alpha * samples.array() + iqi.beta * samples.array().conjugate()).matrix();
}

}  // namespace hwiloc
