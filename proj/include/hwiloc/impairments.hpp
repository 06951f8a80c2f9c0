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
#include "hwiloc/types.hpp"

#include <array>
#include <random>
#include <string>
#include <vector>

namespace hwiloc {

enum class Impairment : int {
    PhaseNoise = 0,
    Cfo,
    MutualCoupling,
    PowerAmplifier,
    ArrayGain,
    AntennaDisplacement,
    IqImbalance,
};
inline constexpr int kImpairmentCount = 7;

/// Set of enabled impairments. Text form: "all", "none" or a '+'/','-separated
/// list of pn, cfo, mc, pa, age, ade, iqi.
class ImpairmentMask {
public:
    static ImpairmentMask all();
    static ImpairmentMask none();
    static ImpairmentMask only(Impairment which);
    static ImpairmentMask parse(const std::string& text);

    bool enabled(Impairment which) const { return bits_[static_cast<int>(which)]; }
    void set(Impairment which, bool on) { bits_[static_cast<int>(which)] = on; }
    bool any() const;
    std::string to_string() const;

    bool operator==(const ImpairmentMask&) const = default;

private:
    std::array<bool, kImpairmentCount> bits_{};
};

/// Memoryless polynomial PA with hard magnitude clipping. Inputs are sample
/// amplitudes in sqrt(W); the polynomial acts on x / sqrt(load_ohm).
struct PaModel {
    std::vector<cdouble> coeffs{cdouble(1.0, 0.0)};
    double clip_v = 1.0;
    double load_ohm = 50.0;

    static PaModel identity();
    bool is_identity() const;
};

/// Impairment severities. Sigmas are the c_HWI = 1 levels; mask and c_hwi
/// are applied when sampling. sigma_pn is in radians.
struct HwiConfig {
    double sigma_pn = 0.0;
    double sigma_cfo = 0.0;
    double sigma_mc = 0.0;
    PaModel pa;
    double sigma_age_amp = 0.0;
    double sigma_age_phase = 0.0;
    double sigma_ade = 0.0;
    double sigma_iqi_amp = 0.0;
    double sigma_iqi_phase = 0.0;
    double c_hwi = 1.0;
    bool tx_pn_cfo_enabled = true;
    ImpairmentMask mask = ImpairmentMask::all();

    /// Default severity table (60 GHz, 2 deg PN, 2e-4 CFO, ...).
    static HwiConfig defaults();
    void validate() const;
    /// sigma of `which` after masking and c_HWI scaling (PA has no sigma).
    double effective(double sigma, Impairment which) const;
    /// PA after masking (identity when disabled).
    PaModel effective_pa() const;
};

struct IqPair {
    cdouble alpha{1.0, 0.0};
    cdouble beta{0.0, 0.0};

    /// alpha = (1 + m e^{j psi}) / 2, beta = (1 - m e^{j psi}) / 2.
    static IqPair from_imbalance(double amplitude, double phase);
};

/// Impairments of one end of a link (UE transmitter or BS receiver).
struct EndImpairments {
    double cfo = 0.0;
    MatX pn;       ///< per (transmission, time sample), radians, G x K
    CMat coupling; ///< N x N, unit diagonal
    CVec gains;    ///< complex excitation coefficients, N
    Mat3X displacement; ///< 3 x N, first row zero
    IqPair iqi;

    static EndImpairments ideal(int n_elements, int n_transmissions, int n_subcarriers);
    int n_elements() const { return static_cast<int>(gains.size()); }
};

struct HwiRealization {
    EndImpairments tx;
    EndImpairments rx;
    PaModel pa;

    static HwiRealization ideal(int n_ue, int n_bs, int n_transmissions, int n_subcarriers);
    /// Copy keeping only the static channel impairments (MC, AGE, ADE).
    HwiRealization channel_only() const;
};

/// Draws one end. Static quantities (MC, AGE, ADE, IQI) come from
/// `static_rng`; PN/CFO from `dynamic_rng`. Every draw is taken regardless of
/// masks or scales, so streams stay aligned across c_HWI and mask settings.
EndImpairments sample_end_impairments(const HwiConfig& cfg, const ArrayLayout& layout, int n_transmissions,
                                      int n_subcarriers, std::mt19937_64& static_rng,
                                      std::mt19937_64& dynamic_rng, bool pn_cfo_enabled);

/// Draws a full single-link realization from one stream (TX first, then RX).
HwiRealization sample_realization(const HwiConfig& cfg, const ArrayLayout& ue_layout,
                                  const ArrayLayout& bs_layout, int n_transmissions, int n_subcarriers,
                                  std::mt19937_64& rng);

// ---- signal-domain transforms -----------------------------------------

/// Unitary K-point DFT: F_{k,n} = exp(-j 2 pi k n / K) / sqrt(K).
class Dft {
public:
    explicit Dft(int size);
    int size() const { return static_cast<int>(matrix_.rows()); }
    CVec forward(const CVec& time) const;
    CVec inverse(const CVec& freq) const;
    const CMat& matrix() const { return matrix_; }

private:
    CMat matrix_;
    CMat adjoint_;
};

/// Diagonal of E_g = e^{j 2 pi eps g K_tot / K} diag(1, e^{j 2 pi eps / K}, ...),
/// K_tot = K + K_cp.
CVec cfo_matrix(double eps, int g, int n_subcarriers, int cp_len);
/// Diagonal of Xi_g = diag(e^{j nu_{g,1}}, ...).
CVec pn_matrix(const Eigen::Ref<const VecX>& pn_row);

/// F (E Xi (F^H y)). `pn_diag` and `cfo_diag` hold the diagonals.
CVec apply_pn_cfo(const CVec& freq_signal, const CVec& pn_diag, const CVec& cfo_diag, const Dft& dft);

/// Block tridiagonal coupling matrix in ArrayLayout element order: blocks
/// C1 = Toeplitz([1, c_x, 0...]) on the diagonal, C2 = Toeplitz([c_x, c_xy, 0...])
/// off it. Grid neighbors couple with c_x, diagonal neighbors with c_xy.
CMat mutual_coupling_matrix(cdouble c_x, cdouble c_xy, int n_y, int n_z);

/// Voltage-domain polynomial h_PA(v).
cdouble pa_polynomial(cdouble voltage, const PaModel& pa);
/// Elementwise sqrt(R) h_PA(x / sqrt(R)).
CVec pa_transfer(const CVec& samples, const PaModel& pa);
cdouble pa_transfer(cdouble sample, const PaModel& pa);

/// x -> alpha x + beta conj(x), elementwise on time-domain samples.
CVec apply_iqi(const CVec& samples, const IqPair& iqi);

}  // namespace hwiloc
