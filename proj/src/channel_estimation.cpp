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

#include "hwiloc/channel_estimation.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace hwiloc {

namespace {

constexpr int kAlsSweeps = 20;
constexpr double kGridFraction = 1.0 / 50.0;

std::array<int, 5> multi_index(std::size_t linear, const std::array<int, 5>& dims) {
    std::array<int, 5> idx{};
    for (int n = 4; n >= 0; --n) {
        idx[n] = static_cast<int>(linear % dims[n]);
        linear /= dims[n];
    }
    return idx;
}

CVec dominant_vector(const CMat& unfolding) {
    const CMat gram = unfolding * unfolding.adjoint();
    const Eigen::SelfAdjointEigenSolver<CMat> eig(gram);
    return eig.eigenvectors().col(gram.rows() - 1);
}

/// Contraction of the tensor with conj(f_m) over every mode except `mode`.
CVec contract_except(const BeamspaceTensor& t, const std::array<CVec, 5>& f, int mode) {
    CVec out = CVec::Zero(t.dims[mode]);
    for (std::size_t i = 0; i < static_cast<std::size_t>(t.data.size()); ++i) {
        const std::array<int, 5> idx = multi_index(i, t.dims);
        cdouble w = t.data(static_cast<Eigen::Index>(i));
        for (int m = 0; m < 5; ++m) {
            if (m != mode) w *= std::conj(f[m](idx[m]));
        }
        out(idx[mode]) += w;
    }
    return out;
}

struct GridSearch {
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.0;
    double center = 0.0;
};

/// Maximizes metric(omega) on a uniform grid with parabolic refinement.
/// Equal maxima resolve toward `center`.
template <typename Metric>
double search_peak(const GridSearch& grid, const Metric& metric) {
    const int count = std::max(3, static_cast<int>(std::ceil((grid.hi - grid.lo) / grid.step)) + 1);
    std::vector<double> values(count);
    int best = 0;
    for (int i = 0; i < count; ++i) {
        values[i] = metric(grid.lo + i * grid.step);
        const double tol = 1e-12 * std::max(std::abs(values[best]), 1e-300);
        if (values[i] > values[best] + tol) {
            best = i;
        } else if (std::abs(values[i] - values[best]) <= tol &&
                   std::abs(grid.lo + i * grid.step - grid.center) < std::abs(grid.lo + best * grid.step - grid.center)) {
            best = i;
        }
    }
    double omega = grid.lo + best * grid.step;
    if (best > 0 && best < count - 1) {
        const double a = values[best - 1], b = values[best], c = values[best + 1];
        const double denom = a - 2.0 * b + c;
        if (denom < 0.0) omega += 0.5 * (a - c) / denom * grid.step;
    }
    return omega;
}

struct Whitened {
    CVec y;
    VecX scale;  ///< per-entry 1 / sigma
};

Whitened whiten(const Observation& obs, int k_count) {
    Whitened w;
    w.scale.resize(obs.y.size());
    for (Eigen::Index g = 0; g < obs.noise_var.size(); ++g) {
        const double s = obs.noise_var(g) > 0.0 ? 1.0 / std::sqrt(obs.noise_var(g)) : 1.0;
        w.scale.segment(g * k_count, k_count).setConstant(s);
    }
    w.y = obs.y.cwiseProduct(w.scale.cast<cdouble>());
    return w;
}

void check_observation(const Observation& obs, const LinkSetup& link) {
    const int g = link.frame.n_transmissions(), k = link.frame.n_subcarriers();
    if (obs.y.size() != static_cast<Eigen::Index>(g) * k || obs.noise_var.size() != g)
        throw DimensionError("observation does not match the pilot frame");
}

}  // namespace

CMat BeamspaceTensor::unfold(int mode) const {
    const int rows = dims[mode];
    const int cols = static_cast<int>(data.size() / rows);
    CMat u(rows, cols);
    std::vector<int> next(rows, 0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(data.size()); ++i) {
        const int r = multi_index(i, dims)[mode];
        u(r, next[r]++) = data(static_cast<Eigen::Index>(i));
    }
    return u;
}

BeamspaceTensor assemble_tensor(const Observation& obs, const PilotFrame& frame) {
    const int g_count = frame.n_transmissions(), k_count = frame.n_subcarriers();
    if (obs.y.size() != static_cast<Eigen::Index>(g_count) * k_count)
        throw DimensionError("observation does not match the pilot frame");
    BeamspaceTensor t;
    for (int n = 0; n < 4; ++n) t.dims[n] = frame.codebooks.beams(n);
    t.dims[4] = k_count;
    if (static_cast<int>(frame.schedule.size()) != g_count || t.dims[0] * t.dims[1] * t.dims[2] * t.dims[3] != g_count)
        throw DimensionError("sweep schedule does not match the codebooks");
    t.data.resize(obs.y.size());
    for (int g = 0; g < g_count; ++g) {
        const BeamIndex& b = frame.schedule[g];
        for (int k = 0; k < k_count; ++k) {
            const cdouble x = frame.pilots(g, k);
            if (x == cdouble(0.0, 0.0)) throw EstimationError("zero pilot symbol");
            t.data(static_cast<Eigen::Index>(t.index(b[0], b[1], b[2], b[3], k))) = obs.y(g * k_count + k) / x;
        }
    }
    return t;
}

AzEl angles_from_frequencies(double omega_horizontal, double omega_vertical) {
    const double elevation = std::asin(std::clamp(omega_vertical / kPi, -1.0, 1.0));
    const double c = std::cos(elevation);
    const double azimuth = c > 0.0 ? std::asin(std::clamp(omega_horizontal / (kPi * c), -1.0, 1.0)) : 0.0;
    return {azimuth, elevation};
}

CoarseEstimate coarse_estimate(const BeamspaceTensor& tensor, const PilotFrame& frame, const OfdmConfig& ofdm) {
    const double energy = tensor.data.norm();
    if (!std::isfinite(energy) || energy <= 1e-300) throw EstimationError("no detection: tensor carries no energy");

    CoarseEstimate out;
    for (int n = 0; n < 5; ++n) out.factors[n] = dominant_vector(tensor.unfold(n));
    for (int sweep = 0; sweep < kAlsSweeps; ++sweep) {
        for (int n = 0; n < 5; ++n) {
            const CVec f = contract_except(tensor, out.factors, n);
            const double norm = f.norm();
            if (norm > 0.0) out.factors[n] = f / norm;
        }
    }

    const Codebooks& cb = frame.codebooks;
    for (int n = 0; n < 4; ++n) {
        const VecX& grid = cb.grid[n];
        if (grid.size() == 1) {
            out.omega.omega[n] = grid(0);
            continue;
        }
        const double spacing = grid(1) - grid(0);
        GridSearch gs;
        gs.lo = std::max(-kPi, grid.minCoeff() - spacing);
        gs.hi = std::min(kPi, grid.maxCoeff() + spacing);
        gs.step = spacing * kGridFraction;
        gs.center = 0.5 * (grid.minCoeff() + grid.maxCoeff());
        const CVec& f = out.factors[n];
        out.omega.omega[n] = search_peak(gs, [&](double omega) {
            const CVec b = cb.matrices[n].adjoint() * axis_steering(cb.coordinates[n], omega, cb.wavelength);
            return std::norm(b.dot(f)) / b.squaredNorm();
        });
    }

    const CVec& f5 = out.factors[4];
    const int k_count = static_cast<int>(f5.size());
    GridSearch gs;
    gs.lo = 0.0;
    gs.hi = 2.0 * kPi;
    gs.step = (cb.grid[0].size() > 1 ? (cb.grid[0](1) - cb.grid[0](0)) : 0.15) * kGridFraction;
    gs.center = kPi;
    out.omega.omega[4] = search_peak(gs, [&](double omega) {
        cdouble acc(0.0, 0.0);
        for (int k = 0; k < k_count; ++k) acc += std::polar(1.0, omega * k) * f5(k);
        return std::norm(acc);
    });
    out.omega.omega[4] = std::fmod(out.omega.omega[4] + 2.0 * kPi, 2.0 * kPi);

    const AzEl aoa = angles_from_frequencies(out.omega.omega[0], out.omega.omega[1]);
    const AzEl aod = angles_from_frequencies(out.omega.omega[2], out.omega.omega[3]);
    out.eta.phi_b = aoa.azimuth;
    out.eta.theta_b = aoa.elevation;
    out.eta.phi_u = aod.azimuth;
    out.eta.theta_u = aod.elevation;
    out.eta.tau = out.omega.omega[4] / (2.0 * kPi * ofdm.subcarrier_spacing);
    out.eta.rho = 1.0;
    out.eta.xi = 0.0;
    return out;
}

double projected_cost(const VecX& geometric, const Observation& obs, const LinkSetup& link) {
    check_observation(obs, link);
    const Whitened w = whiten(obs, link.frame.n_subcarriers());
    const CVec gamma = mm_mean(ChannelParams::from_geometric(geometric), link).cwiseProduct(w.scale.cast<cdouble>());
    const double n = gamma.squaredNorm();
    if (!(n > 0.0)) return w.y.squaredNorm();
    return (w.y - gamma * (gamma.dot(w.y) / n)).squaredNorm();
}

cdouble optimal_gain(const VecX& geometric, const Observation& obs, const LinkSetup& link) {
    check_observation(obs, link);
    const Whitened w = whiten(obs, link.frame.n_subcarriers());
    const CVec gamma = mm_mean(ChannelParams::from_geometric(geometric), link).cwiseProduct(w.scale.cast<cdouble>());
    return gamma.dot(w.y) / gamma.squaredNorm();
}

FineResult fine_mmle(const Observation& obs, const ChannelParams& init, const LinkSetup& link,
                     const LmOptions& options) {
    check_observation(obs, link);
    const Whitened w = whiten(obs, link.frame.n_subcarriers());
    const Eigen::Index rows = obs.y.size();
    const CVec scale = w.scale.cast<cdouble>();

    auto linearize = [&](const VecX& c) {
        const ChannelParams eta = ChannelParams::from_geometric(c);
        const CVec gamma = mm_mean(eta, link).cwiseProduct(scale);
        const CMat dgamma = mm_jacobian(eta, link).leftCols(ChannelParams::kGeometricDim).array().colwise() * scale.array();
        const double n = gamma.squaredNorm();
        const cdouble a = gamma.dot(w.y) / n;
        const CVec r = w.y - a * gamma;
        CMat jac(rows, ChannelParams::kGeometricDim);
        for (int i = 0; i < ChannelParams::kGeometricDim; ++i) {
            const CVec& d = dgamma.col(i);
            const double dn = 2.0 * gamma.dot(d).real();
            // derivative of the projector applied to y
            jac.col(i) = -(d * a + gamma * (d.dot(w.y) / n) - gamma * (a * dn / n));
        }
        VecX r_real(2 * rows);
        r_real << r.real(), r.imag();
        MatX j_real(2 * rows, ChannelParams::kGeometricDim);
        j_real << jac.real(), jac.imag();
        return quadratic_model(r_real, j_real);
    };
    auto cost = [&](const VecX& c) { return projected_cost(c, obs, link); };
    auto retract = [](const VecX& c, const VecX& step) { return VecX(c + step); };

    const LmResult lm = levenberg_marquardt(init.geometric(), linearize, cost, retract, options);
    FineResult out;
    out.cost = lm.cost;
    out.iterations = lm.iterations;
    out.converged = lm.converged;
    out.cost_history = lm.cost_history;
    const cdouble alpha = optimal_gain(lm.x, obs, link);
    out.eta = ChannelParams::from_geometric(lm.x, std::abs(alpha), wrap_angle(-std::arg(alpha)));
    out.eta.phi_b = wrap_angle(out.eta.phi_b);
    out.eta.phi_u = wrap_angle(out.eta.phi_u);
    return out;
}

ChannelEstimate estimate_channel(const Observation& obs, const LinkSetup& link, const LmOptions& options) {
    ChannelEstimate est;
    est.coarse = coarse_estimate(assemble_tensor(obs, link.frame), link.frame, link.ofdm);
    est.fine = fine_mmle(obs, est.coarse.eta, link, options);
    return est;
}

}  // namespace hwiloc
