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

#include "hwiloc/bounds.hpp"
#include "hwiloc/channel_estimation.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace hwiloc;
using namespace hwiloc::testing;

namespace {

Observation noiseless(const CVec& mean, const LinkSetup& link) {
    Observation obs;
    obs.y = mean;
    obs.noise_var = noise_variances(link);
    return obs;
}

/// Direct beamspace model alpha * (T1^H a_y) o (T2^H a_z) o (T3^H a_y') o (T4^H a_z') o d.
cdouble beamspace_entry(const TestLink& t, const std::array<int, 5>& idx) {
    const Codebooks& cb = t.setup.frame.codebooks;
    const SpatialFrequencies w = spatial_frequencies(t.eta, t.setup.ofdm.subcarrier_spacing);
    cdouble v = t.eta.gain();
    for (int n = 0; n < 4; ++n) {
        const CVec a = axis_steering(cb.coordinates[n], w.omega[n], cb.wavelength);
        v *= cb.matrices[n].col(idx[n]).dot(a);
    }
    return v * std::polar(1.0, -idx[4] * w.omega[4]);
}

}  // namespace

TEST_CASE("tensor of a noiseless observation matches the beamspace model") {
    const TestLink t = default_link(3);
    const BeamspaceTensor h = assemble_tensor(noiseless(mm_mean(t.eta, t.setup), t.setup), t.setup.frame);
    CHECK(h.dims == std::array<int, 5>{4, 4, 3, 3, 100});
    double worst = 0.0, scale = 0.0;
    for (int m1 = 0; m1 < 4; ++m1)
        for (int m2 = 0; m2 < 4; ++m2)
            for (int m3 = 0; m3 < 3; ++m3)
                for (int m4 = 0; m4 < 3; ++m4)
                    for (int k = 0; k < 100; k += 7) {
                        const cdouble expected = beamspace_entry(t, {m1, m2, m3, m4, k});
                        worst = std::max(worst, std::abs(h(m1, m2, m3, m4, k) - expected));
                        scale = std::max(scale, std::abs(expected));
                    }
    CHECK(worst <= 1e-10 * scale);
}

TEST_CASE("one-beam one-subcarrier tensor") {
    SweepConfig sweep;
    sweep.beams = {1, 1, 1, 1};
    OfdmConfig ofdm;
    ofdm.n_subcarriers = 1;
    const TestLink t = make_link(default_world(), 0, ofdm, sweep, 8);
    Observation obs;
    obs.y = CVec::Constant(1, cdouble(2.0, -1.0));
    obs.noise_var = VecX::Ones(1);
    const BeamspaceTensor h = assemble_tensor(obs, t.setup.frame);
    CHECK(h.data.size() == 1);
    CHECK(std::abs(h.data(0) - obs.y(0) / t.setup.frame.pilots(0, 0)) < 1e-15);
}

TEST_CASE("tensor is linear in the observation") {
    const TestLink t = default_link(3);
    Observation obs = noiseless(mm_mean(t.eta, t.setup), t.setup);
    const BeamspaceTensor a = assemble_tensor(obs, t.setup.frame);
    obs.y *= 3.0;
    const BeamspaceTensor b = assemble_tensor(obs, t.setup.frame);
    CHECK((b.data - 3.0 * a.data).norm() <= 1e-15 * b.data.norm());
}

TEST_CASE("zero pilots and empty tensors are rejected") {
    TestLink t = default_link(3);
    Observation obs = noiseless(mm_mean(t.eta, t.setup), t.setup);
    PilotFrame broken = t.setup.frame;
    broken.pilots(5, 5) = 0.0;
    CHECK_THROWS_AS(assemble_tensor(obs, broken), EstimationError);
    obs.y.setZero();
    const BeamspaceTensor empty = assemble_tensor(obs, t.setup.frame);
    CHECK_THROWS_AS(coarse_estimate(empty, t.setup.frame, t.setup.ofdm), EstimationError);
}

TEST_CASE("coarse estimate on noiseless data") {
    const ScenarioGeometry world = default_world();
    for (std::size_t l = 0; l < world.n_links(); ++l) {
        const TestLink t = make_link(world, l, OfdmConfig{}, SweepConfig{}, 40 + l);
        const BeamspaceTensor h = assemble_tensor(noiseless(mm_mean(t.eta, t.setup), t.setup), t.setup.frame);
        const CoarseEstimate c = coarse_estimate(h, t.setup.frame, t.setup.ofdm);
        CHECK(std::abs(rad2deg(c.eta.phi_b - t.eta.phi_b)) < 0.5);
        CHECK(std::abs(rad2deg(c.eta.theta_b - t.eta.theta_b)) < 0.5);
        CHECK(std::abs(rad2deg(c.eta.phi_u - t.eta.phi_u)) < 0.5);
        CHECK(std::abs(rad2deg(c.eta.theta_u - t.eta.theta_u)) < 0.5);
        CHECK(std::abs(c.eta.tau - t.eta.tau) < 0.1e-9);
    }
}

TEST_CASE("rank-one tensor with known frequencies") {
    TestLink t = default_link(12);
    const Codebooks& cb = t.setup.frame.codebooks;
    const double omega[5] = {cb.grid[0](1) + 0.031, cb.grid[1](2) - 0.047, cb.grid[2](1) + 0.012, cb.grid[3](0) + 0.09, 0.8};
    BeamspaceTensor h;
    h.dims = {4, 4, 3, 3, 100};
    h.data.resize(14400);
    std::array<CVec, 5> f;
    for (int n = 0; n < 4; ++n) f[n] = cb.matrices[n].adjoint() * axis_steering(cb.coordinates[n], omega[n], cb.wavelength);
    f[4].resize(100);
    for (int k = 0; k < 100; ++k) f[4](k) = std::polar(1.0, -k * omega[4]);
    for (int m1 = 0; m1 < 4; ++m1)
        for (int m2 = 0; m2 < 4; ++m2)
            for (int m3 = 0; m3 < 3; ++m3)
                for (int m4 = 0; m4 < 3; ++m4)
                    for (int k = 0; k < 100; ++k)
                        h.data(h.index(m1, m2, m3, m4, k)) = f[0](m1) * f[1](m2) * f[2](m3) * f[3](m4) * f[4](k);
    const CoarseEstimate c = coarse_estimate(h, t.setup.frame, t.setup.ofdm);
    for (int n = 0; n < 5; ++n) CHECK(std::abs(c.omega.omega[n] - omega[n]) < 1e-3);
}

TEST_CASE("elevation and azimuth inversion") {
    const AzEl a = angles_from_frequencies(0.0, kPi * std::sin(0.3));
    CHECK(a.elevation == doctest::Approx(0.3));
    const AzEl b = angles_from_frequencies(kPi * std::sin(-0.6) * std::cos(0.2), kPi * std::sin(0.2));
    CHECK(b.azimuth == doctest::Approx(-0.6));
    CHECK(b.elevation == doctest::Approx(0.2));
}

TEST_CASE("fine refinement on noiseless data") {
    const TestLink t = default_link(5);
    const Observation obs = noiseless(mm_mean(t.eta, t.setup), t.setup);
    SUBCASE("truth is a fixed point") {
        const FineResult r = fine_mmle(obs, t.eta, t.setup);
        CHECK((r.eta.geometric() - t.eta.geometric()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(r.eta.rho == doctest::Approx(t.eta.rho).epsilon(1e-9));
    }
    SUBCASE("recovers truth from a perturbed start") {
        ChannelParams init = t.eta;
        init.phi_b += deg2rad(0.5);
        init.theta_b += deg2rad(0.5);
        init.phi_u += deg2rad(0.5);
        init.theta_u += deg2rad(0.5);
        init.tau += 0.2e-9;
        const FineResult r = fine_mmle(obs, init, t.setup);
        CHECK(r.converged);
        for (int i = 0; i < 4; ++i) CHECK(std::abs(r.eta.geometric()(i) - t.eta.geometric()(i)) < 1e-6);
        CHECK(std::abs(r.eta.tau - t.eta.tau) < 1e-6 * t.eta.tau);
        CHECK(std::abs(r.eta.xi - t.eta.xi) < 1e-6);
        for (std::size_t i = 1; i < r.cost_history.size(); ++i) CHECK(r.cost_history[i] <= r.cost_history[i - 1]);
    }
}

TEST_CASE("gain elimination is stationary in the gain") {
    const TestLink t = default_link(6);
    std::mt19937_64 rng(3);
    const Observation obs = add_noise(mm_mean(t.eta, t.setup), t.setup, rng);
    VecX c = t.eta.geometric();
    c(0) += 0.01;
    const cdouble a = optimal_gain(c, obs, t.setup);
    const VecX scale = noise_variances(t.setup).cwiseSqrt().cwiseInverse();
    const CVec gamma = mm_mean(ChannelParams::from_geometric(c), t.setup);
    auto cost = [&](cdouble alpha) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < gamma.size(); ++i) s += std::norm((obs.y(i) - alpha * gamma(i)) * scale(i / 100));
        return s;
    };
    const double h = 1e-6 * std::abs(a);
    const double d_re = (cost(a + h) - cost(a - h)) / (2 * h);
    const double d_im = (cost(a + kJ * h) - cost(a - kJ * h)) / (2 * h);
    const double curvature = (cost(a + h) - 2 * cost(a) + cost(a - h)) / (h * h);
    CHECK(std::abs(d_re) < 1e-6 * curvature * std::abs(a));
    CHECK(std::abs(d_im) < 1e-6 * curvature * std::abs(a));
    CHECK(projected_cost(c, obs, t.setup) == doctest::Approx(cost(a)).epsilon(1e-10));
}

TEST_CASE("a common phase rotation only moves the gain phase") {
    const TestLink t = default_link(7, 10.0);
    std::mt19937_64 rng(9);
    Observation obs = add_noise(mm_mean(t.eta, t.setup), t.setup, rng);
    const ChannelEstimate a = estimate_channel(obs, t.setup);
    obs.y *= std::polar(1.0, 0.9);
    const ChannelEstimate b = estimate_channel(obs, t.setup);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(a.fine.eta.geometric()(i) - b.fine.eta.geometric()(i)) < 1e-9);
    CHECK(std::abs(a.fine.eta.tau - b.fine.eta.tau) < 1e-9 * a.fine.eta.tau);
    CHECK(std::abs(wrap_angle(a.fine.eta.xi - b.fine.eta.xi - 0.9)) < 1e-9);
}

TEST_CASE("estimator RMSE over noise trials matches the channel bounds") {
    const TestLink t = default_link(1, 0.0);
    const ChannelBounds crb = channel_bounds(inverse_symmetric(fim_channel(t.eta, t.setup)));
    const CVec mean = mm_mean(t.eta, t.setup);
    std::mt19937_64 rng(31);
    const int trials = 200;
    double aoa = 0.0, aod = 0.0, delay = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        const ChannelEstimate e = estimate_channel(add_noise(mean, t.setup, rng), t.setup);
        const ChannelParams& c = e.fine.eta;
        aoa += std::pow(wrap_angle(c.phi_b - t.eta.phi_b), 2) + std::pow(c.theta_b - t.eta.theta_b, 2);
        aod += std::pow(wrap_angle(c.phi_u - t.eta.phi_u), 2) + std::pow(c.theta_u - t.eta.theta_u, 2);
        delay += std::pow(c.tau - t.eta.tau, 2);
    }
    CHECK(std::sqrt(aoa / trials) == doctest::Approx(crb.aoa).epsilon(0.2));
    CHECK(std::sqrt(aod / trials) == doctest::Approx(crb.aod).epsilon(0.2));
    CHECK(std::sqrt(delay / trials) == doctest::Approx(crb.delay).epsilon(0.2));
}
