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
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace hwiloc;
using namespace hwiloc::testing;

TEST_CASE("single beam pair schedule") {
    SweepConfig sweep;
    sweep.beams = {1, 1, 1, 1};
    const TestLink t = make_link(default_world(), 0, OfdmConfig{}, sweep, 3);
    CHECK(t.setup.frame.n_transmissions() == 1);
    CHECK(t.setup.frame.schedule.size() == 1);
}

TEST_CASE("default sweep has 144 transmissions") {
    const TestLink t = default_link();
    CHECK(t.setup.frame.n_transmissions() == 144);
    CHECK(t.setup.frame.precoders.cols() == 144);
    CHECK(t.setup.frame.combiners.cols() == 144);
}

TEST_CASE("BS-first order cycles the BS beam fastest") {
    const auto schedule = sweep_schedule({4, 4, 3, 3}, SweepOrder::BsFirst);
    REQUIRE(schedule.size() == 144);
    for (std::size_t g = 0; g + 1 < schedule.size(); ++g) {
        const bool same_ue = schedule[g][2] == schedule[g + 1][2] && schedule[g][3] == schedule[g + 1][3];
        CHECK(same_ue == (g % 16 != 15));
    }
    const auto ue_first = sweep_schedule({4, 4, 3, 3}, SweepOrder::UeFirst);
    CHECK(ue_first[0][0] == ue_first[8][0]);
    CHECK(ue_first[0][3] != ue_first[1][3]);
}

TEST_CASE("codebook grids and unit-modulus beams") {
    const TestLink t = default_link();
    const Codebooks& cb = t.setup.frame.codebooks;
    const auto prior = prior_frequencies(t.eta, 0.05);
    const SpatialFrequencies w = spatial_frequencies(t.eta, 240e3);
    CHECK(prior[0] == doctest::Approx(w.omega[0] + 0.05));
    CHECK(cb.grid[0](0) == doctest::Approx(prior[0] - 1.5 * 0.15));
    CHECK(cb.grid[0](3) == doctest::Approx(prior[0] + 1.5 * 0.15));
    CHECK(cb.grid[2](1) == doctest::Approx(prior[2]));
    CHECK((t.setup.frame.precoders.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((t.setup.frame.combiners.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("pilot power") {
    const TestLink t = default_link(5, 20.0);
    const double target = 0.1 / 16.0;
    CHECK(t.setup.frame.pilots.cwiseAbs2().mean() == doctest::Approx(target).epsilon(1e-12));
    CHECK((t.setup.frame.pilots.cwiseAbs2().array() - target).abs().maxCoeff() < 1e-15);

    OfdmConfig spread;
    spread.tx_power_dbm = 20.0;
    spread.waveform = Waveform::DftSpread;
    const TestLink s = make_link(default_world(), 0, spread, SweepConfig{}, 5);
    CHECK(s.setup.frame.pilots.cwiseAbs2().mean() == doctest::Approx(target).epsilon(1e-12));
}

TEST_CASE("mismatched mean: degenerate cases") {
    TestLink t = default_link();
    SUBCASE("zero gain gives zero mean") {
        ChannelParams eta = t.eta;
        eta.rho = 0.0;
        CHECK(mm_mean(eta, t.setup).norm() == 0.0);
    }
    SUBCASE("zero delay leaves a flat magnitude per transmission") {
        ChannelParams eta = t.eta;
        eta.tau = 0.0;
        const CVec mu = mm_mean(eta, t.setup);
        const int k = t.setup.ofdm.n_subcarriers;
        for (int g = 0; g < t.setup.frame.n_transmissions(); ++g) {
            const VecX mag = mu.segment(g * k, k).cwiseAbs();
            CHECK(mag.maxCoeff() - mag.minCoeff() <= 1e-12 * mag.maxCoeff());
        }
    }
    SUBCASE("gain homogeneity") {
        ChannelParams eta = t.eta;
        const CVec mu = mm_mean(eta, t.setup);
        eta.rho *= 2.0;
        CHECK(relative_error(mm_mean(eta, t.setup), 2.0 * mu) < 1e-14);
    }
}

TEST_CASE("single antenna link reduces to a scalar channel") {
    LinkSetup link;
    const double half = kSpeedOfLight / 60e9 / 2.0;
    link.bs_array = ArrayLayout::upa(1, 1, half);
    link.ue_array = ArrayLayout::upa(1, 1, half);
    link.ofdm.n_subcarriers = 12;
    SweepConfig sweep;
    sweep.beams = {1, 1, 1, 1};
    ChannelParams eta;
    eta.phi_b = 0.3;
    eta.theta_b = 0.1;
    eta.phi_u = -0.4;
    eta.theta_u = 0.2;
    eta.tau = 37e-9;
    eta.rho = 2e-5;
    eta.xi = 1.1;
    const Codebooks cb = build_codebooks(prior_frequencies(eta, 0.05), sweep, link.bs_array, link.ue_array, 2 * half);
    std::mt19937_64 rng(2);
    link.frame = make_pilot_frame(cb, sweep, link.ofdm, 1, rng);
    CHECK(std::abs(link.frame.combiners(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(link.frame.precoders(0, 0) - 1.0) < 1e-15);
    const CVec mu = mm_mean(eta, link);
    for (int k = 0; k < 12; ++k) {
        const cdouble expected = eta.gain() * std::polar(1.0, -2.0 * kPi * k * 240e3 * eta.tau) * link.frame.pilots(0, k);
        CHECK(std::abs(mu(k) - expected) < 1e-12 * std::abs(expected));
    }
}

TEST_CASE("mismatched Jacobian matches central differences") {
    const TestLink t = default_link(9, 10.0);
    const CMat jac = mm_jacobian(t.eta, t.setup);
    const VecX x0 = t.eta.to_vector();
    const double steps[7] = {1e-6, 1e-6, 1e-6, 1e-6, 1e-15, 1e-3 * t.eta.rho, 1e-6};
    for (int i = 0; i < ChannelParams::kDim; ++i) {
        VecX xp = x0, xm = x0;
        xp(i) += steps[i];
        xm(i) -= steps[i];
        const CVec fd = (mm_mean(ChannelParams::from_vector(xp), t.setup) - mm_mean(ChannelParams::from_vector(xm), t.setup)) /
                        (2.0 * steps[i]);
        CHECK(relative_error(jac.col(i), fd) < 1e-6);
    }
}

TEST_CASE("true model equals mismatched model without impairments") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        TestLink t = default_link(100 + trial, 10.0 * u(rng));
        ChannelParams eta = t.eta;
        eta.phi_b += 0.2 * u(rng);
        eta.theta_b += 0.2 * u(rng);
        eta.phi_u += 0.2 * u(rng);
        eta.theta_u += 0.2 * u(rng);
        eta.tau *= 1.0 + 0.1 * u(rng);
        eta.xi = kPi * u(rng);
        const HwiRealization ideal = HwiRealization::ideal(16, 64, 144, 100);
        CHECK(relative_error(tm_mean(eta, ideal, t.setup), mm_mean(eta, t.setup)) < 1e-10);
    }
}

TEST_CASE("receiver IQ imbalance alone") {
    const TestLink t = default_link(4);
    HwiRealization hwi = HwiRealization::ideal(16, 64, 144, 100);
    hwi.rx.iqi = IqPair::from_imbalance(1.03, -0.05);
    const CVec y = mm_mean(t.eta, t.setup);
    const CVec out = tm_mean(t.eta, hwi, t.setup);
    const Dft dft(100);
    for (int g = 0; g < 144; g += 13) {
        const CVec yg = y.segment(g * 100, 100);
        const CVec time = dft.inverse(yg);
        const CVec direct = dft.forward((hwi.rx.iqi.alpha * time + hwi.rx.iqi.beta * time.conjugate()).eval());
        CHECK(relative_error(out.segment(g * 100, 100), direct) < 1e-12);
        CVec mirrored(100);
        for (int k = 0; k < 100; ++k) mirrored(k) = std::conj(yg((100 - k) % 100));
        CHECK(relative_error(out.segment(g * 100, 100), hwi.rx.iqi.alpha * yg + hwi.rx.iqi.beta * mirrored) < 1e-12);
    }
}

TEST_CASE("DFT-spread pilots preserve the observation norm") {
    OfdmConfig plain, spread;
    spread.waveform = Waveform::DftSpread;
    const TestLink a = make_link(default_world(), 0, plain, SweepConfig{}, 21);
    const TestLink b = make_link(default_world(), 0, spread, SweepConfig{}, 21);
    const HwiRealization ideal = HwiRealization::ideal(16, 64, 144, 100);
    const CVec ya = tm_mean(a.eta, ideal, a.setup);
    const CVec yb = tm_mean(b.eta, ideal, b.setup);
    for (int g = 0; g < 144; ++g) {
        CHECK(std::abs(ya.segment(g * 100, 100).norm() - yb.segment(g * 100, 100).norm()) <
              1e-10 * ya.segment(g * 100, 100).norm());
    }
    CHECK(std::abs(a.setup.frame.pilots.norm() - b.setup.frame.pilots.norm()) < 1e-10 * a.setup.frame.pilots.norm());
}

TEST_CASE("per-antenna PA path agrees with the shared-stream path") {
    TestLink t = default_link(6, 30.0);
    HwiRealization hwi = HwiRealization::ideal(16, 64, 144, 100);
    hwi.pa = HwiConfig::defaults().pa;
    const CVec shared = tm_mean(t.eta, hwi, t.setup);
    // an infinitesimal modulus change forces the per-antenna branch without altering the signal
    t.setup.frame.precoders *= 1.0 + 1e-11;
    const CVec per_antenna = tm_mean(t.eta, hwi, t.setup);
    CHECK(relative_error(per_antenna, shared) < 1e-9);
}

TEST_CASE("noise variance and noise draws") {
    OfdmConfig ofdm;
    const double expected_dbm = -173.855 + 10.0 * std::log10(100 * 240e3) + 10.0;
    CHECK(10.0 * std::log10(ofdm.noise_variance() * 1e3) == doctest::Approx(expected_dbm).epsilon(1e-12));
    CHECK(expected_dbm == doctest::Approx(-90.053).epsilon(1e-4));

    TestLink t = default_link();
    const CVec mu = mm_mean(t.eta, t.setup);
    SUBCASE("zero noise PSD") {
        t.setup.ofdm.noise_psd_dbm_hz = -std::numeric_limits<double>::infinity();
        std::mt19937_64 rng(1);
        const Observation obs = add_noise(mu, t.setup, rng);
        CHECK((obs.y - mu).norm() == 0.0);
    }
    SUBCASE("sample variance") {
        const VecX var = noise_variances(t.setup);
        CHECK(var(0) == doctest::Approx(64.0 * ofdm.noise_variance()));
        std::mt19937_64 rng(2);
        double acc = 0.0;
        long count = 0;
        const CVec zero = CVec::Zero(mu.size());
        for (int rep = 0; rep < 7; ++rep) {
            const Observation obs = add_noise(zero, t.setup, rng);
            acc += obs.y.squaredNorm();
            count += obs.y.size();
        }
        REQUIRE(count >= 100000);
        CHECK(acc / count == doctest::Approx(var(0)).epsilon(0.02));
    }
}
