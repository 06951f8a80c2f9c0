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
#include "hwiloc/geometry.hpp"

#include <random>

namespace hwiloc::testing {

/// Default two-BS world: BS1 at (0,0,3), BS2 at (0,10,3), UE at (8,4,0).
inline ScenarioGeometry default_world() {
    ScenarioGeometry w;
    const double half = kSpeedOfLight / w.carrier_hz / 2.0;
    Pose b1, b2;
    b1.position = Vec3(0.0, 0.0, 3.0);
    b1.rotation = rotation_from_euler(Vec3(0.0, 15.0, 0.0));
    b2.position = Vec3(0.0, 10.0, 3.0);
    b2.rotation = rotation_from_euler(Vec3(-30.0, 15.0, 0.0));
    w.bs_poses = {b1, b2};
    w.bs_arrays = {ArrayLayout::upa(8, 8, half), ArrayLayout::upa(8, 8, half)};
    w.ue_array = ArrayLayout::upa(4, 4, half);
    w.ue.position = Vec3(8.0, 4.0, 0.0);
    w.ue.rotation = rotation_from_euler(Vec3(180.0, 0.0, 0.0));
    return w;
}

struct TestLink {
    LinkSetup setup;
    ChannelParams eta;
};

inline TestLink make_link(const ScenarioGeometry& world, std::size_t l, const OfdmConfig& ofdm,
                          const SweepConfig& sweep, std::uint64_t seed, double xi = 0.7) {
    TestLink t;
    t.eta = channel_params_from_state(world.ue, world.bs_poses[l], world.wavelength(), xi);
    t.setup.bs_array = world.bs_arrays[l];
    t.setup.ue_array = world.ue_array;
    t.setup.ofdm = ofdm;
    const Codebooks cb = build_codebooks(prior_frequencies(t.eta, sweep.prior_offset), sweep, t.setup.bs_array,
                                         t.setup.ue_array, world.wavelength());
    std::mt19937_64 rng(seed);
    t.setup.frame = make_pilot_frame(cb, sweep, ofdm, t.setup.ue_array.size(), rng);
    return t;
}

inline TestLink default_link(std::uint64_t seed = 1, double power_dbm = 0.0) {
    OfdmConfig ofdm;
    ofdm.tx_power_dbm = power_dbm;
    return make_link(default_world(), 0, ofdm, SweepConfig{}, seed);
}

inline double relative_error(const CVec& a, const CVec& b) { return (a - b).norm() / b.norm(); }

}  // namespace hwiloc::testing
