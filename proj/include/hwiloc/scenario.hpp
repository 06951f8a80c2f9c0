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

#include "hwiloc/comm_eval.hpp"
#include "hwiloc/forward_model.hpp"
#include "hwiloc/geometry.hpp"
#include "hwiloc/impairments.hpp"
#include "hwiloc/state_estimation.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hwiloc {

struct PoseSpec {
    Vec3 position = Vec3::Zero();
    Vec3 orientation_deg = Vec3::Zero();  ///< yaw, pitch, roll
    std::array<int, 2> array{8, 8};      ///< n_z, n_y
};

struct ExperimentPlan {
    std::vector<double> power_dbm;  ///< default -15..35 step 5
    std::vector<double> c_hwi{1.0};
    std::vector<ImpairmentMask> masks{ImpairmentMask::all()};
    int realizations = 100;  ///< impairment draws per cell
    int trials = 200;        ///< noise trials per estimator cell
    double percentile = 75.0;
    CommSetup comm;
};

struct Scenario {
    std::string id = "default";
    std::vector<PoseSpec> bs;
    PoseSpec ue;
    double clock_offset_s = 0.0;
    double element_spacing = 0.5;  ///< wavelengths
    OfdmConfig ofdm;
    HwiConfig hwi = HwiConfig::defaults();
    SweepConfig sweep;
    ExperimentPlan plan;
    SyncMode sync_mode = SyncMode::Synchronized;
    std::optional<std::uint64_t> seed;

    ScenarioGeometry geometry() const;
    /// Master seed; throws ConfigError when absent.
    std::uint64_t master_seed() const;
    void validate() const;
};

/// Default two-BS scenario at 60 GHz.
Scenario default_scenario();

/// Defaults overridden by the fields present in `doc`. Unknown keys and
/// invalid values raise ConfigError naming the offending field.
Scenario scenario_from_json(const nlohmann::json& doc);
Scenario load_scenario(const std::string& path);
nlohmann::json scenario_to_json(const Scenario& s);

std::string sync_mode_name(SyncMode mode);
SyncMode parse_sync_mode(const std::string& text);

}  // namespace hwiloc
