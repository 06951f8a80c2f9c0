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

#include "hwiloc/bounds.hpp"
#include "hwiloc/scenario.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace hwiloc {

struct ResultRow {
    std::string scenario_id;
    double power_dbm = 0.0;
    double c_hwi = 0.0;
    std::string mask;
    int realization = 0;  ///< -1 marks aggregates over realizations or trials
    std::string metric;
    double value = 0.0;
    std::string unit;
};

/// Seed of the stream used by one stage of one realization.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t realization, const std::string& stage);
std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t realization, const std::string& stage);

/// Linear-interpolation percentile of `values` (q in [0, 100]); NaN when empty.
double percentile(std::vector<double> values, double q);

/// Per-link setups, true channels and gain phases of a scenario at one power.
/// Pilot phases and gain phases depend on the master seed only.
struct ScenarioLinks {
    ScenarioGeometry world;
    std::vector<LinkSetup> links;
    std::vector<ChannelParams> truths;
};
ScenarioLinks build_links(const Scenario& s, double power_dbm);

/// Impairment realization `index` for every link; the same draws are used
/// for every power, so only the levels and masks change between cells.
std::vector<HwiRealization> draw_impairments(const Scenario& s, const ScenarioLinks& links, const HwiConfig& cfg,
                                             int index);

struct RunOptions {
    int parallel = 1;
};

/// CRB, LB, state CRB and ALB per (mask, c_HWI, power, realization), then
/// percentile aggregates.
std::vector<ResultRow> run_bounds_sweep(const Scenario& s, const RunOptions& options = {});

/// Two-stage estimation on noisy true-model observations; per-trial errors,
/// RMSE aggregates and the matching bounds of impairment realization 0.
std::vector<ResultRow> run_estimator_sweep(const Scenario& s, const RunOptions& options = {});

/// Monte-Carlo and analytic SER of the first link.
std::vector<ResultRow> run_ser_sweep(const Scenario& s, const RunOptions& options = {});

}  // namespace hwiloc
