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

#include "hwiloc/experiments.hpp"

#include <json.hpp>

#include <ostream>
#include <string>
#include <vector>

namespace hwiloc {

inline constexpr const char* kCsvHeader = "scenario_id,power_dbm,c_hwi,mask,realization,metric,value,unit";

/// "%.17g" formatting; nan and inf spelled out.
std::string format_number(double v);

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_csv(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_csv(const std::string& path);

/// Resolved scenario, command, seed derivation and library versions.
nlohmann::json sidecar(const Scenario& s, const std::string& command, std::size_t row_count);
void write_sidecar(const std::string& path, const nlohmann::json& doc);

}  // namespace hwiloc
