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
#include "hwiloc/results.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace hwiloc {

namespace {

/// Quotes a CSV field when it contains a separator, quote or newline.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    return fields;
}

double parse_number(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::stod(s);
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << kCsvHeader << '\n';
    for (const ResultRow& r : rows) {
        out << csv_field(r.scenario_id) << ',' << format_number(r.power_dbm) << ',' << format_number(r.c_hwi) << ','
            << csv_field(r.mask) << ',' << r.realization << ',' << csv_field(r.metric) << ','
            << format_number(r.value) << ',' << csv_field(r.unit) << '\n';
    }
}

void write_csv(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_csv(out, rows);
    if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

std::vector<ResultRow> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::string line;
    std::getline(in, line);
    if (line != kCsvHeader) throw std::runtime_error(path + ": unexpected header");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 8) throw std::runtime_error(path + ": expected 8 fields per row");
        rows.push_back({f[0], parse_number(f[1]), parse_number(f[2]), f[3], std::stoi(f[4]), f[5], parse_number(f[6]), f[7]});
    }
    return rows;
}

nlohmann::json sidecar(const Scenario& s, const std::string& command, std::size_t row_count) {
    nlohmann::json doc;
    doc["command"] = command;
    doc["scenario"] = scenario_to_json(s);
    doc["master_seed"] = s.master_seed();
    doc["stream_derivation"] =
        "mt19937_64 seeded with splitmix64 mixing of (master_seed, realization or trial or link index, FNV-1a of the "
        "stage tag)";
    doc["stage_tags"] = {"gain-phase", "pilots", "hwi-ue-static", "hwi-ue-dynamic-BS<l>", "hwi-bs-static-BS<l>",
                         "hwi-bs-dynamic-BS<l>", "noise", "comm"};
    doc["rows"] = row_count;
    doc["csv_columns"] = kCsvHeader;
    doc["versions"] = {{"hwiloc", "1.0.0"},
                       {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                     std::to_string(EIGEN_MINOR_VERSION)},
                       {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                             std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                             std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    return doc;
}

void write_sidecar(const std::string& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << doc.dump(2) << '\n';
}

}  // namespace hwiloc
