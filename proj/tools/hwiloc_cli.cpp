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
#include "hwiloc/experiments.hpp"
#include "hwiloc/results.hpp"
#include "hwiloc/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Options {
    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    int parallel = 1;
    std::vector<std::string> masks;
    std::string sync_mode;
};

hwiloc::Scenario resolve(const Options& o) {
    hwiloc::Scenario s = o.scenario_path.empty() ? hwiloc::default_scenario() : hwiloc::load_scenario(o.scenario_path);
    if (o.seed) s.seed = o.seed;
    if (!o.masks.empty()) {
        s.plan.masks.clear();
        for (const std::string& m : o.masks) s.plan.masks.push_back(hwiloc::ImpairmentMask::parse(m));
    }
    if (!o.sync_mode.empty()) s.sync_mode = hwiloc::parse_sync_mode(o.sync_mode);
    if (o.parallel < 1) throw hwiloc::ConfigError("--parallel: must be at least 1");
    s.validate();
    s.master_seed();
    return s;
}

void write_outputs(const hwiloc::Scenario& s, const Options& o, const std::string& command,
                   const std::vector<hwiloc::ResultRow>& rows) {
    const std::filesystem::path dir(o.out_dir);
    std::filesystem::create_directories(dir);
    const std::filesystem::path csv = dir / (command + ".csv");
    hwiloc::write_csv(csv.string(), rows);
    hwiloc::write_sidecar((dir / (command + ".json")).string(), hwiloc::sidecar(s, command, rows.size()));
    std::cerr << "wrote " << rows.size() << " rows to " << csv.string() << '\n';
}

int run(const std::string& command, const Options& o) {
    const hwiloc::Scenario s = resolve(o);
    if (command == "validate-config") {
        std::cout << hwiloc::scenario_to_json(s).dump(2) << '\n';
        return 0;
    }
    hwiloc::RunOptions run_options;
    run_options.parallel = o.parallel;
    std::vector<hwiloc::ResultRow> rows;
    auto append = [&rows](const std::vector<hwiloc::ResultRow>& more) { rows.insert(rows.end(), more.begin(), more.end()); };
    if (command == "bounds" || command == "sweep") append(hwiloc::run_bounds_sweep(s, run_options));
    if (command == "estimate" || command == "sweep") append(hwiloc::run_estimator_sweep(s, run_options));
    if (command == "ser" || command == "sweep") append(hwiloc::run_ser_sweep(s, run_options));
    write_outputs(s, o, command, rows);
    const auto failed = std::count_if(rows.begin(), rows.end(), [](const hwiloc::ResultRow& r) { return r.metric == "error"; });
    if (failed > 0) {
        std::cerr << "numerical failure in " << failed << " cells (rows marked 'error')\n";
        return kExitNumerical;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Localization and communication bounds under hardware impairments"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    std::uint64_t seed = 0;
    app.add_option("--scenario", o.scenario_path, "Scenario file (JSON); defaults are used when omitted");
    auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the scenario)");
    app.add_option("--out", o.out_dir, "Output directory")->capture_default_str();
    app.add_option("--parallel", o.parallel, "Worker threads")->capture_default_str();
    app.add_option("--mask", o.masks, "Impairment mask, e.g. all, none, pn+iqi (repeatable)");
    app.add_option("--sync-mode", o.sync_mode, "bs-sync or bs-async")->check(CLI::IsMember({"bs-sync", "bs-async"}));

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"bounds", "CRB, LB and ALB sweep"},
        {"estimate", "Two-stage estimator sweep with RMSE"},
        {"ser", "Monte-Carlo and analytic SER sweep"},
        {"sweep", "bounds, estimate and ser into one file"},
        {"validate-config", "Validate the scenario and print it with defaults filled in"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    if (*seed_opt) o.seed = seed;
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        return run(command, o);
    } catch (const hwiloc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const hwiloc::EstimationError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const hwiloc::SingularGeometryError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const hwiloc::GeometryError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
