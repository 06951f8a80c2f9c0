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
#include "hwiloc/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace hwiloc {

using nlohmann::json;

namespace {

/// Reads fields of one JSON object and rejects keys nobody asked about.
class Fields {
public:
    Fields(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return node_.contains(key);
    }

    std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
        return v.get<double>();
    }

    int integer(const std::string& key, int fallback) {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
        return v.get<int>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_boolean()) throw ConfigError(path(key) + ": expected true or false");
        return v.get<bool>();
    }

    std::string text(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_string()) throw ConfigError(path(key) + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_array()) throw ConfigError(path(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (const json& x : v) {
            if (!x.is_number()) throw ConfigError(path(key) + ": expected an array of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    std::vector<int> integers(const std::string& key, const std::vector<int>& fallback, std::size_t size) {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_array() || v.size() != size)
            throw ConfigError(path(key) + ": expected " + std::to_string(size) + " integers");
        std::vector<int> out;
        for (const json& x : v) {
            if (!x.is_number_integer()) throw ConfigError(path(key) + ": expected integers");
            out.push_back(x.get<int>());
        }
        return out;
    }

    Vec3 vec3(const std::string& key, const Vec3& fallback) {
        const std::vector<double> v = numbers(key, {fallback(0), fallback(1), fallback(2)});
        if (v.size() != 3) throw ConfigError(path(key) + ": expected 3 numbers");
        return Vec3(v[0], v[1], v[2]);
    }

    const json& child(const std::string& key) {
        seen_.insert(key);
        return node_.at(key);
    }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(path(it.key()) + ": unknown field");
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

PoseSpec read_pose(const json& node, const std::string& path, const PoseSpec& fallback) {
    Fields f(node, path);
    PoseSpec p;
    p.position = f.vec3("position", fallback.position);
    p.orientation_deg = f.vec3("orientation_deg", fallback.orientation_deg);
    const std::vector<int> a = f.integers("array", {fallback.array[0], fallback.array[1]}, 2);
    p.array = {a[0], a[1]};
    f.finish();
    return p;
}

json pose_json(const PoseSpec& p) {
    return {{"position", {p.position(0), p.position(1), p.position(2)}},
            {"orientation_deg", {p.orientation_deg(0), p.orientation_deg(1), p.orientation_deg(2)}},
            {"array", {p.array[0], p.array[1]}}};
}

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

void require_finite(double v, const std::string& field) { require(std::isfinite(v), field + ": must be finite"); }

}  // namespace

std::string sync_mode_name(SyncMode mode) { return mode == SyncMode::Synchronized ? "bs-sync" : "bs-async"; }

SyncMode parse_sync_mode(const std::string& text) {
    if (text == "bs-sync") return SyncMode::Synchronized;
    if (text == "bs-async") return SyncMode::Asynchronous;
    throw ConfigError("sync_mode: expected bs-sync or bs-async, got '" + text + "'");
}

Scenario default_scenario() {
    Scenario s;
    PoseSpec b1, b2;
    b1.position = Vec3(0.0, 0.0, 3.0);
    b1.orientation_deg = Vec3(0.0, 15.0, 0.0);
    b2.position = Vec3(0.0, 10.0, 3.0);
    b2.orientation_deg = Vec3(-30.0, 15.0, 0.0);
    s.bs = {b1, b2};
    s.ue.position = Vec3(8.0, 4.0, 0.0);
    s.ue.orientation_deg = Vec3(180.0, 0.0, 0.0);
    s.ue.array = {4, 4};
    for (double p = -15.0; p <= 35.0; p += 5.0) s.plan.power_dbm.push_back(p);
    return s;
}

ScenarioGeometry Scenario::geometry() const {
    ScenarioGeometry w;
    w.carrier_hz = ofdm.carrier_hz;
    const double spacing = element_spacing * w.wavelength();
    for (const PoseSpec& b : bs) {
        Pose p;
        p.position = b.position;
        p.rotation = rotation_from_euler(b.orientation_deg);
        w.bs_poses.push_back(p);
        w.bs_arrays.push_back(ArrayLayout::upa(b.array[0], b.array[1], spacing));
    }
    w.ue_array = ArrayLayout::upa(ue.array[0], ue.array[1], spacing);
    w.ue.position = ue.position;
    w.ue.rotation = rotation_from_euler(ue.orientation_deg);
    w.ue.clock_offset = clock_offset_s;
    return w;
}

std::uint64_t Scenario::master_seed() const {
    if (!seed) throw ConfigError("seed: a master seed is required (scenario field or --seed)");
    return *seed;
}

void Scenario::validate() const {
    require(!id.empty(), "id: must not be empty");
    require(bs.size() >= 1, "geometry.bs: at least one BS is required");
    auto check_pose = [](const PoseSpec& p, const std::string& path) {
        for (int i = 0; i < 3; ++i) {
            require_finite(p.position(i), path + ".position");
            require_finite(p.orientation_deg(i), path + ".orientation_deg");
        }
        require(p.array[0] >= 1 && p.array[1] >= 1, path + ".array: element counts must be positive");
    };
    for (std::size_t l = 0; l < bs.size(); ++l) check_pose(bs[l], "geometry.bs[" + std::to_string(l) + "]");
    check_pose(ue, "geometry.ue");
    for (std::size_t l = 0; l < bs.size(); ++l)
        require((bs[l].position - ue.position).norm() > 0.0,
                "geometry.bs[" + std::to_string(l) + "].position: coincides with the UE");
    require_finite(clock_offset_s, "geometry.ue.clock_offset_s");
    require(element_spacing > 0.0 && std::isfinite(element_spacing), "geometry.element_spacing: must be positive");
    try {
        ofdm.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("ofdm: ") + e.what());
    }
    hwi.validate();
    for (int i = 0; i < 4; ++i) require(sweep.beams[i] >= 1, "frame.beams: beam counts must be positive");
    require(sweep.grid_step > 0.0 && std::isfinite(sweep.grid_step), "frame.grid_step: must be positive");
    require_finite(sweep.prior_offset, "frame.prior_offset");
    require(!plan.power_dbm.empty(), "plan.power_dbm: must not be empty");
    for (double p : plan.power_dbm) require_finite(p, "plan.power_dbm");
    require(!plan.c_hwi.empty(), "plan.c_hwi: must not be empty");
    for (double c : plan.c_hwi) require(c >= 0.0 && std::isfinite(c), "plan.c_hwi: levels must be non-negative");
    require(!plan.masks.empty(), "plan.masks: must not be empty");
    require(plan.realizations >= 1, "plan.realizations: must be positive");
    require(plan.trials >= 1, "plan.trials: must be positive");
    require(plan.percentile >= 0.0 && plan.percentile <= 100.0, "plan.percentile: must lie in [0, 100]");
    plan.comm.validate();
}

Scenario scenario_from_json(const json& doc) {
    Scenario s = default_scenario();
    if (doc.is_null()) return s;
    Fields top(doc, "");
    s.id = top.text("id", s.id);
    if (top.has("seed")) {
        const json& v = top.child("seed");
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            throw ConfigError("seed: expected a non-negative integer");
        s.seed = v.get<std::uint64_t>();
    }
    s.sync_mode = parse_sync_mode(top.text("sync_mode", sync_mode_name(s.sync_mode)));

    if (top.has("geometry")) {
        Fields g(top.child("geometry"), "geometry");
        if (g.has("bs")) {
            const json& list = g.child("bs");
            if (!list.is_array()) throw ConfigError("geometry.bs: expected an array");
            std::vector<PoseSpec> bs;
            for (std::size_t l = 0; l < list.size(); ++l) {
                const PoseSpec fallback = l < s.bs.size() ? s.bs[l] : PoseSpec{};
                bs.push_back(read_pose(list[l], "geometry.bs[" + std::to_string(l) + "]", fallback));
            }
            s.bs = bs;
        }
        if (g.has("ue")) {
            Fields u(g.child("ue"), "geometry.ue");
            s.ue.position = u.vec3("position", s.ue.position);
            s.ue.orientation_deg = u.vec3("orientation_deg", s.ue.orientation_deg);
            const std::vector<int> a = u.integers("array", {s.ue.array[0], s.ue.array[1]}, 2);
            s.ue.array = {a[0], a[1]};
            s.clock_offset_s = u.number("clock_offset_s", s.clock_offset_s);
            u.finish();
        }
        s.element_spacing = g.number("element_spacing", s.element_spacing);
        g.finish();
    }

    if (top.has("ofdm")) {
        Fields o(top.child("ofdm"), "ofdm");
        OfdmConfig& c = s.ofdm;
        c.carrier_hz = o.number("carrier_hz", c.carrier_hz);
        c.subcarrier_spacing = o.number("subcarrier_spacing_hz", c.subcarrier_spacing);
        c.n_subcarriers = o.integer("n_subcarriers", c.n_subcarriers);
        c.cp_len = o.integer("cp_len", c.cp_len);
        c.noise_psd_dbm_hz = o.number("noise_psd_dbm_hz", c.noise_psd_dbm_hz);
        c.noise_figure_db = o.number("noise_figure_db", c.noise_figure_db);
        c.noise_bandwidth_hz = o.number("noise_bandwidth_hz", c.noise_bandwidth_hz);
        const std::string w = o.text("waveform", c.waveform == Waveform::Ofdm ? "ofdm" : "dft-s-ofdm");
        if (w == "ofdm")
            c.waveform = Waveform::Ofdm;
        else if (w == "dft-s-ofdm")
            c.waveform = Waveform::DftSpread;
        else
            throw ConfigError("ofdm.waveform: expected ofdm or dft-s-ofdm");
        o.finish();
    }

    if (top.has("hwi")) {
        Fields h(top.child("hwi"), "hwi");
        HwiConfig& c = s.hwi;
        c.sigma_pn = deg2rad(h.number("sigma_pn_deg", rad2deg(c.sigma_pn)));
        c.sigma_cfo = h.number("sigma_cfo", c.sigma_cfo);
        c.sigma_mc = h.number("sigma_mc", c.sigma_mc);
        c.sigma_age_amp = h.number("sigma_age_amp", c.sigma_age_amp);
        c.sigma_age_phase = h.number("sigma_age_phase", c.sigma_age_phase);
        c.sigma_ade = h.number("sigma_ade", c.sigma_ade);
        c.sigma_iqi_amp = h.number("sigma_iqi_amp", c.sigma_iqi_amp);
        c.sigma_iqi_phase = h.number("sigma_iqi_phase", c.sigma_iqi_phase);
        c.pa.clip_v = h.number("pa_clip_v", c.pa.clip_v);
        c.pa.load_ohm = h.number("load_ohm", c.pa.load_ohm);
        c.tx_pn_cfo_enabled = h.boolean("tx_pn_cfo", c.tx_pn_cfo_enabled);
        if (h.has("pa_coeffs")) {
            const json& list = h.child("pa_coeffs");
            if (!list.is_array()) throw ConfigError("hwi.pa_coeffs: expected an array of [re, im] pairs");
            c.pa.coeffs.clear();
            for (const json& p : list) {
                if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
                    throw ConfigError("hwi.pa_coeffs: expected an array of [re, im] pairs");
                c.pa.coeffs.emplace_back(p[0].get<double>(), p[1].get<double>());
            }
        }
        h.finish();
    }

    if (top.has("frame")) {
        Fields fr(top.child("frame"), "frame");
        const std::vector<int> b = fr.integers("beams", {s.sweep.beams.begin(), s.sweep.beams.end()}, 4);
        for (int i = 0; i < 4; ++i) s.sweep.beams[i] = b[i];
        s.sweep.grid_step = fr.number("grid_step", s.sweep.grid_step);
        s.sweep.prior_offset = fr.number("prior_offset", s.sweep.prior_offset);
        const std::string order = fr.text("sweep_order", s.sweep.order == SweepOrder::BsFirst ? "bs-first" : "ue-first");
        if (order == "bs-first")
            s.sweep.order = SweepOrder::BsFirst;
        else if (order == "ue-first")
            s.sweep.order = SweepOrder::UeFirst;
        else
            throw ConfigError("frame.sweep_order: expected bs-first or ue-first");
        fr.finish();
    }

    if (top.has("plan")) {
        Fields p(top.child("plan"), "plan");
        ExperimentPlan& plan = s.plan;
        plan.power_dbm = p.numbers("power_dbm", plan.power_dbm);
        plan.c_hwi = p.numbers("c_hwi", plan.c_hwi);
        plan.realizations = p.integer("realizations", plan.realizations);
        plan.trials = p.integer("trials", plan.trials);
        plan.percentile = p.number("percentile", plan.percentile);
        if (p.has("masks")) {
            const json& list = p.child("masks");
            if (!list.is_array()) throw ConfigError("plan.masks: expected an array of mask strings");
            plan.masks.clear();
            for (const json& m : list) {
                if (!m.is_string()) throw ConfigError("plan.masks: expected an array of mask strings");
                try {
                    plan.masks.push_back(ImpairmentMask::parse(m.get<std::string>()));
                } catch (const std::exception& e) {
                    throw ConfigError(std::string("plan.masks: ") + e.what());
                }
            }
        }
        if (p.has("comm")) {
            Fields c(p.child("comm"), "plan.comm");
            plan.comm.modulation_order = c.integer("modulation_order", plan.comm.modulation_order);
            plan.comm.ofdm_symbols = c.integer("ofdm_symbols", plan.comm.ofdm_symbols);
            plan.comm.realizations = c.integer("realizations", plan.comm.realizations);
            c.finish();
        }
        p.finish();
    }
    top.finish();
    s.validate();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return scenario_from_json(json());
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return scenario_from_json(doc);
}

json scenario_to_json(const Scenario& s) {
    json bs = json::array();
    for (const PoseSpec& b : s.bs) bs.push_back(pose_json(b));
    json ue = pose_json(s.ue);
    ue["clock_offset_s"] = s.clock_offset_s;
    json pa = json::array();
    for (const cdouble& c : s.hwi.pa.coeffs) pa.push_back({c.real(), c.imag()});
    json masks = json::array();
    for (const ImpairmentMask& m : s.plan.masks) masks.push_back(m.to_string());
    json doc = {
        {"id", s.id},
        {"sync_mode", sync_mode_name(s.sync_mode)},
        {"geometry", {{"bs", bs}, {"ue", ue}, {"element_spacing", s.element_spacing}}},
        {"ofdm",
         {{"carrier_hz", s.ofdm.carrier_hz},
          {"subcarrier_spacing_hz", s.ofdm.subcarrier_spacing},
          {"n_subcarriers", s.ofdm.n_subcarriers},
          {"cp_len", s.ofdm.cp_len},
          {"noise_psd_dbm_hz", s.ofdm.noise_psd_dbm_hz},
          {"noise_figure_db", s.ofdm.noise_figure_db},
          {"noise_bandwidth_hz", s.ofdm.noise_bandwidth_hz},
          {"waveform", s.ofdm.waveform == Waveform::Ofdm ? "ofdm" : "dft-s-ofdm"}}},
        {"hwi",
         {{"sigma_pn_deg", rad2deg(s.hwi.sigma_pn)},
          {"sigma_cfo", s.hwi.sigma_cfo},
          {"sigma_mc", s.hwi.sigma_mc},
          {"pa_coeffs", pa},
          {"pa_clip_v", s.hwi.pa.clip_v},
          {"load_ohm", s.hwi.pa.load_ohm},
          {"sigma_age_amp", s.hwi.sigma_age_amp},
          {"sigma_age_phase", s.hwi.sigma_age_phase},
          {"sigma_ade", s.hwi.sigma_ade},
          {"sigma_iqi_amp", s.hwi.sigma_iqi_amp},
          {"sigma_iqi_phase", s.hwi.sigma_iqi_phase},
          {"tx_pn_cfo", s.hwi.tx_pn_cfo_enabled}}},
        {"frame",
         {{"beams", {s.sweep.beams[0], s.sweep.beams[1], s.sweep.beams[2], s.sweep.beams[3]}},
          {"grid_step", s.sweep.grid_step},
          {"prior_offset", s.sweep.prior_offset},
          {"sweep_order", s.sweep.order == SweepOrder::BsFirst ? "bs-first" : "ue-first"}}},
        {"plan",
         {{"power_dbm", s.plan.power_dbm},
          {"c_hwi", s.plan.c_hwi},
          {"masks", masks},
          {"realizations", s.plan.realizations},
          {"trials", s.plan.trials},
          {"percentile", s.plan.percentile},
          {"comm",
           {{"modulation_order", s.plan.comm.modulation_order},
            {"ofdm_symbols", s.plan.comm.ofdm_symbols},
            {"realizations", s.plan.comm.realizations}}}}},
    };
    if (s.seed) doc["seed"] = *s.seed;
    return doc;
}

}  // namespace hwiloc
