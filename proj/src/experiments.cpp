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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

namespace hwiloc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Runs body(i) for i in [0, n) on `threads` workers; the first exception is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex lock;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> guard(lock);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::string link_name(std::size_t l) { return "BS" + std::to_string(l + 1); }

std::string percentile_suffix(double q) {
    const double r = std::round(q);
    return "_p" + (std::abs(q - r) < 1e-12 ? std::to_string(static_cast<long long>(r)) : std::to_string(q));
}

struct Cell {
    ImpairmentMask mask;
    double c_hwi = 0.0;
    double power = 0.0;
};

std::vector<Cell> cells_of(const Scenario& s) {
    std::vector<Cell> out;
    for (const ImpairmentMask& m : s.plan.masks)
        for (double c : s.plan.c_hwi)
            for (double p : s.plan.power_dbm) out.push_back({m, c, p});
    return out;
}

HwiConfig cell_config(const Scenario& s, const Cell& cell) {
    HwiConfig cfg = s.hwi;
    cfg.c_hwi = cell.c_hwi;
    cfg.mask = cell.mask;
    return cfg;
}

class RowSink {
public:
    RowSink(const Scenario& s, const Cell& cell, int realization)
        : id_(s.id), cell_(cell), mask_(cell.mask.to_string()), realization_(realization) {}

    void add(const std::string& metric, double value, const std::string& unit) {
        rows.push_back({id_, cell_.power, cell_.c_hwi, mask_, realization_, metric, value, unit});
    }

    std::vector<ResultRow> rows;

private:
    std::string id_;
    Cell cell_;
    std::string mask_;
    int realization_;
};

void add_bound_rows(RowSink& sink, const BoundReport& r, SyncMode mode) {
    for (std::size_t l = 0; l < r.links.size(); ++l) {
        const LinkBoundReport& b = r.links[l];
        const std::string n = "_" + link_name(l);
        sink.add("AAEB" + n, b.crb_scalars.aoa, "rad");
        sink.add("ADEB" + n, b.crb_scalars.aod, "rad");
        sink.add("DEB" + n, b.crb_scalars.delay, "s");
        sink.add("DEB_m" + n, b.crb_scalars.delay_m, "m");
        sink.add("AALB" + n, b.lb_scalars.aoa, "rad");
        sink.add("ADLB" + n, b.lb_scalars.aod, "rad");
        sink.add("DLB" + n, b.lb_scalars.delay, "s");
        sink.add("DLB_m" + n, b.lb_scalars.delay_m, "m");
        sink.add("pseudo_true_converged" + n, b.pseudo_true_converged ? 1.0 : 0.0, "flag");
    }
    sink.add("PEB", r.state.peb, "m");
    if (mode == SyncMode::Synchronized) sink.add("CEB", r.state.ceb_m, "m");
    sink.add("OEB", r.state.oeb, "1");
    sink.add("OEB_deg", r.state.oeb_deg, "deg");
    sink.add("PALB", r.alb.palb, "m");
    if (mode == SyncMode::Synchronized) sink.add("CALB", r.alb.calb, "m");
    sink.add("OALB", r.alb.oalb, "1");
    sink.add("alb_converged", r.alb.converged ? 1.0 : 0.0, "flag");
}

void add_error_row(RowSink& sink, const std::exception& e) {
    const bool singular = dynamic_cast<const SingularGeometryError*>(&e) != nullptr;
    sink.add("error", kNaN, singular ? "singular-geometry" : "numerical-failure");
}

/// Percentile rows over realizations for every metric in `rows`, in first-seen order.
std::vector<ResultRow> aggregate(const std::vector<ResultRow>& rows, double q) {
    std::vector<std::string> order;
    std::vector<std::vector<double>> values;
    std::vector<std::string> units;
    for (const ResultRow& r : rows) {
        if (r.unit == "flag" || r.metric == "error") continue;
        auto it = std::find(order.begin(), order.end(), r.metric);
        std::size_t i = it - order.begin();
        if (it == order.end()) {
            order.push_back(r.metric);
            values.emplace_back();
            units.push_back(r.unit);
        }
        if (std::isfinite(r.value)) values[i].push_back(r.value);
    }
    std::vector<ResultRow> out;
    if (rows.empty()) return out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        ResultRow a = rows.front();
        a.realization = -1;
        a.metric = order[i] + percentile_suffix(q);
        a.value = percentile(values[i], q);
        a.unit = units[i];
        out.push_back(a);
    }
    return out;
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t realization, const std::string& stage) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ splitmix64(realization + 0x632be59bd9b4e019ULL));
    return splitmix64(h ^ fnv1a(stage));
}

std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t realization, const std::string& stage) {
    return std::mt19937_64(stream_seed(master, realization, stage));
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return kNaN;
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ScenarioLinks build_links(const Scenario& s, double power_dbm) {
    const std::uint64_t seed = s.master_seed();
    ScenarioLinks out;
    out.world = s.geometry();
    OfdmConfig ofdm = s.ofdm;
    ofdm.tx_power_dbm = power_dbm;
    for (std::size_t l = 0; l < out.world.n_links(); ++l) {
        std::mt19937_64 phase_rng = make_stream(seed, l, "gain-phase");
        const double xi = std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(phase_rng);
        const ChannelParams eta = channel_params_from_state(out.world.ue, out.world.bs_poses[l], out.world.wavelength(), xi);
        LinkSetup link;
        link.bs_array = out.world.bs_arrays[l];
        link.ue_array = out.world.ue_array;
        link.ofdm = ofdm;
        const Codebooks cb = build_codebooks(prior_frequencies(eta, s.sweep.prior_offset), s.sweep, link.bs_array,
                                             link.ue_array, out.world.wavelength());
        std::mt19937_64 pilot_rng = make_stream(seed, l, "pilots");
        link.frame = make_pilot_frame(cb, s.sweep, ofdm, link.ue_array.size(), pilot_rng);
        out.links.push_back(link);
        out.truths.push_back(eta);
    }
    return out;
}

std::vector<HwiRealization> draw_impairments(const Scenario& s, const ScenarioLinks& links, const HwiConfig& cfg,
                                             int index) {
    cfg.validate();
    const std::uint64_t seed = s.master_seed();
    std::vector<HwiRealization> out;
    for (std::size_t l = 0; l < links.links.size(); ++l) {
        const LinkSetup& link = links.links[l];
        const int g = link.frame.n_transmissions(), k = link.frame.n_subcarriers();
        // one UE device: its static impairments are shared by every link
        std::mt19937_64 ue_static = make_stream(seed, index, "hwi-ue-static");
        std::mt19937_64 ue_dynamic = make_stream(seed, index, "hwi-ue-dynamic-" + link_name(l));
        std::mt19937_64 bs_static = make_stream(seed, index, "hwi-bs-static-" + link_name(l));
        std::mt19937_64 bs_dynamic = make_stream(seed, index, "hwi-bs-dynamic-" + link_name(l));
        HwiRealization r;
        r.tx = sample_end_impairments(cfg, link.ue_array, g, k, ue_static, ue_dynamic, cfg.tx_pn_cfo_enabled);
        r.rx = sample_end_impairments(cfg, link.bs_array, g, k, bs_static, bs_dynamic, true);
        r.pa = cfg.effective_pa();
        out.push_back(r);
    }
    return out;
}

std::vector<ResultRow> run_bounds_sweep(const Scenario& s, const RunOptions& options) {
    s.validate();
    s.master_seed();
    const std::vector<Cell> cells = cells_of(s);
    const int n_real = s.plan.realizations;
    std::vector<std::vector<ResultRow>> slots(cells.size() * n_real);
    parallel_for(slots.size(), options.parallel, [&](std::size_t i) {
        const Cell& cell = cells[i / n_real];
        const int r = static_cast<int>(i % n_real);
        RowSink sink(s, cell, r);
        try {
            const ScenarioLinks links = build_links(s, cell.power);
            const auto hwi = draw_impairments(s, links, cell_config(s, cell), r);
            add_bound_rows(sink, compute_bounds(links.world, links.links, links.truths, hwi, s.sync_mode), s.sync_mode);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::runtime_error& e) {
            add_error_row(sink, e);
        } catch (const std::domain_error& e) {
            add_error_row(sink, e);
        }
        slots[i] = std::move(sink.rows);
    });
    std::vector<ResultRow> out;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::vector<ResultRow> cell_rows;
        for (int r = 0; r < n_real; ++r) {
            const auto& rows = slots[c * n_real + r];
            cell_rows.insert(cell_rows.end(), rows.begin(), rows.end());
        }
        out.insert(out.end(), cell_rows.begin(), cell_rows.end());
        const auto agg = aggregate(cell_rows, s.plan.percentile);
        out.insert(out.end(), agg.begin(), agg.end());
    }
    return out;
}

std::vector<ResultRow> run_estimator_sweep(const Scenario& s, const RunOptions& options) {
    s.validate();
    const std::uint64_t seed = s.master_seed();
    const std::vector<Cell> cells = cells_of(s);
    const int trials = s.plan.trials;
    const bool sync = s.sync_mode == SyncMode::Synchronized;

    struct Prepared {
        ScenarioLinks links;
        std::vector<CVec> means;
        std::vector<ResultRow> bound_rows;
    };
    std::vector<Prepared> prepared(cells.size());
    parallel_for(cells.size(), options.parallel, [&](std::size_t c) {
        Prepared& p = prepared[c];
        p.links = build_links(s, cells[c].power);
        const auto hwi = draw_impairments(s, p.links, cell_config(s, cells[c]), 0);
        for (std::size_t l = 0; l < p.links.links.size(); ++l)
            p.means.push_back(tm_mean(p.links.truths[l], hwi[l], p.links.links[l]));
        RowSink sink(s, cells[c], -1);
        try {
            add_bound_rows(sink, compute_bounds(p.links.world, p.links.links, p.links.truths, hwi, s.sync_mode),
                           s.sync_mode);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::runtime_error& e) {
            add_error_row(sink, e);
        } catch (const std::domain_error& e) {
            add_error_row(sink, e);
        }
        p.bound_rows = std::move(sink.rows);
    });

    std::vector<std::vector<ResultRow>> slots(cells.size() * trials);
    parallel_for(slots.size(), options.parallel, [&](std::size_t i) {
        const std::size_t c = i / trials;
        const int t = static_cast<int>(i % trials);
        const Prepared& p = prepared[c];
        RowSink sink(s, cells[c], t);
        std::mt19937_64 noise = make_stream(seed, t, "noise");
        try {
            std::vector<ChannelParams> estimates;
            std::vector<LinkEstimate> weighted;
            for (std::size_t l = 0; l < p.links.links.size(); ++l) {
                const LinkSetup& link = p.links.links[l];
                const ChannelEstimate e = estimate_channel(add_noise(p.means[l], link, noise), link);
                const ChannelParams& c_hat = e.fine.eta;
                const ChannelParams& truth = p.links.truths[l];
                const std::string n = "_" + link_name(l);
                sink.add("err_AOA" + n, std::hypot(wrap_angle(c_hat.phi_b - truth.phi_b), c_hat.theta_b - truth.theta_b), "rad");
                sink.add("err_AOD" + n, std::hypot(wrap_angle(c_hat.phi_u - truth.phi_u), c_hat.theta_u - truth.theta_u), "rad");
                sink.add("err_delay" + n, std::abs(c_hat.tau - truth.tau), "s");
                estimates.push_back(c_hat);
                const MatX efim = efim_nonnuisance(fim_channel(c_hat, link));
                weighted.push_back({c_hat, sync ? efim : angle_information(efim)});
            }
            const ScenarioGeometry& w = p.links.world;
            const StateVector init = ls_coarse(estimates, w.bs_poses, s.sync_mode);
            const StateResult st = mmle_state(weighted, init, w.bs_poses, w.wavelength(), s.sync_mode);
            sink.add("err_position_coarse", (init.position - w.ue.position).norm(), "m");
            sink.add("err_position", (st.state.position - w.ue.position).norm(), "m");
            if (sync) sink.add("err_clock", kSpeedOfLight * std::abs(st.state.clock_offset - w.ue.clock_offset), "m");
            sink.add("err_orientation", (st.state.rotation - w.ue.rotation).norm(), "1");
        } catch (const ConfigError&) {
            throw;
        } catch (const std::runtime_error& e) {
            sink.rows.clear();
            add_error_row(sink, e);
        } catch (const std::domain_error& e) {
            sink.rows.clear();
            add_error_row(sink, e);
        }
        slots[i] = std::move(sink.rows);
    });

    std::vector<ResultRow> out;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        out.insert(out.end(), prepared[c].bound_rows.begin(), prepared[c].bound_rows.end());
        std::vector<std::string> order;
        std::vector<double> sums;
        std::vector<std::string> units;
        int used = 0, excluded = 0;
        for (int t = 0; t < trials; ++t) {
            const auto& rows = slots[c * trials + t];
            out.insert(out.end(), rows.begin(), rows.end());
            if (!rows.empty() && rows.front().metric == "error") {
                ++excluded;
                continue;
            }
            ++used;
            for (const ResultRow& r : rows) {
                auto it = std::find(order.begin(), order.end(), r.metric);
                if (it == order.end()) {
                    order.push_back(r.metric);
                    sums.push_back(0.0);
                    units.push_back(r.unit);
                    it = order.end() - 1;
                }
                sums[it - order.begin()] += r.value * r.value;
            }
        }
        RowSink agg(s, cells[c], -1);
        for (std::size_t m = 0; m < order.size(); ++m)
            agg.add("RMSE" + order[m].substr(3), used > 0 ? std::sqrt(sums[m] / used) : kNaN, units[m]);
        agg.add("trials_used", used, "count");
        agg.add("trials_excluded", excluded, "count");
        out.insert(out.end(), agg.rows.begin(), agg.rows.end());
    }
    return out;
}

std::vector<ResultRow> run_ser_sweep(const Scenario& s, const RunOptions& options) {
    s.validate();
    const std::uint64_t seed = s.master_seed();
    const std::vector<Cell> cells = cells_of(s);
    std::vector<std::vector<ResultRow>> slots(cells.size());
    parallel_for(cells.size(), options.parallel, [&](std::size_t c) {
        const ScenarioLinks links = build_links(s, cells[c].power);
        CommLink link;
        link.eta = links.truths.front();
        link.bs_array = links.links.front().bs_array;
        link.ue_array = links.links.front().ue_array;
        link.ofdm = links.links.front().ofdm;
        std::mt19937_64 rng = make_stream(seed, 0, "comm");
        const SerResult r = ser_monte_carlo(s.plan.comm, link, cell_config(s, cells[c]), rng);
        RowSink sink(s, cells[c], -1);
        sink.add("SER_MC", r.ser, "1");
        sink.add("SER_MC_halfwidth", r.halfwidth, "1");
        sink.add("SER_errors", static_cast<double>(r.errors), "count");
        sink.add("SER_symbols", static_cast<double>(r.symbols), "count");
        sink.add("SER_analytic", r.analytic, "1");
        sink.add("SER_analytic_low", r.analytic_low, "1");
        sink.add("SER_analytic_high", r.analytic_high, "1");
        sink.add("HWI_noise_power", r.hwi_power, "W");
        sink.add("background_noise_power", r.background_power, "W");
        slots[c] = std::move(sink.rows);
    });
    std::vector<ResultRow> out;
    for (const auto& rows : slots) out.insert(out.end(), rows.begin(), rows.end());
    return out;
}

}  // namespace hwiloc
