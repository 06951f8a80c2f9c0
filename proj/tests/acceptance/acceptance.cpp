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
// Acceptance run: one PASS/FAIL line per criterion, exit status 1 when any fails.
// Usage: acceptance <path-to-hwiloc_cli>
#include "hwiloc/bounds.hpp"
#include "hwiloc/comm_eval.hpp"
#include "hwiloc/experiments.hpp"
#include "hwiloc/results.hpp"
#include "hwiloc/scenario.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace hwiloc;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

std::string fmt(double v, const char* spec = "%.4g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

Scenario base_scenario() {
    Scenario s = default_scenario();
    s.seed = kSeed;
    s.plan.realizations = 1;
    return s;
}

/// Rows of one sweep indexed by (metric, power, c, mask, realization).
class RowIndex {
public:
    explicit RowIndex(const std::vector<ResultRow>& rows) {
        for (const ResultRow& r : rows) map_[key(r.metric, r.power_dbm, r.c_hwi, r.mask, r.realization)] = r.value;
    }
    double at(const std::string& metric, double power, double c, const std::string& mask, int realization) const {
        const auto it = map_.find(key(metric, power, c, mask, realization));
        return it == map_.end() ? std::nan("") : it->second;
    }
    bool has(const std::string& metric) const {
        for (const auto& [k, v] : map_)
            if (k.rfind(metric + "|", 0) == 0) return true;
        return false;
    }

private:
    static std::string key(const std::string& m, double p, double c, const std::string& mask, int r) {
        return m + "|" + fmt(p, "%.17g") + "|" + fmt(c, "%.17g") + "|" + mask + "|" + std::to_string(r);
    }
    std::map<std::string, double> map_;
};

double ratio(const RowIndex& x, const std::string& lb, const std::string& crb, double p, double c,
             const std::string& mask, int r) {
    return x.at(lb, p, c, mask, r) / x.at(crb, p, c, mask, r);
}

// ---- 1 -------------------------------------------------------------------

Verdict model_degeneracy() {
    Verdict v;
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    HwiConfig zero;  // every sigma zero
    zero.pa = PaModel::identity();
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        Scenario s = base_scenario();
        s.seed = kSeed + trial;
        s.ue.position += Vec3(3.0 * u(rng), 3.0 * u(rng), 0.5 * (1.0 + u(rng)));
        s.ue.orientation_deg += Vec3(20.0 * u(rng), 10.0 * u(rng), 10.0 * u(rng));
        s.sweep.order = trial % 2 ? SweepOrder::UeFirst : SweepOrder::BsFirst;
        const ScenarioLinks links = build_links(s, 30.0 * u(rng));
        for (std::size_t l = 0; l < links.links.size(); ++l) {
            const LinkSetup& link = links.links[l];
            std::mt19937_64 draw(trial);
            const HwiRealization h = sample_realization(zero, link.ue_array, link.bs_array, link.frame.n_transmissions(),
                                                        link.frame.n_subcarriers(), draw);
            const CVec mm = mm_mean(links.truths[l], link);
            worst = std::max(worst, (tm_mean(links.truths[l], h, link) - mm).norm() / mm.norm());
        }
    }
    v.detail << "max relative |tm - mm| = " << fmt(worst) << " over 20 scenarios";
    v.require(worst <= 1e-10, "relative gap <= 1e-10");
    return v;
}

// ---- 2 -------------------------------------------------------------------

Verdict mcrb_degeneracy() {
    Verdict v;
    const Scenario s = base_scenario();
    double worst = 0.0;
    for (double p : {-10.0, 10.0, 30.0}) {
        const ScenarioLinks links = build_links(s, p);
        std::vector<HwiRealization> ideal;
        for (const LinkSetup& l : links.links)
            ideal.push_back(HwiRealization::ideal(l.ue_array.size(), l.bs_array.size(), l.frame.n_transmissions(),
                                                  l.frame.n_subcarriers()));
        const BoundReport r = compute_bounds(links.world, links.links, links.truths, ideal, s.sync_mode);
        for (const LinkBoundReport& l : r.links)
            for (int i = 0; i < 7; ++i) worst = std::max(worst, std::abs(l.lb(i, i) - l.crb(i, i)) / l.crb(i, i));
    }
    v.detail << "max relative |LB - CRB| diagonal = " << fmt(worst);
    v.require(worst <= 1e-8, "LB = CRB within 1e-8");

    Scenario full = base_scenario();
    full.plan.power_dbm = {0.0, 30.0};
    const auto rows = run_bounds_sweep(full);
    const RowIndex x(rows);
    int missing = 0, negative = 0;
    for (const std::string m : {"AAEB_BS1", "ADEB_BS1", "DEB_BS1", "AALB_BS1", "ADLB_BS1", "DLB_BS1", "AAEB_BS2",
                                "ADEB_BS2", "DEB_BS2", "AALB_BS2", "ADLB_BS2", "DLB_BS2", "PEB", "CEB", "OEB", "PALB",
                                "OALB", "CALB"}) {
        missing += !x.has(m);
        for (double p : {0.0, 30.0}) {
            const double val = x.at(m, p, 1.0, "all", 0);
            negative += !(val >= 0.0);
        }
    }
    v.detail << "; inventory: " << missing << " missing, " << negative << " negative or non-finite";
    v.require(missing == 0 && negative == 0, "all bounds emitted and nonnegative");
    return v;
}

// ---- 3 -------------------------------------------------------------------

Verdict estimator_efficiency() {
    Verdict v;
    Scenario s = base_scenario();
    s.plan.power_dbm = {0.0};
    s.plan.masks = {ImpairmentMask::none()};
    s.plan.trials = 200;
    const RowIndex x(run_estimator_sweep(s));
    auto check = [&](const std::string& rmse, const std::string& bound) {
        const double r = x.at(rmse, 0.0, 1.0, "none", -1) / x.at(bound, 0.0, 1.0, "none", -1);
        v.detail << rmse << "/" << bound << "=" << fmt(r, "%.3f") << " ";
        v.require(std::abs(r - 1.0) <= 0.2, rmse + " within 20%");
    };
    for (const std::string l : {"BS1", "BS2"}) {
        check("RMSE_AOA_" + l, "AAEB_" + l);
        check("RMSE_AOD_" + l, "ADEB_" + l);
        check("RMSE_delay_" + l, "DEB_" + l);
    }
    check("RMSE_position", "PEB");
    v.detail << "excluded=" << x.at("trials_excluded", 0.0, 1.0, "none", -1);
    return v;
}

// ---- 4 -------------------------------------------------------------------

Verdict saturation() {
    Verdict v;
    Scenario s = base_scenario();
    s.plan.power_dbm = {-10.0, 35.0};
    const RowIndex x(run_bounds_sweep(s));
    const double high = ratio(x, "DLB_BS1", "DEB_BS1", 35.0, 1.0, "all", 0);
    const double low = ratio(x, "DLB_BS1", "DEB_BS1", -10.0, 1.0, "all", 0);
    v.detail << "BS1 DLB/DEB: " << fmt(high, "%.2f") << " at 35 dBm, " << fmt(low, "%.3f") << " at -10 dBm";
    v.require(high >= 5.0, "ratio >= 5 at 35 dBm");
    v.require(low <= 1.2, "ratio <= 1.2 at -10 dBm");
    v.detail << " (BS2: " << fmt(ratio(x, "DLB_BS2", "DEB_BS2", 35.0, 1.0, "all", 0), "%.2f") << ", "
             << fmt(ratio(x, "DLB_BS2", "DEB_BS2", -10.0, 1.0, "all", 0), "%.3f") << ")";
    return v;
}

// ---- 5 -------------------------------------------------------------------

Verdict fingerprint() {
    Verdict v;
    Scenario s = base_scenario();
    s.plan.power_dbm = {30.0};
    s.plan.realizations = 20;
    const std::vector<std::string> masks = {"pn", "iqi", "mc", "age", "ade"};
    for (const std::string& m : masks) s.plan.masks.push_back(ImpairmentMask::parse(m));
    s.plan.masks.erase(s.plan.masks.begin());
    const RowIndex x(run_bounds_sweep(s));
    for (const std::string& m : masks) {
        const bool delay_type = m == "pn" || m == "iqi";
        for (const std::string l : {"BS1", "BS2"}) {
            int hits = 0;
            for (int r = 0; r < 20; ++r) {
                const double d = ratio(x, "DLB_" + l, "DEB_" + l, 30.0, 1.0, m, r);
                const double a = ratio(x, "AALB_" + l, "AAEB_" + l, 30.0, 1.0, m, r);
                const double o = ratio(x, "ADLB_" + l, "ADEB_" + l, 30.0, 1.0, m, r);
                hits += delay_type ? (d >= 3.0 && a <= 1.5) : ((a >= 3.0 || o >= 3.0) && d <= 1.5);
            }
            v.detail << m << "/" << l << " " << hits << "/20; ";
            v.require(hits >= 15, m + " on " + l + " in >= 75% of draws");
        }
    }
    return v;
}

// ---- 6 -------------------------------------------------------------------

Verdict cfo_sweep_order() {
    Verdict v;
    double aalb[2][2], adlb[2][2];
    for (int order = 0; order < 2; ++order) {
        Scenario s = base_scenario();
        s.plan.power_dbm = {35.0};
        s.plan.masks = {ImpairmentMask::only(Impairment::Cfo)};
        s.plan.realizations = 100;
        s.sweep.order = order == 0 ? SweepOrder::BsFirst : SweepOrder::UeFirst;
        const RowIndex x(run_bounds_sweep(s));
        for (int l = 0; l < 2; ++l) {
            const std::string n = "_BS" + std::to_string(l + 1) + "_p75";
            aalb[order][l] = x.at("AALB" + n, 35.0, 1.0, "cfo", -1);
            adlb[order][l] = x.at("ADLB" + n, 35.0, 1.0, "cfo", -1);
        }
    }
    for (int l = 0; l < 2; ++l) {
        v.detail << "BS" << l + 1 << " p75 AALB " << fmt(aalb[0][l]) << " (BS-first) vs " << fmt(aalb[1][l])
                 << " (UE-first), ADLB " << fmt(adlb[0][l]) << " vs " << fmt(adlb[1][l]) << "; ";
        v.require(aalb[0][l] < aalb[1][l], "AALB BS-first < UE-first on BS" + std::to_string(l + 1));
        v.require(adlb[0][l] > adlb[1][l], "ADLB BS-first > UE-first on BS" + std::to_string(l + 1));
    }
    return v;
}

// ---- 7 -------------------------------------------------------------------

double binomial_sigma(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

Verdict ser_consistency() {
    Verdict v;
    Scenario s = base_scenario();
    s.plan.comm.ofdm_symbols = 20;
    s.plan.comm.realizations = 50;

    // impairment-free SNR of the first link at 0 dBm
    const ScenarioLinks links = build_links(s, 0.0);
    CommLink link;
    link.eta = links.truths.front();
    link.bs_array = links.links.front().bs_array;
    link.ue_array = links.links.front().ue_array;
    link.ofdm = links.links.front().ofdm;
    const QamConstellation qam(s.plan.comm.modulation_order);
    std::mt19937_64 rng(kSeed);
    const HwiRealization ideal = HwiRealization::ideal(link.ue_array.size(), link.bs_array.size(), 2,
                                                       link.ofdm.n_subcarriers);
    const double snr0 = equivalent_hwi_noise(transmit_block(link, ideal, qam, 2, rng)).snr();
    std::vector<double> powers;
    for (double target : {2e-1, 1e-2, 2e-3}) {
        double lo = -80.0, hi = 20.0;
        for (int i = 0; i < 100; ++i) {
            const double mid = 0.5 * (lo + hi);
            (ser_analytic(qam.order(), snr0 * std::pow(10.0, mid / 10.0)) > target ? lo : hi) = mid;
        }
        powers.push_back(0.5 * (lo + hi));
    }

    Scenario clean = s;
    clean.plan.power_dbm = powers;
    clean.plan.masks = {ImpairmentMask::none()};
    const RowIndex c(run_ser_sweep(clean));
    for (double p : powers) {
        const double mc = c.at("SER_MC", p, 1.0, "none", -1), an = c.at("SER_analytic", p, 1.0, "none", -1);
        const double n = c.at("SER_symbols", p, 1.0, "none", -1);
        const double z = std::abs(mc - an) / binomial_sigma(an, n);
        v.detail << "no-HWI " << fmt(p, "%.1f") << " dBm: MC " << fmt(mc) << " vs " << fmt(an) << " (" << fmt(z, "%.2f")
                 << " sigma, n=" << n << "); ";
        v.require(z <= 3.0, "no-HWI agreement within 3 sigma");
        v.require(n >= 1e5, "1e5 symbols");
    }

    Scenario hw = s;
    hw.plan.power_dbm = {-15.0, -10.0, -5.0, 0.0, 5.0};
    const RowIndex h(run_ser_sweep(hw));
    for (double p : hw.plan.power_dbm) {
        const double mc = h.at("SER_MC", p, 1.0, "all", -1), n = h.at("SER_symbols", p, 1.0, "all", -1);
        const double lo = h.at("SER_analytic_low", p, 1.0, "all", -1), hi = h.at("SER_analytic_high", p, 1.0, "all", -1);
        // band edges widened by 3 binomial sigma of the edge itself
        const bool inside = mc >= lo - 3.0 * binomial_sigma(lo, n) && mc <= hi + 3.0 * binomial_sigma(hi, n);
        v.detail << "c=1 " << p << " dBm: MC " << fmt(mc) << " in [" << fmt(lo) << ", " << fmt(hi) << "]; ";
        v.require(inside, "c=1 band at " + fmt(p) + " dBm");
    }
    return v;
}

// ---- 8 -------------------------------------------------------------------

CVec richardson_column(const ChannelParams& eta, const LinkSetup& link, int i, double h) {
    auto diff = [&](double step) {
        VecX p = eta.to_vector(), m = eta.to_vector();
        p(i) += step;
        m(i) -= step;
        return CVec((mm_mean(ChannelParams::from_vector(p), link) - mm_mean(ChannelParams::from_vector(m), link)) /
                    (2.0 * step));
    };
    return (4.0 * diff(h / 2.0) - diff(h)) / 3.0;
}

Verdict derivatives() {
    Verdict v;
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Scenario s = base_scenario();
    const ScenarioLinks links = build_links(s, 0.0);
    double worst = 0.0;
    for (int point = 0; point < 10; ++point) {
        const LinkSetup& link = links.links[point % 2];
        ChannelParams eta = links.truths[point % 2];
        eta.phi_b += 0.05 * u(rng);
        eta.theta_b += 0.05 * u(rng);
        eta.phi_u += 0.05 * u(rng);
        eta.theta_u += 0.05 * u(rng);
        eta.tau *= 1.0 + 0.1 * u(rng);
        eta.rho *= 1.0 + 0.5 * u(rng);
        eta.xi = kPi * u(rng);
        const CMat jac = mm_jacobian(eta, link);
        const double delay_unit = 1.0 / (link.ofdm.n_subcarriers * link.ofdm.subcarrier_spacing);
        const double steps[7] = {1e-4, 1e-4, 1e-4, 1e-4, 1e-4 * delay_unit, 1e-4 * eta.rho, 1e-4};
        for (int i = 0; i < 7; ++i) {
            const CVec ref = richardson_column(eta, link, i, steps[i]);
            worst = std::max(worst, (jac.col(i) - ref).norm() / ref.norm());
        }
    }
    v.detail << "max relative Jacobian error " << fmt(worst) << " over 10 points; ";
    v.require(worst <= 1e-6, "Jacobian within 1e-6");

    // scalar delay toy: A and B against Gauss-Hermite expectations of the
    // log-likelihood Hessian and squared score
    const double f = 7.5e6, sigma2 = 0.3, tau0 = 4e-9;
    const cdouble amp(0.8, -0.4), offset(0.25, 0.1);
    ParametricMean model;
    model.mean = [&](const VecX& th) { return CVec::Constant(1, amp * std::exp(-kJ * 2.0 * kPi * f * th(0))); };
    model.jacobian = [&](const VecX& th) {
        return CMat::Constant(1, 1, -kJ * 2.0 * kPi * f * amp * std::exp(-kJ * 2.0 * kPi * f * th(0)));
    };
    model.noise_var = VecX::Constant(1, sigma2);
    model.steps = VecX::Constant(1, 1e-5 / f);
    const VecX theta = VecX::Constant(1, tau0);
    const cdouble true_mean = model.mean(theta)(0) + offset;
    const McrbMatrices ab = mcrb_matrices(model, theta, CVec::Constant(1, true_mean));
    const cdouble mu = model.mean(theta)(0);
    const cdouble d1 = -kJ * 2.0 * kPi * f * mu;
    const cdouble d2 = -std::pow(2.0 * kPi * f, 2) * mu;
    const int n = 8;
    MatX jacobi = MatX::Zero(n, n);
    for (int i = 1; i < n; ++i) jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(static_cast<double>(i));
    const Eigen::SelfAdjointEigenSolver<MatX> eig(jacobi);
    const VecX nodes = eig.eigenvalues(), weights = eig.eigenvectors().row(0).transpose().cwiseAbs2();
    const double sd = std::sqrt(sigma2 / 2.0);
    double a = 0.0, b = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const cdouble y = true_mean + cdouble(sd * nodes(i), sd * nodes(j));
            const double score = 2.0 / sigma2 * std::real(std::conj(d1) * (y - mu));
            const double hess = 2.0 / sigma2 * std::real(std::conj(d2) * (y - mu) - std::norm(d1));
            a += weights(i) * weights(j) * hess;
            b += weights(i) * weights(j) * score * score;
        }
    const double ea = std::abs(ab.a(0, 0) - a) / std::abs(a), eb = std::abs(ab.b(0, 0) - b) / std::abs(b);
    v.detail << "toy A rel " << fmt(ea) << ", B rel " << fmt(eb);
    v.require(ea <= 1e-6 && eb <= 1e-6, "toy A/B within 1e-6");
    return v;
}

// ---- 9 -------------------------------------------------------------------

Verdict alb_invariance() {
    Verdict v;
    Scenario s = base_scenario();
    s.plan.power_dbm.clear();
    for (double p = -15.0; p <= 35.0; p += 5.0) s.plan.power_dbm.push_back(p);
    s.plan.realizations = 100;
    s.plan.c_hwi = {0.1, 1.0, 2.0};
    const RowIndex x(run_bounds_sweep(s));
    double spread_p = 0.0, spread_o = 0.0;
    for (double c : s.plan.c_hwi)
        for (int r = 0; r < s.plan.realizations; ++r)
            for (const std::string m : {"PALB", "OALB"}) {
                double lo = INFINITY, hi = -INFINITY;
                for (double p : s.plan.power_dbm) {
                    lo = std::min(lo, x.at(m, p, c, "all", r));
                    hi = std::max(hi, x.at(m, p, c, "all", r));
                }
                (m == "PALB" ? spread_p : spread_o) = std::max(m == "PALB" ? spread_p : spread_o, (hi - lo) / hi);
            }
    v.detail << "max relative spread across power: PALB " << fmt(spread_p) << ", OALB " << fmt(spread_o) << "; ";
    v.require(spread_p <= 1e-9 && spread_o <= 1e-9, "PALB/OALB constant across power (1e-9 relative)");
    v.detail << "p75 PALB at 0 dBm:";
    double prev = -1.0;
    for (double c : s.plan.c_hwi) {
        const double p75 = x.at("PALB_p75", 0.0, c, "all", -1);
        v.detail << " c=" << c << " " << fmt(p75);
        v.require(p75 > prev, "p75 PALB increasing at c=" + fmt(c));
        prev = p75;
    }
    return v;
}

// ---- 10 ------------------------------------------------------------------

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict determinism(const std::string& cli) {
    Verdict v;
    const fs::path dir = fs::temp_directory_path() / "hwiloc_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "scenario.json")
        << R"({"plan": {"power_dbm": [-10, 20], "c_hwi": [1, 2], "realizations": 3, "trials": 4,)"
        << R"( "comm": {"ofdm_symbols": 4, "realizations": 5}}})";
    int status[2];
    for (int run = 0; run < 2; ++run) {
        const std::string cmd = cli + " sweep --seed 7 --scenario " + (dir / "scenario.json").string() + " --out " +
                                (dir / ("run" + std::to_string(run))).string() + " > /dev/null";
        status[run] = std::system(cmd.c_str());
    }
    const std::string a = read_file(dir / "run0" / "sweep.csv"), b = read_file(dir / "run1" / "sweep.csv");
    v.detail << "exit " << status[0] << "/" << status[1] << ", " << a.size() << " bytes, identical "
             << (a == b ? "yes" : "no");
    v.require(status[0] == 0 && status[1] == 0, "both runs succeed");
    v.require(!a.empty() && a == b, "byte-identical CSV");
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <hwiloc_cli>\n", argv[0]);
        return 2;
    }
    const std::string cli = argv[1];
    struct Criterion {
        const char* name;
        double limit_s;
        std::function<Verdict()> run;
    };
    const std::vector<Criterion> criteria = {
        {"model degeneracy", 10.0, model_degeneracy},
        {"MCRB degeneracy", 60.0, mcrb_degeneracy},
        {"estimator efficiency", 600.0, estimator_efficiency},
        {"saturation", 120.0, saturation},
        {"impairment fingerprint", 600.0, fingerprint},
        {"CFO sweep order", 300.0, cfo_sweep_order},
        {"SER consistency", 300.0, ser_consistency},
        {"derivative correctness", 60.0, derivatives},
        {"ALB power invariance and monotonicity", 900.0, alb_invariance},
        {"determinism", 600.0, [&] { return determinism(cli); }},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].run();
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        v.require(secs < criteria[i].limit_s, "runtime < " + fmt(criteria[i].limit_s) + " s");
        failures += !v.pass;
        std::printf("criterion %2zu %-40s %s  %.1f s  %s\n", i + 1, criteria[i].name, v.pass ? "PASS" : "FAIL", secs,
                    v.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
