// Acceptance run: one PASS/FAIL line per criterion with the measured numbers.
// Exit status is 0 when every criterion passes, or, with --expect-red, when exactly the listed ones fail.

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qps/measure.hpp"
#include "qps/multiscale.hpp"
#include "qps/operator.hpp"
#include "qps/potential.hpp"
#include "qps/rng.hpp"
#include "qps/suites.hpp"
#include "qps/transfer.hpp"

using namespace qps;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Tridiag random_block(CounterRng& rng, std::size_t n, double scale) {
    Tridiag t;
    for (std::size_t i = 0; i < n; ++i) t.diag.push_back(rng.uniform(-scale, scale));
    t.off.assign(n - 1, -1.0);
    return t;
}

Outcome monodromy_identity() {
    CounterRng rng(1001);
    PotentialSpec v = preset_cos();
    double worst = 0.0;
    long sign_mismatch = 0;
    for (int t = 0; t < 500; ++t) {
        long n = 2 + static_cast<long>(rng.uniform() * 49);
        double x = rng.uniform(), w = rng.uniform(), lam = std::exp(rng.uniform(std::log(10.0), std::log(1e4)));
        double E = rng.uniform(-2 * lam - 2, 2 * lam + 2);
        ScaledMat2 M = monodromy(IndexInterval(1, n), x, w, lam, v, E);
        auto ref = [&](long lo, long hi) -> oracle::LogDet {
            if (hi < lo) return {1, 0.0L};
            HamiltonianBlock h(IndexInterval(lo, hi), x, w, lam, v);
            return oracle::logdet(oracle::dense_ld(h.matrix(), E));
        };
        oracle::LogDet want[4] = {ref(1, n), ref(2, n), ref(1, n - 1), ref(2, n - 1)};
        int flip[4] = {1, -1, 1, -1};
        for (int k = 0; k < 4; ++k) {
            SignedLog got = M.entry(k / 2, k % 2);
            if (got.sign != flip[k] * want[k].sign) ++sign_mismatch;
            double wl = static_cast<double>(want[k].log_mag);
            worst = std::max(worst, std::fabs(got.log_mag - wl) / std::max(1.0, std::fabs(wl)));
        }
    }
    return {worst <= 1e-9 && sign_mismatch == 0,
            "max rel log error " + num(worst) + " (<= 1e-9), sign mismatches " + std::to_string(sign_mismatch)};
}

Outcome eigensolver_oracle() {
    CounterRng rng(1002);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 12);
        Tridiag b = random_block(rng, n, 5.0);
        auto ev = spectrum(b, false).eigenvalues;
        auto roots = oracle::poly_roots(oracle::char_poly(b));
        for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::fabs(ev[k] - roots[k]));
    }
    return {worst <= 1e-8, "max eigenvalue deviation " + num(worst) + " (<= 1e-8)"};
}

Outcome poisson_formula() {
    CounterRng rng(1003);
    PotentialSpec v = preset_cos();
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        long n = 2 + static_cast<long>(rng.uniform() * 14);
        HamiltonianBlock h(IndexInterval(1, n), rng.uniform(), rng.uniform(), rng.uniform(0.5, 4.0), v);
        double E = rng.uniform(-6, 6);
        std::vector<long double> phi(n + 2);
        phi[0] = rng.uniform(-1, 1);
        phi[1] = rng.uniform(-1, 1);
        for (long k = 1; k <= n; ++k) phi[k + 1] = (static_cast<long double>(h.site(k)) - E) * phi[k] - phi[k - 1];
        long double scale = 0;
        for (auto p : phi) scale = std::max(scale, std::fabs(p));
        for (long m = 1; m <= n; ++m) {
            double rec = poisson_reconstruct(h, E, static_cast<double>(phi[0]), static_cast<double>(phi[n + 1]), m);
            worst = std::max(worst, static_cast<double>(std::fabs(rec - phi[m]) / scale));
        }
    }
    return {worst <= 1e-8, "max reconstruction error " + num(worst) + " (<= 1e-8, relative to max |phi|)"};
}

Outcome weyl_interlacing() {
    CounterRng rng(1004);
    long weyl_viol = 0, inter_viol = 0;
    for (int t = 0; t < 1000; ++t) {
        std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 20);
        Tridiag a = random_block(rng, n, 5.0), b = random_block(rng, n, 5.0);
        for (auto& o : b.off) o = rng.uniform(-2, 2);
        if (!weyl_check(a, b).pass) ++weyl_viol;
    }
    for (int t = 0; t < 1000; ++t) {
        int n = 1 + static_cast<int>(rng.uniform() * 15);
        Eigen::MatrixXd M(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) M(i, j) = M(j, i) = rng.uniform(-2, 2);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y(i) = rng.normal();
        if (!interlace_check(M, y, rng.uniform(0.01, 4)).pass) ++inter_viol;
    }
    return {weyl_viol == 0 && inter_viol == 0,
            "Weyl violations " + std::to_string(weyl_viol) + "/1000, interlacing violations " +
                std::to_string(inter_viol) + "/1000"};
}

Outcome avalanche() {
    std::vector<Mat2> diag;
    for (double s : {1024.0, 4096.0, 2048.0, 8192.0, 1024.0}) diag.push_back({s, 0, 0, 1.0 / s});
    AvalancheReport d = avalanche_verify(diag, 1024.0);
    bool diag_ok = d.lhs <= d.fp_floor;

    CounterRng rng(1005);
    double worst_ratio = 0.0;
    for (int t = 0; t < 200; ++t) {
        long n = 2 + static_cast<long>(rng.uniform() * 99);
        double mu = std::exp(rng.uniform(std::log(1e3), std::log(1e8)));
        std::vector<Mat2> mats;
        for (long j = 0; j < n; ++j) {
            double s = mu * rng.uniform(1, 5), a = rng.uniform(-0.3, 0.3), b = rng.uniform(-0.3, 0.3);
            Mat2 ra{std::cos(a), -std::sin(a), std::sin(a), std::cos(a)};
            Mat2 rb{std::cos(b), -std::sin(b), std::sin(b), std::cos(b)};
            mats.push_back(ra * Mat2{s, 0, 0, 1.0 / s} * rb);
        }
        worst_ratio = std::max(worst_ratio, avalanche_verify(mats, mu).ratio);
    }

    PotentialSpec v = preset_cos();
    double worst_det = 0.0;
    long applicable = 0, gated = 0;
    for (int t = 0; t < 100; ++t) {
        double x = rng.uniform(), E = rng.uniform(-2e4, 2e4);
        std::vector<long> cuts{0};
        int K = 2 + static_cast<int>(rng.uniform() * 6);
        for (int k = 0; k < K; ++k) cuts.push_back(cuts.back() + 20 + static_cast<long>(rng.uniform() * 40));
        try {
            AvalancheDetReport r = avalanche_det(x, kGolden, 1e4, v, E, cuts);
            ++applicable;
            worst_det = std::max(worst_det, r.residual / (r.ap.n_over_mu + r.ap.fp_floor));
        } catch (const HypothesisError&) {
            ++gated;
        }
    }
    bool pass = diag_ok && worst_ratio <= 10.0 && applicable > 0 && worst_det <= 10.0;
    return {pass, "diagonal residual " + num(d.lhs) + " (fp floor " + num(d.fp_floor) + "), random ratio max " +
                      num(worst_ratio) + " (<= 10), factorized determinant ratio max " + num(worst_det) +
                      " over " + std::to_string(applicable) + " instances (" + std::to_string(gated) +
                      " failed hypotheses)"};
}

Outcome lyapunov_free() {
    LyapunovEstimate e = lyapunov_estimate(kGolden, 3.0, 1.0, preset_zero(), 10000, 100, 1);
    double want = std::log((3 + std::sqrt(5.0)) / 2);
    return {std::fabs(e.value - want) <= 1e-3, "L = " + num(e.value) + " vs " + num(want) + " (+- 1e-3)"};
}

Outcome lyapunov_cos() {
    PotentialSpec v = preset_cos();
    double lam = 5.0, lo = -2 * lam - 2, hi = 2 * lam + 2;
    double min_L = 1e300, at = 0;
    for (int k = 0; k < 50; ++k) {
        double E = lo + (hi - lo) * k / 49.0;
        double L = lyapunov_estimate(kGolden, E, lam, v, 10000, 100, 1).value;
        if (L < min_L) {
            min_L = L;
            at = E;
        }
    }
    double thr = std::log(lam) - 0.05;
    return {min_L >= thr && min_L >= 0.25 * std::log(lam),
            "min L = " + num(min_L) + " at E = " + num(at) + " (>= log 5 - 0.05 = " + num(thr) +
                "; quarter log 5 = " + num(0.25 * std::log(lam)) + ")"};
}

Outcome separation() {
    SeparationReport r = separation_instance(1e4, preset_cos(), kGolden, 7, 100, 1);
    return {r.pass && r.lambda_size <= 100,
            "|Lambda| = " + std::to_string(r.lambda_size) + ", pairs " + std::to_string(r.pairs) + ", min gap " +
                num(r.min_gap) + " vs threshold " + num(r.threshold) + ", violations " +
                std::to_string(r.violations)};
}

Outcome green_decay_criterion() {
    PotentialSpec v = preset_cos();
    CounterRng rng(1009);
    double lam = 1e4;
    long blocks = 0, viol = 0;
    double worst = -1e300;
    while (blocks < 100) {
        HamiltonianBlock h(IndexInterval(1, 50), rng.uniform(), kGolden, lam, v);
        double E = rng.uniform(-2 * lam, 2 * lam);
        double mn = 1e300;
        for (long j = 1; j <= 50; ++j) mn = std::min(mn, std::fabs(h.site(j) - E));
        if (mn < std::sqrt(lam)) continue;
        ++blocks;
        GreenDecayReport r = green_decay(h, E);
        if (!r.slope_ok) ++viol;
        worst = std::max(worst, r.slope - r.bound);
    }
    return {viol == 0, "violations " + std::to_string(viol) + "/100, worst slope - bound " + num(worst)};
}

Outcome hyperplane() {
    std::vector<double> a(8, 1.0 / 8);
    SlabReport r = hyperplane_slab_check(a, 0.0, 0.1, 0.01, 1000000, 1010);
    std::vector<double> e1(8, 0.0);
    e1[0] = 1.0;
    SlabReport s = hyperplane_slab_check(e1, 0.0, 0.1, 0.01, 1000000, 1011);
    bool ok = r.fraction <= 0.8 + 3 * r.sigma && std::fabs(s.fraction - 0.1) <= 3 * s.sigma;
    return {ok, "uniform weights fraction " + num(r.fraction) + " (<= 0.8 + 3 sigma), e1 fraction " +
                    num(s.fraction) + " vs 0.1 +- " + num(3 * s.sigma) + ", Irwin-Hall value " +
                    num(irwin_hall_abs_cdf(8, 8 * 0.01 / 0.1))};
}

Outcome sublevel() {
    auto f = [](double x) { return x * x; };
    auto f1 = [](double x) { return 2 * x; };
    auto f2 = [](double) { return 2.0; };
    auto f3 = [](double) { return 0.0; };
    SublevelReport q = sublevel_measure_check(f, f1, f2, f3, -1, 1, 0.01, 2.0, 2.0);
    bool q_ok = std::fabs(q.measured - 0.2) <= 1e-10 && std::fabs(q.e2_bound - 8 * std::sqrt(0.005)) <= 1e-12 &&
                q.e2_ok;
    double eps = 0.01;
    double s = sublevel_set([](double x) { return std::sin(2 * M_PI * x); }, 0, 1, eps).measure();
    // Linearization at the three zeros 0, 1/2, 1 with slope 2 pi: total width 2 * eps / pi.
    double lin = 2 * eps / M_PI;
    bool s_ok = std::fabs(s / lin - 1) <= 0.05;
    return {q_ok && s_ok, "x^2 measure " + num(q.measured) + " vs bound " + num(q.e2_bound) + ", sin measure " +
                              num(s) + " vs linearization " + num(lin)};
}

Outcome variation() {
    Json j = suite_variation(SuiteOptions{});
    std::string detail;
    bool pass = true;
    for (const auto& c : j["checks"]) {
        bool ok = c["pass"].get<bool>();
        pass = pass && ok;
        if (c.contains("max_over_orders"))
            detail += c["name"].get<std::string>() + " max " + num(c["max_over_orders"].get<double>()) + " vs " +
                      num(c["threshold"].get<double>()) + (ok ? "; " : " FAIL; ");
        else if (!ok)
            detail += c["name"].get<std::string>() + " FAIL; ";
    }
    return {pass, detail + "support and zero-parameter checks " + std::string(pass ? "pass" : "see above")};
}

Outcome morse() {
    PotentialSpec v = preset_cos();
    double lam = 1e4, x = 0.3;
    IndexInterval iv(-40, 40);
    HamiltonianBlock h(iv, x, kGolden, lam, v);
    EigDerivative base = eig_derivative_near(h, lam * v(x));
    MorseTemplate tmpl;
    tmpl.T = 10;
    tmpl.delta = 1e-6;
    tmpl.eta = VariationSpec::random(10, 1e-6, 1).eta;
    MorseReport m = morse_sample(v, lam, iv, x, kGolden, base.E, base.half_gap, tmpl, 1e-8, 10000, 1);
    return {m.pass, "estimate " + num(m.estimate) + " (hits " + std::to_string(m.hits) + ", discarded " +
                        std::to_string(m.discarded) + ") vs 10 x bound " + num(10 * m.bound) + " + 3 sigma " +
                        num(3 * m.sigma) + ", min |E'| + |E''| " + num(m.min_dE)};
}

Outcome multiscale() {
    auto load = [](const std::string& name) {
        std::ifstream in(std::string(QPS_FIXTURE_DIR) + "/" + name);
        return nlohmann::json::parse(in);
    };
    auto matches = [](const MultiscaleResult& r, const nlohmann::json& fx, double& worst) {
        if (r.states.size() != fx["states"].size()) return false;
        bool ok = true;
        for (std::size_t i = 0; i < r.states.size(); ++i) {
            const auto& st = r.states[i];
            const auto& f = fx["states"][i];
            ok = ok && st.grid_surviving == f["grid_surviving"].get<long>() && st.excluded == f["excluded"].get<long>();
            double pairs[4][2] = {{st.mes_D, f["mes_D"].get<double>()},
                                  {st.mes_eliminated, f["mes_eliminated"].get<double>()},
                                  {st.mes_Omega, f["mes_Omega"].get<double>()},
                                  {st.mes_E, f["mes_E"].get<double>()}};
            for (auto& p : pairs) worst = std::max(worst, std::fabs(p[0] - p[1]) / std::max(1.0, std::fabs(p[1])));
        }
        return ok && worst <= 1e-10;
    };
    PotentialSpec v = preset_cos();
    MultiscaleConfig cfg;
    MultiscaleResult r = multiscale_run(cfg, v);
    bool hyp_ok = true;
    std::string failed;
    for (const auto& st : r.states)
        for (const auto& a : st.audits)
            if (a.name.rfind("h", 0) == 0 && a.name.size() > 1 && std::isdigit(static_cast<unsigned char>(a.name[1])) &&
                !a.pass) {
                hyp_ok = false;
                failed += " s" + std::to_string(st.s) + ":" + a.name;
            }
    double worst_d = 0.0, worst_10 = 0.0;
    bool fix_d = matches(r, load("multiscale_default.json"), worst_d);

    MultiscaleConfig c10;
    c10.lambda = 10.0;
    MultiscaleResult r10 = multiscale_run(c10, v);
    nlohmann::json fx10 = load("multiscale_lambda10.json");
    bool fix_10 = matches(r10, fx10, worst_10);
    long h1_viol = -1;
    for (const auto& a : r10.states.front().audits)
        if (a.name == "h1_decay") h1_viol = a.violations;
    bool fails_h1 = r10.first_failure == "s1:h1_decay" && h1_viol == fx10["h1_violations"].get<long>() && h1_viol > 0;

    std::string d = "default: h1-h4 " + std::string(hyp_ok ? "pass" : "fail" + failed) + ", all audits " +
                    (r.all_pass ? "pass" : "fail at " + r.first_failure) + ", fixture max rel diff " +
                    num(worst_d) + "; lambda 10: first failure " + r10.first_failure + ", h1 violations " +
                    std::to_string(h1_viol) + ", fixture max rel diff " + num(worst_10);
    return {hyp_ok && fix_d && fix_10 && fails_h1, d};
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0 = no runtime limit
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    // --expect-red a,b,... names criteria known to fail; the exit status is then 0 exactly when the
    // failing set equals the expected set, so an unexpected pass is reported as loudly as a new failure.
    std::vector<int> expect_red;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--expect-red") {
            std::string list = argv[i + 1];
            std::size_t pos = 0;
            while (pos < list.size()) {
                std::size_t next = list.find(',', pos);
                if (next == std::string::npos) next = list.size();
                expect_red.push_back(std::stoi(list.substr(pos, next - pos)));
                pos = next + 1;
            }
        }
    std::vector<Criterion> all{
        {1, "monodromy-determinant identity", 5, monodromy_identity},
        {2, "eigensolver oracle equivalence", 0, eigensolver_oracle},
        {3, "poisson formula", 0, poisson_formula},
        {4, "weyl and interlacing", 0, weyl_interlacing},
        {5, "avalanche principle", 30, avalanche},
        {6, "lyapunov anchor A (free operator, E = 3)", 10, lyapunov_free},
        {7, "lyapunov anchor B (cos, coupling 5)", 120, lyapunov_cos},
        {8, "eigenvalue separation", 60, separation},
        {9, "green's function decay", 0, green_decay_criterion},
        {10, "hyperplane slab", 0, hyperplane},
        {11, "sublevel measure", 0, sublevel},
        {12, "variation construction", 0, variation},
        {13, "morse monte carlo", 300, morse},
        {14, "multiscale regression", 600, multiscale},
    };
    int failed = 0;
    std::vector<int> red;
    for (const auto& c : all) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool in_time = c.limit_s <= 0 || secs < c.limit_s;
        bool pass = o.pass && in_time;
        if (!pass) {
            ++failed;
            red.push_back(c.id);
        }
        std::printf("%s %2d %s: %s [%.2f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                    c.limit_s > 0 ? (in_time ? " within limit" : " OVER LIMIT") : "");
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria pass\n", static_cast<int>(all.size()) - failed, all.size());
    if (expect_red.empty()) return failed == 0 ? 0 : 1;
    std::sort(expect_red.begin(), expect_red.end());
    bool as_expected = red == expect_red;
    std::printf("failing set %s the expected red set\n", as_expected ? "matches" : "DOES NOT match");
    return as_expected ? 0 : 1;
}
