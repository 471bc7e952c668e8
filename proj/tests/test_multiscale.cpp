#include <doctest.h>
#include <json.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <fstream>

#include "qps/multiscale.hpp"
#include "qps/rng.hpp"

using namespace qps;

namespace {

const double kGoldenFrac = 0.6180339887498949;

nlohmann::json load_fixture(const std::string& name) {
    std::ifstream in(std::string(QPS_FIXTURE_DIR) + "/" + name);
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

void compare_states(const MultiscaleResult& r, const nlohmann::json& fx) {
    REQUIRE(r.states.size() == fx["states"].size());
    for (std::size_t i = 0; i < r.states.size(); ++i) {
        const auto& st = r.states[i];
        const auto& f = fx["states"][i];
        CHECK(st.s == f["s"].get<int>());
        CHECK(st.N == f["N"].get<int>());
        CHECK(st.grid_surviving == f["grid_surviving"].get<long>());
        CHECK(st.excluded == f["excluded"].get<long>());
        for (const char* key : {"mes_D", "mes_eliminated", "mes_Omega", "mes_E"}) {
            double want = f[key].get<double>();
            double got = key == std::string("mes_D")            ? st.mes_D
                         : key == std::string("mes_eliminated") ? st.mes_eliminated
                         : key == std::string("mes_Omega")      ? st.mes_Omega
                                                                : st.mes_E;
            INFO(key << " at scale " << st.s);
            CHECK(std::fabs(got - want) <= 1e-10 * std::max(1.0, std::fabs(want)));
        }
    }
    CHECK(r.all_pass == fx["all_pass"].get<bool>());
    CHECK(r.first_failure == fx["first_failure"].get<std::string>());
}

const AuditResult* find_audit(const ScaleState& st, const std::string& name) {
    for (const auto& a : st.audits)
        if (a.name == name) return &a;
    return nullptr;
}

}  // namespace

TEST_CASE("length schedule") {
    ScaleParams p;
    p.scales = 2;
    CHECK(p.schedule() == std::vector<int>{4, 16, 200});
    p.scales = 3;
    CHECK(p.schedule() == std::vector<int>{4, 16, 200, 200});
    p.cap = 100;
    p.scales = 2;
    CHECK(p.schedule() == std::vector<int>{4, 16, 100});
    // floor(exp(N^tau)) overtakes N^2 only for very large N; with tau = 0.9 it does at N = 16.
    ScaleParams q;
    q.tau = 0.9;
    q.vartheta = 0.95;
    q.cap = 100000;
    q.scales = 1;
    int n2 = q.schedule()[1];
    CHECK(n2 == std::max(static_cast<int>(std::floor(std::exp(std::pow(4.0, 0.9)))), 16));

    auto bad = [](auto mutate) {
        ScaleParams s;
        mutate(s);
        CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    };
    bad([](ScaleParams& s) { s.tau = 0.6; });
    bad([](ScaleParams& s) { s.tau = 0.0; });
    bad([](ScaleParams& s) { s.vartheta = 1.0; });
    bad([](ScaleParams& s) { s.N1 = 0; });
    bad([](ScaleParams& s) { s.cap = 3; });
    bad([](ScaleParams& s) { s.scales = 0; });
    CHECK_NOTHROW(ScaleParams{}.validate());
}

TEST_CASE("flat-slope set of the cosine") {
    PotentialSpec v = preset_cos();
    for (double eps : {0.1, 0.8, 3.0}) {
        FlatSlopeResult f = flat_slope_sets(v, eps);
        // |V'| = 4 pi |sin 2 pi x| < eps on four arcs of length asin(eps / 4 pi) / (2 pi) each.
        CHECK(f.A_set.measure() == doctest::Approx(4 * std::asin(eps / (4 * M_PI)) / (2 * M_PI)).epsilon(1e-8));
        CHECK(f.C0 == doctest::Approx(4 * M_PI).epsilon(1e-6));
        CHECK(f.J_lo == doctest::Approx(-2.0).epsilon(1e-9));
        CHECK(f.J_hi == doctest::Approx(2.0).epsilon(1e-9));
        // delta is the largest dyadic 2^-k (k >= 1) below eps^10 whose short-gap total stays below eps.
        int ex = 0;
        CHECK(std::frexp(f.delta, &ex) == 0.5);
        CHECK(f.delta < std::pow(eps, 10.0));
        CHECK((2 * f.delta >= std::pow(eps, 10.0) || f.delta == 0.5));
        CHECK(f.h_delta < eps);
        CHECK(f.image_ok);
        CHECK(f.excluded_ok);
        CHECK(f.R_ok);
        CHECK(f.excluded_measure <= f.excluded_bound);
    }
    FlatSlopeResult all = flat_slope_sets(v, 20.0);
    CHECK(all.A_set.measure() == doctest::Approx(1.0));
    CHECK(all.E0.empty());
    CHECK_THROWS_AS(flat_slope_sets(v, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(flat_slope_sets(v, 200.0), std::invalid_argument);
}

TEST_CASE("resonance-free domain at the smallest scale") {
    PotentialSpec v = preset_cos();
    FlatSlopeResult f = flat_slope_sets(v, 0.8);
    ResonanceFreeDomain d = resonance_free_domain(v, f, 1, 0.58, 0.66, 500, 3);
    CHECK(d.N1 == 1);
    CHECK(d.complexity <= d.complexity_bound);
    CHECK(d.sample_violations == 0);
    CHECK(d.D1.measure() > 0);
    CHECK(d.D1.measure() <= 0.08 + 1e-12);
    CHECK(d.pass);
}

TEST_CASE("first-scale branch") {
    PotentialSpec v = preset_cos();
    double lam = 1e4;
    EigenBranch b = first_scale_branch(0.1, kGoldenFrac, lam, v, 4);
    REQUIRE(b.samples.size() == 1);
    const BranchSample& s = b.samples[0];
    CHECK(std::fabs(s.E - lam * v(0.1)) <= 2.0);
    CHECK(b.decay_ok);
    CHECK(b.decay_margin > 0);
    // Independent dense eigensolve of the same block.
    HamiltonianBlock h(IndexInterval(-4, 4), 0.1, kGoldenFrac, lam, v);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.matrix().dense());
    double best = 1e300;
    for (int k = 0; k < 9; ++k) best = std::min(best, std::fabs(es.eigenvalues()(k) - s.E));
    CHECK(best <= 1e-9 * lam);
    // First-order perturbation: dE/dx ~ lambda V'(x).
    CHECK(s.dE_dx == doctest::Approx(lam * v.d1(0.1)).epsilon(1e-3));

    try {
        first_scale_branch(0.1, kGoldenFrac, 5.0, preset_constant(1.0), 3);
        FAIL("expected ResonanceError");
    } catch (const ResonanceError& e) {
        CHECK(e.count() == 7);
    }
}

TEST_CASE("diophantine minimum and resonance counts") {
    auto [val, l] = diophantine_min(kGoldenFrac, 1, 1.0);
    CHECK(l == 1);
    CHECK(val == doctest::Approx(1 - kGoldenFrac));
    auto [half, lh] = diophantine_min(0.5, 10, 1.0);
    CHECK(half == 0.0);
    CHECK(lh == 2);
    // For the golden mean l ||l w|| stays bounded below by about 1/sqrt 5.
    auto [g, lg] = diophantine_min(kGoldenFrac, 1000, 1.0);
    CHECK(g > 0.3);
    CHECK(lg >= 1);

    PotentialSpec v = preset_cos();
    // Only l = 0 resonates for an incommensurate frequency at huge coupling.
    CHECK(resonance_count(0.1, v(0.1), kGoldenFrac, 1e12, v, 50) == 1);
    // With w = 1/2, x = 1/4 puts every site on a zero of the cosine; x = 0.1 repeats on even sites.
    CHECK(resonance_count(0.25, 0.0, 0.5, 1e4, v, 10) == 21);
    CHECK(resonance_count(0.1, v(0.1), 0.5, 1e4, v, 10) == 11);
    CHECK_THROWS_AS(resonance_count(0.1, 0.0, 0.3, 1e4, v, 20000000), std::invalid_argument);
}

TEST_CASE("admissible first scale with a planted resonance") {
    PotentialSpec v = preset_cos();
    // V(x + 7 w) = V(x) exactly when x = -7 w / 2, so the first annulus (3, 9] is rejected.
    double x = -3.5 * kGoldenFrac;
    x -= std::floor(x);
    CHECK(std::fabs(v(x + 7 * kGoldenFrac) - v(x)) < 1e-12);
    CHECK(find_N1(x, kGoldenFrac, 1e12, v, 3, 4) == 9);
    CHECK(find_N1(0.1, kGoldenFrac, 1e12, v, 3, 4) == 3);
    CHECK_THROWS_AS(find_N1(0.25, 0.5, 1e4, v, 2, 3), NoAdmissibleScale);
}

TEST_CASE("separation checks") {
    SeparationReport ok = separation_check({{1.0, 2.0}, {0.0, 0.5, 1.0}}, 4);
    CHECK(ok.pairs == 3);
    CHECK(ok.min_gap == doctest::Approx(0.5));
    CHECK(ok.threshold == doctest::Approx(std::exp(-std::pow(4.0, 0.75))));
    CHECK(ok.pass);
    SeparationReport bad = separation_check({{1.0, 1.0 + 1e-3}}, 4);
    CHECK(bad.violations == 1);
    CHECK_FALSE(bad.pass);
    CHECK(bad.log_margin < 0);
    SeparationReport empty = separation_check({{1.0}, {}}, 16);
    CHECK(empty.pairs == 0);
    CHECK(std::isinf(empty.min_gap));
    CHECK(empty.pass);

    SeparationReport inst = separation_instance(1e4, preset_cos(), kGoldenFrac, 4, 16, 1);
    CHECK(inst.points == 16);
    CHECK(inst.pass);
}

TEST_CASE("dirichlet solution is the eigenvector") {
    PotentialSpec v = preset_cos();
    CounterRng rng(101);
    for (int t = 0; t < 20; ++t) {
        HamiltonianBlock h(IndexInterval(-16, 16), rng.uniform(), kGoldenFrac, rng.uniform(10, 1e4), v);
        Tridiag m = h.matrix();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.dense());
        int k = static_cast<int>(rng.uniform() * 33) % 33;
        double E = es.eigenvalues()(k);
        Eigen::VectorXd ref = es.eigenvectors().col(k);
        Eigen::Index imax;
        ref.cwiseAbs().maxCoeff(&imax);
        ref /= ref(imax);
        std::vector<double> psi = dirichlet_solution(m, E);
        REQUIRE(psi.size() == 33);
        double scale = 0;
        for (double p : psi) scale = std::max(scale, std::fabs(p));
        CHECK(scale == doctest::Approx(1.0));
        double sgn = psi[imax] > 0 ? 1 : -1;
        for (int i = 0; i < 33; ++i) CHECK(std::fabs(sgn * psi[i] - ref(i)) <= 1e-7);
    }
}

TEST_CASE("orthogonality audit") {
    PotentialSpec v = preset_cos();
    HamiltonianBlock h(IndexInterval(-16, 16), 0.1, kGoldenFrac, 1e4, v);
    double c = 1e4 * v(0.1);
    OrthogonalityReport r = orthogonality_separation_audit(h, 4, c, c + 1.0);
    CHECK(r.lipschitz_ok);
    CHECK(r.pass);
    CHECK_THROWS_AS(orthogonality_separation_audit(h, 4, c + 200.0, c), std::invalid_argument);
}

TEST_CASE("morse sampling") {
    PotentialSpec v = preset_cos();
    MorseTemplate tmpl;
    HamiltonianBlock h(IndexInterval(-8, 8), 0.3, kGoldenFrac, 1e4, v);
    EigDerivative d = eig_derivative_near(h, 1e4 * v(0.3));
    MorseReport zero = morse_sample(v, 1e4, h.interval, 0.3, kGoldenFrac, d.E, d.half_gap, tmpl, 0.0, 64, 5);
    CHECK(zero.hits == 0);
    CHECK(zero.estimate == 0.0);
    CHECK(zero.pass);
    MorseTemplate bad;
    bad.delta = 1e-3;
    CHECK_THROWS_AS(morse_sample(v, 1e4, h.interval, 0.3, kGoldenFrac, d.E, d.half_gap, bad, 1e-8, 8, 5),
                    std::invalid_argument);
    CHECK_THROWS_AS(morse_sample(v, 1e4, h.interval, 0.3, kGoldenFrac, d.E, 0.0, tmpl, 1e-8, 8, 5),
                    std::invalid_argument);
}

TEST_CASE("comparison of nearby potentials") {
    PotentialSpec v = preset_cos();
    HamiltonianBlock a(IndexInterval(-10, 10), 0.2, kGoldenFrac, 100.0, v);
    LimitCompareReport same = potential_limit_compare(a, a, 0.0);
    CHECK(same.max_eig_delta == 0.0);
    CHECK(same.max_vec_delta == 0.0);
    CHECK(same.pass);

    PotentialSpec shifted = make_cos_poly({1e-8, 2.0});
    HamiltonianBlock b(IndexInterval(-10, 10), 0.2, kGoldenFrac, 100.0, shifted);
    LimitCompareReport r = potential_limit_compare(a, b, 1e-8);
    // A constant shift moves every eigenvalue by exactly lambda * shift.
    CHECK(r.max_eig_delta == doctest::Approx(100.0 * 1e-8).epsilon(1e-4));
    CHECK(r.weyl_ok);
    CHECK(r.pass);

    HamiltonianBlock other(IndexInterval(-9, 10), 0.2, kGoldenFrac, 100.0, shifted);
    CHECK_THROWS_AS(potential_limit_compare(a, other, 1e-8), std::invalid_argument);
}

TEST_CASE("single-scale driver is deterministic") {
    MultiscaleConfig cfg;
    cfg.params.scales = 1;
    cfg.x_grid = 16;
    cfg.omega_grid = 16;
    cfg.domain_samples = 100;
    PotentialSpec v = preset_cos();
    MultiscaleResult a = multiscale_run(cfg, v), b = multiscale_run(cfg, v);
    REQUIRE(a.states.size() == 1);
    CHECK(a.states[0].mes_D == b.states[0].mes_D);
    CHECK(a.states[0].grid_surviving == b.states[0].grid_surviving);
    CHECK(a.all_pass == b.all_pass);
    CHECK(a.all_pass);
    CHECK(a.schedule == std::vector<int>{4, 16});
}

TEST_CASE("default run reproduces the recorded fixture") {
    nlohmann::json fx = load_fixture("multiscale_default.json");
    MultiscaleConfig cfg;
    MultiscaleResult r = multiscale_run(cfg, preset_cos());
    compare_states(r, fx);
    // Measures shrink scale by scale.
    for (std::size_t i = 1; i < r.states.size(); ++i) {
        CHECK(r.states[i].mes_D <= r.states[i - 1].mes_D + 1e-15);
        CHECK(r.states[i].mes_Omega <= r.states[i - 1].mes_Omega + 1e-15);
    }
}

TEST_CASE("coupling 10 fails the decay hypothesis") {
    nlohmann::json fx = load_fixture("multiscale_lambda10.json");
    MultiscaleConfig cfg;
    cfg.lambda = 10.0;
    MultiscaleResult r = multiscale_run(cfg, preset_cos());
    compare_states(r, fx);
    CHECK_FALSE(r.all_pass);
    CHECK(r.first_failure == "s1:h1_decay");
    const AuditResult* h1 = find_audit(r.states[0], "h1_decay");
    REQUIRE(h1 != nullptr);
    CHECK(h1->violations == fx["h1_violations"].get<long>());
    CHECK(h1->margin < 0);

    cfg.strict = true;
    try {
        multiscale_run(cfg, preset_cos());
        FAIL("expected AuditFailure");
    } catch (const AuditFailure& e) {
        CHECK(e.audit() == "h1_decay");
        CHECK(e.scale() == 1);
    }
}
