#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "qps/potential.hpp"
#include "qps/rng.hpp"

using namespace qps;

TEST_CASE("torus points wrap") {
    TorusPoint a(0.7), b(0.6);
    CHECK((a + b).value == doctest::Approx(0.3).epsilon(1e-15));
    CHECK((b + a).value == (a + b).value);
    CHECK(TorusPoint(-0.25).value == doctest::Approx(0.75));
    CHECK(TorusPoint(3.0).value == 0.0);
    CounterRng rng(3);
    for (int i = 0; i < 1000; ++i) {
        TorusPoint p(rng.uniform(-50, 50));
        CHECK(p.value >= 0.0);
        CHECK(p.value < 1.0);
    }
}

TEST_CASE("presets have consistent analytic derivatives") {
    for (const char* name : {"cos", "two-wave"}) {
        PotentialSpec v = preset_by_name(name);
        // Central differences in long double, independent of the library's checker.
        long double h = 1e-5L;
        double worst[3] = {0, 0, 0}, scale[3] = {0, 0, 0};
        for (int i = 0; i < 1024; ++i) {
            double x = (i + 0.5) / 1024;
            double fd[3] = {static_cast<double>((v(x + h) - v(x - h)) / (2 * h)),
                            static_cast<double>((v.d1(x + h) - v.d1(x - h)) / (2 * h)),
                            static_cast<double>((v.d2(x + h) - v.d2(x - h)) / (2 * h))};
            double an[3] = {v.d1(x), v.d2(x), v.d3(x)};
            for (int k = 0; k < 3; ++k) {
                worst[k] = std::max(worst[k], std::fabs(fd[k] - an[k]));
                scale[k] = std::max(scale[k], std::fabs(an[k]));
            }
        }
        for (int k = 0; k < 3; ++k) CHECK(worst[k] <= 1e-6 * scale[k]);
        CHECK(check_derivatives(v).ok);
        CHECK(morse_condition_holds(v));
    }
    PotentialSpec v = preset_cos();
    CHECK(v(0.0) == doctest::Approx(2.0));
    CHECK(v(0.5) == doctest::Approx(-2.0));
    CHECK(v(1.3) == doctest::Approx(v(0.3)).epsilon(1e-14));
    CHECK(v.meta.m0 == 2);
    CHECK(v.meta.max_d1 == doctest::Approx(4 * M_PI).epsilon(1e-6));
}

TEST_CASE("cos-poly matches direct evaluation") {
    PotentialSpec v = make_cos_poly({0.5, -1.0, 0.25});
    for (double x : {0.0, 0.1, 0.37, 0.8}) {
        double c = std::cos(2 * M_PI * x);
        CHECK(v(x) == doctest::Approx(0.5 - c + 0.25 * c * c));
    }
    CHECK_THROWS_AS(preset_by_name("cos-poly"), std::invalid_argument);
    CHECK_THROWS_AS(preset_by_name("nope"), std::invalid_argument);
}

TEST_CASE("cutoff is C3 across both junctions") {
    for (int T : {5, 10, 20}) {
        CutoffFunction chi = CutoffFunction::for_period(T);
        CHECK(chi.inner == doctest::Approx(0.25 / T));
        CHECK(chi.outer == doctest::Approx(0.5 / T));
        CHECK(chi(0.0) == 1.0);
        CHECK(chi(0.9 * chi.inner) == 1.0);
        CHECK(chi(chi.outer) == 0.0);
        CHECK(chi(-1.1 * chi.outer) == 0.0);
        // Derivatives of every order up to 3 are continuous at the junctions.
        for (double j : {chi.inner, chi.outer, -chi.inner, -chi.outer}) {
            double e = 1e-9 * chi.outer;
            for (int k = 0; k <= 3; ++k) {
                double scale = std::pow(1.0 / (chi.outer - chi.inner), k);
                CHECK(std::fabs(chi(j - e, k) - chi(j + e, k)) <= 1e-5 * scale);
            }
        }
        // Declared derivatives agree with finite differences inside the blend.
        double h = 1e-7 * chi.outer;
        for (int i = 1; i < 20; ++i) {
            double x = chi.inner + (chi.outer - chi.inner) * i / 20.0;
            for (int k = 0; k < 3; ++k) {
                double fd = (chi(x + h, k) - chi(x - h, k)) / (2 * h);
                double scale = std::pow(1.0 / (chi.outer - chi.inner), k + 1);
                CHECK(std::fabs(fd - chi(x, k + 1)) <= 1e-5 * scale);
            }
        }
    }
}

TEST_CASE("variation examples") {
    const int T = 10;
    const double d = 1e-6;
    std::vector<double> eta(T, 0.0), z(T, 0.0);
    eta[2] = 1e-6;  // bump m = 3
    VariationSpec w(T, d, eta, z, z);
    CHECK(eval_variation(w, 0.3) == doctest::Approx(1e-6).epsilon(1e-12));
    CHECK(eval_variation(w, 0.7) == 0.0);

    VariationSpec zero = VariationSpec::zero(T, d);
    CounterRng rng(5);
    for (int i = 0; i < 100; ++i) CHECK(eval_variation(zero, rng.uniform()) == 0.0);

    // implied_R: zero where the cutoff is 1, exact negative cube law outside the support.
    VariationSpec r = VariationSpec::random(T, d, 9);
    for (int m = 1; m <= T; ++m) CHECK(implied_R(r, m, 1.0 / (8 * T)) == 0.0);
    std::vector<double> e1(T, 0.0);
    e1[0] = d;
    VariationSpec only_eta(T, d, e1, z, z);
    CHECK(implied_R(only_eta, 1, 1.0 / (2 * T)) == doctest::Approx(-d * std::pow(2.0 * T, 3)));
    for (double x : {0.06, -0.07, 0.2}) {
        double p = r.eta[3] + r.xi[3] * x + 0.5 * r.theta[3] * x * x;
        CHECK(implied_R(r, 4, x) == doctest::Approx(-p / (x * x * x)));
    }
    CHECK_THROWS_AS(implied_R(r, 1, 0.0), std::invalid_argument);
    for (int m = 1; m <= T; ++m) CHECK(implied_R(zero, m, 0.03) == 0.0);
}

TEST_CASE("variation invariants are enforced") {
    std::vector<double> z(10, 0.0);
    CHECK_THROWS_AS(VariationSpec(10, 1e-3, z, z, z), std::invalid_argument);
    std::vector<double> big(10, 0.0);
    big[4] = 2e-6;
    CHECK_THROWS_AS(VariationSpec(10, 1e-6, big, z, z), std::invalid_argument);
    CHECK_NOTHROW(VariationSpec(10, 1e-5, z, z, z));
}

TEST_CASE("variation support is exactly the union of bumps") {
    for (int T : {5, 10, 20}) {
        VariationSpec w = VariationSpec::random(T, 0.5 * std::pow(T, -5.0), 17 + T);
        CounterRng rng(23, T);
        for (int i = 0; i < 10000; ++i) {
            double x = rng.uniform();
            // Brute-force sum over every bump, wrapped local coordinates.
            double s = 0.0;
            int nonzero = 0;
            for (int m = 1; m <= T; ++m) {
                double y = x - static_cast<double>(m) / T;
                y -= std::round(y);
                double b = w.bump(m, y);
                if (std::fabs(y) >= 0.5 / T) CHECK(b == 0.0);
                if (b != 0.0) ++nonzero;
                s += b;
            }
            CHECK(nonzero <= 1);
            CHECK(std::fabs(eval_variation(w, x) - s) <= 1e-12 * w.delta);
        }
    }
}

TEST_CASE("perturbed potential") {
    PotentialSpec base = preset_cos();
    PotentialSpec same = perturbed_potential(base, {});
    PotentialSpec with_zero = perturbed_potential(base, {VariationSpec::zero(10, 1e-6)});
    const int T = 10;
    const double d = 1e-6;
    PotentialSpec pert = perturbed_potential(base, {VariationSpec::random(T, d, 4)});
    double worst = 0.0;
    for (int i = 0; i < 1024; ++i) {
        double x = (i + 0.5) / 1024;
        CHECK(same(x) == base(x));
        CHECK(with_zero(x) == base(x));
        worst = std::max(worst, std::fabs(pert(x) - base(x)));
    }
    // Each point sees one bump, |p| <= d (1 + 1/(2T) + 1/(8T^2)).
    CHECK(worst <= T * d);
    CHECK(worst <= d * (1 + 0.5 / T + 0.125 / (T * T)));
    // V is only C^3 across the cutoff junctions, so the central difference of V'' is first order there.
    DerivativeCheck dc = check_derivatives(pert, 1024, 1e-4);
    CHECK(dc.ok);
    CHECK(dc.max_rel_err[0] <= 1e-6);
    CHECK(dc.max_rel_err[1] <= 1e-6);
}

TEST_CASE("variation derivative bounds report") {
    VariationBoundReport z = verify_variation_derivative_bounds(VariationSpec::zero(10, 1e-6), 4096);
    CHECK(z.max_over_orders == 0.0);
    CHECK(z.pass);
    VariationBoundReport r = verify_variation_derivative_bounds(VariationSpec::random(10, 1e-6, 1), 4096);
    CHECK(std::isfinite(r.max_over_orders));
    CHECK(r.threshold == doctest::Approx(6.4));
    CHECK_THROWS_AS(verify_variation_derivative_bounds(VariationSpec::zero(10, 1e-6), 999), std::invalid_argument);
}
