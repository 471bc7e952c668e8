#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qps/measure.hpp"
#include "qps/rng.hpp"

using namespace qps;

namespace {

SimpleSet1D random_set(CounterRng& rng, int k) {
    std::vector<std::pair<double, double>> iv;
    double x = rng.uniform(0, 0.1);
    for (int i = 0; i < k; ++i) {
        double lo = x + rng.uniform(0, 0.1), hi = lo + rng.uniform(0.001, 0.1);
        iv.push_back({lo, hi});
        x = hi;
    }
    return SimpleSet1D(iv);
}

// Area of a union of rectangles by coordinate compression: every elementary cell is tested
// for membership at its centre.
double union_area(const std::vector<Rect>& rects) {
    std::vector<double> xs, ys;
    for (const auto& r : rects) {
        xs.insert(xs.end(), {r.x_lo, r.x_hi});
        ys.insert(ys.end(), {r.y_lo, r.y_hi});
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
            double cx = 0.5 * (xs[i] + xs[i + 1]), cy = 0.5 * (ys[j] + ys[j + 1]);
            for (const auto& r : rects)
                if (cx > r.x_lo && cx < r.x_hi && cy > r.y_lo && cy < r.y_hi) {
                    area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
                    break;
                }
        }
    return area;
}

std::vector<Rect> random_rects(CounterRng& rng, int k) {
    std::vector<Rect> out;
    for (int i = 0; i < k; ++i) {
        double x = rng.uniform(), y = rng.uniform();
        out.push_back({x, x + rng.uniform(0.01, 0.4), y, y + rng.uniform(0.01, 0.4)});
    }
    return out;
}

// P(|U_1 + ... + U_n| <= t) for U_i uniform on [-1, 1], by repeated numerical convolution.
double sum_uniform_abs_cdf(int n, double t) {
    const int per_unit = 2000;
    const double h = 1.0 / per_unit;
    std::vector<double> dens(2 * per_unit + 1, 0.5);
    std::vector<double> cur = dens;
    for (int k = 1; k < n; ++k) {
        std::vector<double> next(cur.size() + dens.size() - 1, 0.0);
        for (std::size_t i = 0; i < cur.size(); ++i)
            for (std::size_t j = 0; j < dens.size(); ++j) next[i + j] += cur[i] * dens[j] * h;
        cur.swap(next);
    }
    double c = 0.5 * static_cast<double>(cur.size() - 1);
    double p = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
        double s = (static_cast<double>(i) - c) * h;
        double w = (i == 0 || i + 1 == cur.size()) ? 0.5 : 1.0;
        if (std::fabs(s) <= t) p += w * cur[i] * h;
    }
    return p;
}

}  // namespace

TEST_CASE("simple sets normalize and measure") {
    SimpleSet1D a({{0.5, 0.7}, {0.0, 0.2}, {0.1, 0.3}, {0.3, 0.4}});
    REQUIRE(a.complexity() == 2);
    CHECK(a.intervals()[0].first == 0.0);
    CHECK(a.intervals()[0].second == doctest::Approx(0.4));
    CHECK(a.measure() == doctest::Approx(0.6));
    CHECK(a.contains(0.4));
    CHECK_FALSE(a.contains(0.45));
    CHECK(SimpleSet1D::interval(1, 1).empty());
    SimpleSet1D b = SimpleSet1D::interval(0.15, 0.55);
    CHECK(a.intersect(b).measure() == doctest::Approx(0.3));
    CHECK(a.subtract(b).measure() == doctest::Approx(0.3));
    CHECK(a.unite(b).measure() == doctest::Approx(0.7));
}

TEST_CASE("set algebra identities on random families") {
    CounterRng rng(83);
    for (int t = 0; t < 300; ++t) {
        SimpleSet1D A = random_set(rng, 1 + static_cast<int>(rng.uniform() * 8));
        SimpleSet1D B = random_set(rng, 1 + static_cast<int>(rng.uniform() * 8));
        double mA = A.measure(), mB = B.measure(), mI = A.intersect(B).measure();
        CHECK(A.unite(B).measure() == doctest::Approx(mA + mB - mI).epsilon(1e-12));
        CHECK(A.subtract(B).measure() == doctest::Approx(mA - mI).epsilon(1e-12));
        CHECK(A.unite(B) == B.unite(A));
        CHECK(mI <= std::min(mA, mB) + 1e-15);
        CHECK(A.subtract(A).empty());
        double x = rng.uniform(0, 1.5);
        CHECK(A.unite(B).contains(x) == (A.contains(x) || B.contains(x)));
    }
}

TEST_CASE("2D sets match coordinate compression") {
    CounterRng rng(89);
    for (int t = 0; t < 100; ++t) {
        auto ra = random_rects(rng, 1 + static_cast<int>(rng.uniform() * 6));
        auto rb = random_rects(rng, 1 + static_cast<int>(rng.uniform() * 6));
        SimpleSet2D A = SimpleSet2D::from_rects(ra), B = SimpleSet2D::from_rects(rb);
        std::vector<Rect> both = ra;
        both.insert(both.end(), rb.begin(), rb.end());
        double mA = union_area(ra), mB = union_area(rb), mU = union_area(both);
        CHECK(A.measure() == doctest::Approx(mA).epsilon(1e-12));
        CHECK(A.unite(B).measure() == doctest::Approx(mU).epsilon(1e-12));
        CHECK(A.intersect(B).measure() == doctest::Approx(mA + mB - mU).epsilon(1e-9));
        CHECK(A.subtract(B).measure() == doctest::Approx(mU - mB).epsilon(1e-9));
        CHECK(union_area(A.rects()) == doctest::Approx(mA).epsilon(1e-12));
        double x = rng.uniform(), y = rng.uniform();
        bool in = false;
        for (const auto& r : ra) in = in || (x > r.x_lo && x < r.x_hi && y > r.y_lo && y < r.y_hi);
        CHECK(A.contains(x, y) == in);
    }
    SimpleSet2D sq = SimpleSet2D::from_rects({{0, 1, 0, 2}});
    CHECK(sq.project_x().measure() == doctest::Approx(1.0));
    CHECK(sq.project_y().measure() == doctest::Approx(2.0));
    CHECK(sq.slice_x(0.5).measure() == doctest::Approx(2.0));
    CHECK(sq.slice_x(1.5).empty());
}

TEST_CASE("sublevel sets of simple functions") {
    SimpleSet1D s = sublevel_set([](double x) { return x * x; }, -1, 1, 0.2, 4096);
    CHECK(s.measure() == doctest::Approx(2 * std::sqrt(0.2)).epsilon(1e-10));
    double eps = 0.3;
    SimpleSet1D w = sublevel_set([](double x) { return std::sin(2 * M_PI * x); }, 0, 1, eps, 4096);
    CHECK(w.measure() == doctest::Approx(4 * std::asin(eps) / (2 * M_PI)).epsilon(1e-10));
    CHECK(w.complexity() == 3);

    auto f = [](double x) { return x * x; };
    auto f1 = [](double x) { return 2 * x; };
    auto f2 = [](double) { return 2.0; };
    auto f3 = [](double) { return 0.0; };
    SublevelReport r = sublevel_measure_check(f, f1, f2, f3, -1, 1, 1e-4, 2.0, 2.0);
    CHECK(r.e2_hypothesis);
    CHECK(r.e3_hypothesis);
    CHECK(r.monotone_pieces == 2);
    CHECK(r.pass);
    CHECK(r.measured == doctest::Approx(2e-2).epsilon(1e-8));
}

TEST_CASE("sublevel bounds hold for random cubic families") {
    CounterRng rng(97);
    for (int t = 0; t < 100; ++t) {
        double c0 = rng.uniform(-1, 1), c1 = rng.uniform(-1, 1), c2 = rng.uniform(1, 3), c3 = rng.uniform(-0.2, 0.2);
        auto f = [=](double x) { return c0 + c1 * x + c2 * x * x + c3 * x * x * x; };
        auto f1 = [=](double x) { return c1 + 2 * c2 * x + 3 * c3 * x * x; };
        auto f2 = [=](double x) { return 2 * c2 + 6 * c3 * x; };
        auto f3 = [=](double) { return 6 * c3; };
        double eps = std::pow(10.0, rng.uniform(-6, -1));
        SublevelReport r = sublevel_measure_check(f, f1, f2, f3, -1, 1, eps, 2 * c2 - 6 * std::fabs(c3), 20.0);
        CHECK(r.e2_hypothesis);
        CHECK(r.pass);
    }
}

TEST_CASE("implicit slab decomposition") {
    // f = y: the uncovered part is exactly the slab |y| < rho.
    double rho = 0.05;
    ImplicitSlabReport flat = implicit_slab([](double, double y) { return y; }, {0, 1, -1, 1}, 1.0, 0.0, rho, 8);
    CHECK(flat.hypotheses_ok);
    CHECK(flat.uncovered == doctest::Approx(2 * rho).epsilon(1e-9));
    CHECK(flat.uncovered <= flat.bound + 1e-12);
    CHECK(flat.sample_violations == 0);
    CHECK(flat.pass);

    for (int m : {4, 16, 64}) {
        ImplicitSlabReport tilted =
            implicit_slab([](double x, double y) { return y - x; }, {0, 1, -1, 2}, 1.0, 1.0, rho, m);
        CHECK(tilted.hypotheses_ok);
        CHECK(tilted.uncovered >= 2 * rho - 1e-12);
        CHECK(tilted.uncovered <= tilted.bound + 1e-12);
        CHECK(tilted.sample_violations == 0);
        CHECK(tilted.pass);
    }
    ImplicitSlabReport bad = implicit_slab([](double x, double) { return x; }, {0, 1, -1, 1}, 1.0, 1.0, rho, 4);
    CHECK_FALSE(bad.hypotheses_ok);
}

TEST_CASE("inverse branch lipschitz bound") {
    auto F = [](double x, double y) { return x * x + y; };
    auto Fx = [](double x, double) { return 2 * x; };
    auto Fy = [](double, double) { return 1.0; };
    InverseBranchReport r = inverse_branch_check(F, Fx, Fy, {0.5, 1.0, -0.9, -0.3}, 0.01, 1.0, 1.0, 200, 3);
    CHECK(r.pairs_checked > 0);
    CHECK(r.max_ratio <= 1.0);
    CHECK(r.pass);
}

TEST_CASE("hyperplane slab probabilities") {
    // a = e1: the probability is exactly eps / delta when the slab sits inside the cube.
    std::vector<double> e1{1.0, 0.0, 0.0};
    SlabReport r = hyperplane_slab_check(e1, 0.1, 1.0, 0.05, 200000, 5);
    CHECK(std::fabs(r.fraction - 0.05) <= 4 * r.sigma);
    CHECK(r.pass);

    for (int n : {2, 3, 5}) {
        std::vector<double> a(n, 1.0 / n);
        double delta = 1.0, eps = 0.02;
        SlabReport u = hyperplane_slab_check(a, 0.0, delta, eps, 200000, 11 + n);
        double exact = sum_uniform_abs_cdf(n, n * eps / delta);
        CHECK(std::fabs(u.fraction - exact) <= 4 * u.sigma + 1e-4);
        CHECK(u.fraction <= u.bound);
    }
    CHECK_THROWS_AS(hyperplane_slab_check({0.5, 0.6}, 0, 1, 0.1, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(hyperplane_slab_check({1.5, -0.5}, 0, 1, 0.1, 10, 1), std::invalid_argument);
}

TEST_CASE("double resonance estimator") {
    auto F1 = [](double x, double) { return std::cos(2 * M_PI * x); };
    auto one = [](double, double) { return 1.0; };
    DoubleResonanceReport none = double_resonance_measure(F1, one, 5, 0.1, {0, 1, 0, 1}, 200, 3);
    CHECK(none.hits == 0);
    CHECK(none.estimate == 0.0);
    // F2 = F1: every omega hits as long as x + n1 omega sits near a zero for some x in the first sublevel set.
    DoubleResonanceReport all = double_resonance_measure(F1, F1, 0, 0.1, {0, 1, 0, 1}, 200, 3);
    CHECK(all.hits == 200);
    CHECK(all.estimate == doctest::Approx(1.0));

    // Monotone in eps for nested sublevel sets.
    auto F2 = [](double x, double w) { return std::sin(2 * M_PI * (x + w)) - 0.3; };
    double prev = 1e300;
    for (double eps : {0.2, 0.05, 0.0125}) {
        DoubleResonanceReport r = double_resonance_measure(F1, F2, 3, eps, {0, 1, 0, 1}, 2000, 7);
        CHECK(r.estimate <= prev);
        prev = r.estimate;
    }
    CHECK(std::isnan(empirical_exponent(0.1, 0.0, 0.01, 0.5)));
    CHECK(empirical_exponent(0.1, 0.1, 0.01, 0.01) == doctest::Approx(1.0));
}
