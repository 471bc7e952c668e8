#include "qps/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qps/parallel.hpp"
#include "qps/rng.hpp"

namespace qps {

SimpleSet1D::SimpleSet1D(std::vector<std::pair<double, double>> intervals) {
    std::sort(intervals.begin(), intervals.end());
    for (const auto& [lo, hi] : intervals) {
        if (!(lo < hi)) continue;
        if (!iv_.empty() && lo <= iv_.back().second)
            iv_.back().second = std::max(iv_.back().second, hi);
        else
            iv_.push_back({lo, hi});
    }
}

SimpleSet1D SimpleSet1D::interval(double lo, double hi) { return SimpleSet1D({{lo, hi}}); }

double SimpleSet1D::measure() const {
    double s = 0.0;
    for (const auto& [lo, hi] : iv_) s += hi - lo;
    return s;
}

bool SimpleSet1D::contains(double x) const {
    auto it = std::upper_bound(iv_.begin(), iv_.end(), x,
                               [](double v, const std::pair<double, double>& p) { return v < p.first; });
    if (it == iv_.begin()) return false;
    --it;
    return x >= it->first && x <= it->second;
}

SimpleSet1D SimpleSet1D::unite(const SimpleSet1D& o) const {
    std::vector<std::pair<double, double>> all = iv_;
    all.insert(all.end(), o.iv_.begin(), o.iv_.end());
    return SimpleSet1D(std::move(all));
}

SimpleSet1D SimpleSet1D::intersect(const SimpleSet1D& o) const {
    std::vector<std::pair<double, double>> out;
    std::size_t i = 0, j = 0;
    while (i < iv_.size() && j < o.iv_.size()) {
        double lo = std::max(iv_[i].first, o.iv_[j].first);
        double hi = std::min(iv_[i].second, o.iv_[j].second);
        if (lo < hi) out.push_back({lo, hi});
        if (iv_[i].second < o.iv_[j].second)
            ++i;
        else
            ++j;
    }
    return SimpleSet1D(std::move(out));
}

SimpleSet1D SimpleSet1D::subtract(const SimpleSet1D& o) const {
    std::vector<std::pair<double, double>> out;
    std::size_t j = 0;
    for (auto [lo, hi] : iv_) {
        double cur = lo;
        while (j < o.iv_.size() && o.iv_[j].second <= cur) ++j;
        std::size_t k = j;
        while (k < o.iv_.size() && o.iv_[k].first < hi) {
            if (o.iv_[k].first > cur) out.push_back({cur, o.iv_[k].first});
            cur = std::max(cur, o.iv_[k].second);
            if (cur >= hi) break;
            ++k;
        }
        if (cur < hi) out.push_back({cur, hi});
    }
    return SimpleSet1D(std::move(out));
}

SimpleSet2D SimpleSet2D::from_rects(const std::vector<Rect>& rects) {
    std::vector<double> xs;
    for (const auto& r : rects)
        if (r.x_lo < r.x_hi && r.y_lo < r.y_hi) {
            xs.push_back(r.x_lo);
            xs.push_back(r.x_hi);
        }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    if (xs.size() < 2) return {};
    std::vector<std::vector<std::pair<double, double>>> cols(xs.size() - 1);
    for (const auto& r : rects) {
        if (!(r.x_lo < r.x_hi && r.y_lo < r.y_hi)) continue;
        std::size_t i0 = std::lower_bound(xs.begin(), xs.end(), r.x_lo) - xs.begin();
        std::size_t i1 = std::lower_bound(xs.begin(), xs.end(), r.x_hi) - xs.begin();
        for (std::size_t i = i0; i < i1; ++i) cols[i].push_back({r.y_lo, r.y_hi});
    }
    SimpleSet2D out;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        SimpleSet1D ys(std::move(cols[i]));
        if (!ys.empty()) out.slabs_.push_back({xs[i], xs[i + 1], std::move(ys)});
    }
    out.merge_adjacent();
    return out;
}

SimpleSet2D SimpleSet2D::from_slabs(std::vector<Slab> slabs) {
    std::vector<Rect> rects;
    for (const auto& s : slabs)
        for (const auto& [lo, hi] : s.ys.intervals()) rects.push_back({s.x_lo, s.x_hi, lo, hi});
    return from_rects(rects);
}

void SimpleSet2D::merge_adjacent() {
    std::vector<Slab> out;
    for (auto& s : slabs_) {
        if (!out.empty() && out.back().x_hi == s.x_lo && out.back().ys == s.ys)
            out.back().x_hi = s.x_hi;
        else
            out.push_back(std::move(s));
    }
    slabs_ = std::move(out);
}

double SimpleSet2D::measure() const {
    double m = 0.0;
    for (const auto& s : slabs_) m += (s.x_hi - s.x_lo) * s.ys.measure();
    return m;
}

std::size_t SimpleSet2D::complexity() const {
    std::size_t c = 0;
    for (const auto& s : slabs_) c += s.ys.complexity();
    return c;
}

SimpleSet1D SimpleSet2D::slice_x(double x) const {
    for (const auto& s : slabs_)
        if (x >= s.x_lo && x < s.x_hi) return s.ys;
    return {};
}

bool SimpleSet2D::contains(double x, double y) const {
    for (const auto& s : slabs_)
        if (x >= s.x_lo && x <= s.x_hi && s.ys.contains(y)) return true;
    return false;
}

std::vector<Rect> SimpleSet2D::rects() const {
    std::vector<Rect> out;
    for (const auto& s : slabs_)
        for (const auto& [lo, hi] : s.ys.intervals()) out.push_back({s.x_lo, s.x_hi, lo, hi});
    return out;
}

template <class Op>
SimpleSet2D SimpleSet2D::combine(const SimpleSet2D& o, Op op) const {
    std::vector<double> xs;
    for (const auto& s : slabs_) {
        xs.push_back(s.x_lo);
        xs.push_back(s.x_hi);
    }
    for (const auto& s : o.slabs_) {
        xs.push_back(s.x_lo);
        xs.push_back(s.x_hi);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    SimpleSet2D out;
    std::size_t i = 0, j = 0;
    static const SimpleSet1D empty_set;
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
        double mid = 0.5 * (xs[k] + xs[k + 1]);
        while (i < slabs_.size() && slabs_[i].x_hi <= mid) ++i;
        while (j < o.slabs_.size() && o.slabs_[j].x_hi <= mid) ++j;
        const SimpleSet1D& a = (i < slabs_.size() && slabs_[i].x_lo <= mid) ? slabs_[i].ys : empty_set;
        const SimpleSet1D& b = (j < o.slabs_.size() && o.slabs_[j].x_lo <= mid) ? o.slabs_[j].ys : empty_set;
        SimpleSet1D r = op(a, b);
        if (!r.empty()) out.slabs_.push_back({xs[k], xs[k + 1], std::move(r)});
    }
    out.merge_adjacent();
    return out;
}

SimpleSet2D SimpleSet2D::unite(const SimpleSet2D& o) const {
    return combine(o, [](const SimpleSet1D& a, const SimpleSet1D& b) { return a.unite(b); });
}

SimpleSet2D SimpleSet2D::intersect(const SimpleSet2D& o) const {
    return combine(o, [](const SimpleSet1D& a, const SimpleSet1D& b) { return a.intersect(b); });
}

SimpleSet2D SimpleSet2D::subtract(const SimpleSet2D& o) const {
    return combine(o, [](const SimpleSet1D& a, const SimpleSet1D& b) { return a.subtract(b); });
}

SimpleSet1D SimpleSet2D::project_x() const {
    std::vector<std::pair<double, double>> iv;
    for (const auto& s : slabs_) iv.push_back({s.x_lo, s.x_hi});
    return SimpleSet1D(std::move(iv));
}

SimpleSet1D SimpleSet2D::project_y() const {
    std::vector<std::pair<double, double>> iv;
    for (const auto& s : slabs_) iv.insert(iv.end(), s.ys.intervals().begin(), s.ys.intervals().end());
    return SimpleSet1D(std::move(iv));
}

namespace {

// Root of g on [lo, hi] given a sign change, bisected to floating resolution.
double bisect_root(const Fn1& g, double lo, double hi) {
    double glo = g(lo);
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        double gm = g(mid);
        if (gm == 0.0) return mid;
        if ((gm > 0) == (glo > 0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

ImplicitSlabReport implicit_slab(const Fn2& f, Rect D, double mu, double kappa, double rho, int m, int check_grid,
                                 long samples, std::uint64_t seed) {
    if (m < 1 || !(mu > 0) || !(rho >= 0)) throw std::invalid_argument("implicit_slab: need m >= 1, mu > 0, rho >= 0");
    ImplicitSlabReport r;
    double a = D.x_lo, b = D.x_hi, c = D.y_lo, d = D.y_hi;
    // Hypotheses on a grid by central differences.
    double hx = 1e-6 * (b - a), hy = 1e-6 * (d - c);
    for (int i = 0; i <= check_grid && r.hypotheses_ok; ++i)
        for (int j = 0; j <= check_grid; ++j) {
            double x = a + (b - a) * (i + 0.5) / (check_grid + 1);
            double y = c + (d - c) * (j + 0.5) / (check_grid + 1);
            double fy = (f(x, y + hy) - f(x, y - hy)) / (2 * hy);
            double fx = (f(x + hx, y) - f(x - hx, y)) / (2 * hx);
            if (fy < mu * (1 - 1e-6)) {
                r.hypotheses_ok = false;
                r.hypothesis_error = "d_y f < mu";
                break;
            }
            if (std::fabs(fx) > kappa * (1 + 1e-6) + 1e-9) {
                r.hypotheses_ok = false;
                r.hypothesis_error = "|d_x f| > kappa";
                break;
            }
        }
    double shift = (b - a) * kappa / (2.0 * m * mu);
    std::vector<Rect> rects;
    for (int k = 1; k <= m; ++k) {
        double xl = a + (k - 1) * (b - a) / m, xr = a + k * (b - a) / m;
        double xk = a + (2.0 * k - 1) * (b - a) / (2.0 * m);
        auto g_plus = [&](double y) { return f(xk, y) - rho; };
        auto g_minus = [&](double y) { return f(xk, y) + rho; };
        double yp, ym;
        if (g_plus(d) < 0) yp = d;
        else if (g_plus(c) >= 0) yp = c;
        else yp = bisect_root(g_plus, c, d);
        if (g_minus(c) > 0) ym = c;
        else if (g_minus(d) <= 0) ym = d;
        else ym = bisect_root(g_minus, c, d);
        double y1 = std::min(yp + shift, d);
        double y2 = std::max(ym - shift, c);
        rects.push_back({xl, xr, y1, d});
        rects.push_back({xl, xr, c, y2});
    }
    r.D0 = SimpleSet2D::from_rects(rects);
    r.uncovered = (b - a) * (d - c) - r.D0.measure();
    r.bound = (b - a) * (2.0 * rho / mu + (b - a) * kappa / (m * mu));
    r.bound_as_printed = (b - a) * (2.0 * rho / mu + kappa / (m * mu));
    CounterRng rng(seed, 0xe1);
    for (long s = 0; s < samples;) {
        double x = rng.uniform(a, b), y = rng.uniform(c, d);
        if (!r.D0.contains(x, y)) continue;
        ++s;
        if (std::fabs(f(x, y)) < rho * (1 - 1e-12)) ++r.sample_violations;
    }
    r.samples = samples;
    r.pass = r.hypotheses_ok && r.sample_violations == 0 && r.uncovered <= r.bound * (1 + 1e-12) + 1e-15;
    return r;
}

InverseBranchReport inverse_branch_check(const Fn2& F, const Fn2& Fx, const Fn2& Fy, Rect D, double eps,
                                         double mu, double rho, long samples, std::uint64_t seed) {
    InverseBranchReport r;
    CounterRng rng(seed, 0xe4);
    const int grid = 512;
    double scale = 2.0 * eps / (mu * rho);
    auto roots = [&](double y0, double t) {
        std::vector<double> out;
        auto g = [&](double x) { return F(x, y0) - t; };
        double prev_x = D.x_lo, prev_g = g(prev_x);
        for (int i = 1; i <= grid; ++i) {
            double x = D.x_lo + (D.x_hi - D.x_lo) * i / grid;
            double gx = g(x);
            if ((gx > 0) != (prev_g > 0)) out.push_back(bisect_root(g, prev_x, x));
            prev_x = x;
            prev_g = gx;
        }
        return out;
    };
    for (long s = 0; s < samples; ++s) {
        double y0 = rng.uniform(D.y_lo + 2 * eps / mu, D.y_hi - 2 * eps / mu);
        double t1 = rng.uniform(-eps, eps), t2 = rng.uniform(-eps, eps);
        auto r1 = roots(y0, t1), r2 = roots(y0, t2);
        if (r1.size() != r2.size()) continue;
        for (std::size_t k = 0; k < r1.size(); ++k) {
            // Only branches on which |d_x y| = |F_x / F_y| > rho between the two solutions.
            bool steep = true;
            for (int q = 0; q <= 8; ++q) {
                double x = r1[k] + (r2[k] - r1[k]) * q / 8.0;
                if (std::fabs(Fx(x, y0) / Fy(x, y0)) <= rho) steep = false;
            }
            if (!steep) continue;
            ++r.pairs_checked;
            r.max_ratio = std::max(r.max_ratio, std::fabs(r1[k] - r2[k]) / scale);
        }
    }
    r.pass = r.max_ratio <= 1.0 + 1e-9;
    return r;
}

SimpleSet1D sublevel_set(const Fn1& f, double a, double b, double eps, int grid) {
    if (!(eps > 0)) return {};
    std::vector<double> breaks{a, b};
    auto gp = [&](double x) { return f(x) - eps; };
    auto gm = [&](double x) { return f(x) + eps; };
    double xp = a, fp = f(a);
    for (int i = 1; i <= grid; ++i) {
        double x = a + (b - a) * i / grid;
        double fx = f(x);
        if ((fx - eps > 0) != (fp - eps > 0)) breaks.push_back(bisect_root(gp, xp, x));
        if ((fx + eps > 0) != (fp + eps > 0)) breaks.push_back(bisect_root(gm, xp, x));
        xp = x;
        fp = fx;
    }
    std::sort(breaks.begin(), breaks.end());
    std::vector<std::pair<double, double>> iv;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        double lo = breaks[i], hi = breaks[i + 1];
        if (!(lo < hi)) continue;
        if (std::fabs(f(0.5 * (lo + hi))) <= eps) iv.push_back({lo, hi});
    }
    return SimpleSet1D(std::move(iv));
}

SublevelReport sublevel_measure_check(const Fn1& f, const Fn1& f1, const Fn1& f2, const Fn1& f3, double a,
                                      double b, double eps, double C, double kappa, double constant, int grid) {
    SublevelReport r;
    r.constant = constant;
    r.measured = sublevel_set(f, a, b, eps, grid).measure();
    double min_f2 = std::numeric_limits<double>::infinity();
    double min_morse = std::numeric_limits<double>::infinity();
    double max_upper = 0.0;
    int sign_changes = 0;
    double prev_d1 = f1(a);
    for (int i = 0; i <= grid; ++i) {
        double x = a + (b - a) * i / grid;
        double d1 = f1(x), d2 = f2(x), d3 = f3(x);
        min_f2 = std::min(min_f2, std::fabs(d2));
        min_morse = std::min(min_morse, std::fabs(d1) + std::fabs(d2));
        max_upper = std::max(max_upper, std::fabs(d2) + std::fabs(d3));
        if (i > 0 && (d1 > 0) != (prev_d1 > 0) && d1 != 0.0) ++sign_changes;
        if (d1 != 0.0) prev_d1 = d1;
    }
    r.monotone_pieces = sign_changes + 1;
    r.e2_hypothesis = min_f2 >= C;
    r.e2_bound = constant * std::sqrt(eps / C);
    r.e2_ok = !r.e2_hypothesis || r.measured <= r.e2_bound;
    r.e3_hypothesis = min_morse >= C && max_upper <= kappa;
    r.e3_bound = constant * (kappa / C) * std::sqrt(eps / C) * (b - a);
    r.e3_ok = !r.e3_hypothesis || r.measured <= r.e3_bound;
    r.pass = r.e2_ok && r.e3_ok;
    return r;
}

DoubleResonanceReport double_resonance_measure(const Fn2& F1, const Fn2& F2, long n1, double eps, Rect xw,
                                               long samples, std::uint64_t seed, double theta, int x_grid) {
    DoubleResonanceReport r;
    r.samples = samples;
    r.theta = theta;
    const std::size_t shards = 64;
    std::vector<long> hits(shards, 0);
    parallel_for(shards, [&](std::size_t sh) {
        CounterRng rng(seed, sh);
        long lo = samples * static_cast<long>(sh) / static_cast<long>(shards);
        long hi = samples * static_cast<long>(sh + 1) / static_cast<long>(shards);
        for (long s = lo; s < hi; ++s) {
            double w = rng.uniform(xw.y_lo, xw.y_hi);
            if (!(eps > 0)) continue;
            auto set = sublevel_set([&](double x) { return F1(x, w); }, xw.x_lo, xw.x_hi, eps, x_grid);
            bool hit = false;
            for (const auto& [a, b] : set.intervals()) {
                auto g = [&](double x) { return F2(x + n1 * w, w); };
                double prev = g(a);
                if (std::fabs(prev) <= eps) hit = true;
                for (int q = 1; q <= 8 && !hit; ++q) {
                    double gx = g(a + (b - a) * q / 8.0);
                    if (std::fabs(gx) <= eps || (gx > 0) != (prev > 0)) hit = true;
                    prev = gx;
                }
                if (hit) break;
            }
            if (hit) ++hits[sh];
        }
    });
    for (long h : hits) r.hits += h;
    double p = samples ? static_cast<double>(r.hits) / samples : 0.0;
    double width = xw.y_hi - xw.y_lo;
    r.estimate = p * width;
    r.sigma = samples ? width * std::sqrt(p * (1 - p) / samples) : 0.0;
    r.reference = std::pow(eps, theta) * width * (xw.x_hi - xw.x_lo);
    r.ratio = r.reference > 0 ? r.estimate / r.reference : 0.0;
    return r;
}

double empirical_exponent(double eps1, double est1, double eps2, double est2) {
    if (!(est1 > 0 && est2 > 0)) return std::numeric_limits<double>::quiet_NaN();
    return std::log(est2 / est1) / std::log(eps2 / eps1);
}

SlabReport hyperplane_slab_check(const std::vector<double>& a, double C, double delta, double eps, long samples,
                                 std::uint64_t seed) {
    double sum = 0.0;
    for (double v : a) {
        if (v < 0) throw std::invalid_argument("hyperplane_slab_check: weights must be >= 0");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-12) throw std::invalid_argument("hyperplane_slab_check: weights must sum to 1");
    SlabReport r;
    r.samples = samples;
    const std::size_t shards = 64;
    std::vector<long> hits(shards, 0);
    parallel_for(shards, [&](std::size_t sh) {
        CounterRng rng(seed, sh);
        long lo = samples * static_cast<long>(sh) / static_cast<long>(shards);
        long hi = samples * static_cast<long>(sh + 1) / static_cast<long>(shards);
        for (long s = lo; s < hi; ++s) {
            double dotv = 0.0;
            for (double w : a) dotv += w * rng.uniform(-delta, delta);
            if (std::fabs(dotv - C) <= eps) ++hits[sh];
        }
    });
    for (long h : hits) r.hits += h;
    r.fraction = samples ? static_cast<double>(r.hits) / samples : 0.0;
    r.sigma = samples ? std::sqrt(r.fraction * (1 - r.fraction) / samples) : 0.0;
    r.bound = static_cast<double>(a.size()) * eps / delta;
    r.pass = r.fraction <= r.bound + 3 * r.sigma;
    return r;
}

}  // namespace qps
