#include "qps/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "qps/rng.hpp"

namespace qps {

double wrap01(double v) {
    double r = v - std::floor(v);
    if (r >= 1.0) r = 0.0;
    return r;
}

double wrap_centered(double v) {
    double r = wrap01(v + 0.5) - 0.5;
    return r;
}

double PotentialSpec::derivative(int order, double x) const {
    switch (order) {
        case 0: return (*this)(x);
        case 1: return d1(x);
        case 2: return d2(x);
        case 3: return d3(x);
        default: throw std::invalid_argument("derivative order must be 0..3");
    }
}

PotentialMeta estimate_metadata(const PotentialSpec& v, int grid) {
    PotentialMeta m;
    std::vector<double> d1(grid), d2(grid);
    m.v_min = std::numeric_limits<double>::infinity();
    m.v_max = -std::numeric_limits<double>::infinity();
    double min_sum = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid; ++i) {
        double x = static_cast<double>(i) / grid;
        double val = v(x);
        d1[i] = v.d1(x);
        d2[i] = v.d2(x);
        m.v_min = std::min(m.v_min, val);
        m.v_max = std::max(m.v_max, val);
        m.max_abs = std::max(m.max_abs, std::fabs(val));
        m.max_d1 = std::max(m.max_d1, std::fabs(d1[i]));
        double s = std::fabs(d1[i]) + std::fabs(d2[i]);
        m.bound_C1 = std::max(m.bound_C1, s);
        min_sum = std::min(min_sum, s);
    }
    m.morse_c = 0.5 * min_sum;

    // Sign changes of V' around the circle; zero-slope samples carry the previous sign.
    const double flat = 1e-12 * std::max(1.0, m.max_d1);
    int changes = 0;
    int first_sign = 0, prev = 0;
    for (int i = 0; i < grid; ++i) {
        int s = d1[i] > flat ? 1 : (d1[i] < -flat ? -1 : 0);
        if (s == 0) continue;
        if (first_sign == 0) first_sign = s;
        if (prev != 0 && s != prev) ++changes;
        prev = s;
    }
    if (prev != 0 && first_sign != 0 && prev != first_sign) ++changes;
    m.m0 = std::max(1, changes);

    double c0 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid; ++i) {
        if (std::fabs(d2[i]) < m.morse_c) c0 = std::min(c0, std::fabs(d1[i]));
    }
    m.bound_C0 = std::isfinite(c0) ? c0 : 0.0;
    if (m.morse_c > 0 && !std::isfinite(c0)) {
        // Every point is near-critical in the |V''| sense; fall back to the global minimum slope.
        double mn = std::numeric_limits<double>::infinity();
        for (double d : d1) mn = std::min(mn, std::fabs(d));
        m.bound_C0 = mn;
    }
    return m;
}

PotentialSpec make_cos_poly(const std::vector<double>& coeffs_in, const std::string& name) {
    std::vector<double> c = coeffs_in;
    if (c.empty()) c.push_back(0.0);
    auto poly = [c](double u, int order) {
        // Horner on the order-th derivative of sum c_k u^k.
        double acc = 0.0;
        for (int k = static_cast<int>(c.size()) - 1; k >= order; --k) {
            double fall = 1.0;
            for (int r = 0; r < order; ++r) fall *= (k - r);
            acc = acc * u + c[k] * fall;
        }
        return acc;
    };
    const double tp = 2.0 * M_PI;
    PotentialSpec v;
    v.name = name;
    v.eval = [poly, tp](double x) { return poly(std::cos(tp * x), 0); };
    v.deriv1 = [poly, tp](double x) {
        double u1 = -tp * std::sin(tp * x);
        return poly(std::cos(tp * x), 1) * u1;
    };
    v.deriv2 = [poly, tp](double x) {
        double u = std::cos(tp * x);
        double u1 = -tp * std::sin(tp * x);
        double u2 = -tp * tp * u;
        return poly(u, 2) * u1 * u1 + poly(u, 1) * u2;
    };
    v.deriv3 = [poly, tp](double x) {
        double u = std::cos(tp * x);
        double s = std::sin(tp * x);
        double u1 = -tp * s;
        double u2 = -tp * tp * u;
        double u3 = tp * tp * tp * s;
        return poly(u, 3) * u1 * u1 * u1 + 3.0 * poly(u, 2) * u1 * u2 + poly(u, 1) * u3;
    };
    v.meta = estimate_metadata(v);
    return v;
}

PotentialSpec preset_cos() { return make_cos_poly({0.0, 2.0}, "cos"); }

// cos 2 pi x + 1/2 cos 4 pi x = -1/2 + u + u^2 with u = cos 2 pi x.
PotentialSpec preset_two_wave() { return make_cos_poly({-0.5, 1.0, 1.0}, "two-wave"); }

PotentialSpec preset_zero() { return make_cos_poly({0.0}, "zero"); }

PotentialSpec preset_constant(double c) { return make_cos_poly({c}, "constant"); }

PotentialSpec preset_by_name(const std::string& name, const std::vector<double>& coeffs) {
    if (name == "cos") return preset_cos();
    if (name == "two-wave") return preset_two_wave();
    if (name == "zero") return preset_zero();
    if (name == "cos-poly") {
        if (coeffs.empty()) throw std::invalid_argument("cos-poly potential needs coefficients");
        return make_cos_poly(coeffs, "cos-poly");
    }
    throw std::invalid_argument("unknown potential preset: " + name);
}

DerivativeCheck check_derivatives(const PotentialSpec& v, int grid, double tol) {
    DerivativeCheck out;
    const double h = 1e-5;
    double scale[3] = {0, 0, 0};
    for (int i = 0; i < grid; ++i) {
        double x = static_cast<double>(i) / grid;
        scale[0] = std::max(scale[0], std::fabs(v.d1(x)));
        scale[1] = std::max(scale[1], std::fabs(v.d2(x)));
        scale[2] = std::max(scale[2], std::fabs(v.d3(x)));
    }
    for (int i = 0; i < grid; ++i) {
        double x = static_cast<double>(i) / grid;
        double fd1 = (v(x + h) - v(x - h)) / (2 * h);
        double fd2 = (v.d1(x + h) - v.d1(x - h)) / (2 * h);
        double fd3 = (v.d2(x + h) - v.d2(x - h)) / (2 * h);
        double e[3] = {std::fabs(fd1 - v.d1(x)), std::fabs(fd2 - v.d2(x)), std::fabs(fd3 - v.d3(x))};
        for (int k = 0; k < 3; ++k) {
            double rel = e[k] / std::max(scale[k], 1e-300);
            if (scale[k] == 0.0) rel = e[k];
            out.max_rel_err[k] = std::max(out.max_rel_err[k], rel);
        }
    }
    out.ok = out.max_rel_err[0] <= tol && out.max_rel_err[1] <= tol && out.max_rel_err[2] <= tol;
    return out;
}

bool morse_condition_holds(const PotentialSpec& v, int grid) {
    if (v.meta.morse_c <= 0) return false;
    for (int i = 0; i < grid; ++i) {
        double x = static_cast<double>(i) / grid;
        if (std::fabs(v.d1(x)) + std::fabs(v.d2(x)) < 2.0 * v.meta.morse_c * (1 - 1e-12)) return false;
    }
    return true;
}

double hermite_step(double t, int order) {
    if (t <= 0.0 || t >= 1.0) {
        if (order == 0) return t <= 0.0 ? 0.0 : 1.0;
        return 0.0;
    }
    double t2 = t * t, t3 = t2 * t;
    switch (order) {
        case 0: return t3 * t * (35.0 - 84.0 * t + 70.0 * t2 - 20.0 * t3);
        case 1: return t3 * (140.0 - 420.0 * t + 420.0 * t2 - 140.0 * t3);
        case 2: return t2 * (420.0 - 1680.0 * t + 2100.0 * t2 - 840.0 * t3);
        case 3: return t * (840.0 - 5040.0 * t + 8400.0 * t2 - 4200.0 * t3);
        default: throw std::invalid_argument("hermite_step order must be 0..3");
    }
}

double CutoffFunction::operator()(double x, int order) const {
    double r = std::fabs(x);
    if (r <= inner) return order == 0 ? 1.0 : 0.0;
    if (r >= outer) return 0.0;
    double w = outer - inner;
    double t = (r - inner) / w;
    double sgn = x < 0 ? -1.0 : 1.0;
    double d = -hermite_step(t, order) / std::pow(w, order);
    if (order == 0) return 1.0 - hermite_step(t, 0);
    // chi is even; odd derivatives flip sign with x.
    return (order % 2 == 1) ? sgn * d : d;
}

VariationSpec::VariationSpec(int T_, double delta_, std::vector<double> eta_, std::vector<double> xi_,
                             std::vector<double> theta_)
    : T(T_), delta(delta_), eta(std::move(eta_)), xi(std::move(xi_)), theta(std::move(theta_)) {
    if (T < 1) throw std::invalid_argument("variation: T must be positive");
    if (!(delta > 0.0)) throw std::invalid_argument("variation: delta must be positive");
    if (delta > std::pow(static_cast<double>(T), -5.0) * (1 + 1e-12))
        throw std::invalid_argument("variation: delta exceeds T^-5");
    auto check = [&](const std::vector<double>& p, const char* what) {
        if (static_cast<int>(p.size()) != T)
            throw std::invalid_argument(std::string("variation: ") + what + " must have length T");
        for (double v : p)
            if (std::fabs(v) > delta) throw std::invalid_argument(std::string("variation: |") + what + "| exceeds delta");
    };
    check(eta, "eta");
    check(xi, "xi");
    check(theta, "theta");
    cutoff = CutoffFunction::for_period(T);
}

VariationSpec VariationSpec::zero(int T, double delta) {
    std::vector<double> z(T, 0.0);
    return VariationSpec(T, delta, z, z, z);
}

VariationSpec VariationSpec::random(int T, double delta, std::uint64_t seed) {
    CounterRng rng(seed, 0x7661726961ULL);
    std::vector<double> e(T), x(T), t(T);
    for (int m = 0; m < T; ++m) {
        e[m] = rng.uniform(-delta, delta);
        x[m] = rng.uniform(-delta, delta);
        t[m] = rng.uniform(-delta, delta);
    }
    return VariationSpec(T, delta, e, x, t);
}

double VariationSpec::jet(int m, double y, int order) const {
    const double e = eta[m - 1], s = xi[m - 1], t = theta[m - 1];
    switch (order) {
        case 0: return e + s * y + 0.5 * t * y * y;
        case 1: return s + t * y;
        case 2: return t;
        default: return 0.0;
    }
}

double VariationSpec::bump(int m, double y, int order) const {
    if (std::fabs(y) >= cutoff.outer) return 0.0;
    // Leibniz rule for (p * chi)^(order).
    static const int binom[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
    double acc = 0.0;
    for (int k = 0; k <= order; ++k) acc += binom[order][k] * jet(m, y, k) * cutoff(y, order - k);
    return acc;
}

double eval_variation(const VariationSpec& spec, double x, int order) {
    // Supports have radius 1/(2T) around m/T, so only the nearest centre contributes.
    double xs = wrap01(x);
    int m = static_cast<int>(std::lround(xs * spec.T));
    double acc = 0.0;
    for (int dm = -1; dm <= 1; ++dm) {
        int mm = m + dm;
        int label = ((mm % spec.T) + spec.T) % spec.T;
        if (label == 0) label = spec.T;
        double y = wrap_centered(xs - static_cast<double>(label) / spec.T);
        acc += spec.bump(label, y, order);
    }
    return acc;
}

double implied_R(const VariationSpec& spec, int m, double x) {
    if (x == 0.0) throw std::invalid_argument("implied_R: x must be nonzero");
    if (m < 1 || m > spec.T) throw std::invalid_argument("implied_R: bump index out of range");
    double p = spec.jet(m, x, 0);
    return p * (spec.cutoff(x, 0) - 1.0) / (x * x * x);
}

VariationBoundReport verify_variation_derivative_bounds(const VariationSpec& spec, int grid_n, double constant) {
    if (grid_n < 1000) throw std::invalid_argument("verify_variation_derivative_bounds: grid_n must be >= 1000");
    VariationBoundReport rep;
    rep.T = spec.T;
    rep.delta = spec.delta;
    rep.grid_n = grid_n;
    rep.constant = constant;
    rep.threshold = constant / spec.T;
    const double h = std::min(1.0 / (8.0 * grid_n), 1e-2 / (4.0 * spec.T));
    for (int m = 1; m <= spec.T; ++m) {
        auto R = [&](double x) { return implied_R(spec, m, x); };
        for (int i = 0; i < grid_n; ++i) {
            double x = -0.5 + (i + 0.5) / grid_n;
            if (std::fabs(x) < 3 * h) continue;
            double f0 = R(x), fp = R(x + h), fm = R(x - h), fpp = R(x + 2 * h), fmm = R(x - 2 * h);
            double d[4] = {f0, (fp - fm) / (2 * h), (fp - 2 * f0 + fm) / (h * h),
                           (fpp - 2 * fp + 2 * fm - fmm) / (2 * h * h * h)};
            for (int k = 0; k < 4; ++k) {
                double a = std::fabs(d[k]);
                if (a > rep.max_abs_R[k]) rep.max_abs_R[k] = a;
                if (a > rep.max_over_orders) {
                    rep.max_over_orders = a;
                    rep.worst_order = k;
                    rep.worst_x = x;
                }
                rep.max_abs_v[k] = std::max(rep.max_abs_v[k], std::fabs(spec.bump(m, x, k)));
            }
        }
    }
    rep.ratio_to_inv_T = rep.max_over_orders * spec.T;
    rep.pass = rep.max_over_orders <= rep.threshold;
    return rep;
}

PotentialSpec perturbed_potential(const PotentialSpec& base, const std::vector<VariationSpec>& variations) {
    if (variations.empty()) return base;
    PotentialSpec out;
    out.name = base.name + "+variation";
    auto vars = std::make_shared<std::vector<VariationSpec>>(variations);
    auto make = [base, vars](int order) -> ScalarFn {
        return [base, vars, order](double x) {
            double acc = base.derivative(order, x);
            for (const auto& v : *vars) acc += eval_variation(v, x, order);
            return acc;
        };
    };
    out.eval = make(0);
    out.deriv1 = make(1);
    out.deriv2 = make(2);
    out.deriv3 = make(3);
    out.meta = estimate_metadata(out);
    if (!(out.meta.morse_c > 0.0)) throw std::runtime_error("perturbed potential violates the Morse condition");
    return out;
}

}  // namespace qps
