#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qps {

// Reduce to [0,1).
double wrap01(double v);
// Representative of v mod 1 in [-1/2, 1/2).
double wrap_centered(double v);

struct TorusPoint {
    double value = 0.0;
    TorusPoint() = default;
    explicit TorusPoint(double v) : value(wrap01(v)) {}
    TorusPoint operator+(TorusPoint o) const { return TorusPoint(value + o.value); }
    TorusPoint operator-(TorusPoint o) const { return TorusPoint(value - o.value); }
    TorusPoint shifted(double d) const { return TorusPoint(value + d); }
};

using ScalarFn = std::function<double(double)>;

// Regularity data of a sampling function, estimated on a grid.
struct PotentialMeta {
    int m0 = 1;              // number of monotonicity intervals
    double morse_c = 0.0;    // |V'| + |V''| >= 2 c
    double bound_C0 = 0.0;   // min |V'| away from critical neighbourhoods (|V''| < c)
    double bound_C1 = 0.0;   // max |V'| + |V''|
    double max_abs = 0.0;    // max |V|
    double max_d1 = 0.0;     // max |V'|
    double v_min = 0.0;
    double v_max = 0.0;
};

struct PotentialSpec {
    std::string name;
    ScalarFn eval, deriv1, deriv2, deriv3;
    PotentialMeta meta;

    double operator()(double x) const { return eval(wrap01(x)); }
    double d1(double x) const { return deriv1(wrap01(x)); }
    double d2(double x) const { return deriv2(wrap01(x)); }
    double d3(double x) const { return deriv3(wrap01(x)); }
    double derivative(int order, double x) const;
};

PotentialMeta estimate_metadata(const PotentialSpec& v, int grid = 4096);

// V(x) = sum_k coeffs[k] * cos(2 pi x)^k with exact derivatives.
PotentialSpec make_cos_poly(const std::vector<double>& coeffs, const std::string& name = "cos-poly");
PotentialSpec preset_cos();       // 2 cos 2 pi x
PotentialSpec preset_two_wave();  // cos 2 pi x + 1/2 cos 4 pi x
PotentialSpec preset_zero();      // V = 0
PotentialSpec preset_constant(double c);
// Names: "cos", "two-wave", "zero", "cos-poly" (uses coeffs).
PotentialSpec preset_by_name(const std::string& name, const std::vector<double>& coeffs = {});

struct DerivativeCheck {
    double max_rel_err[3] = {0, 0, 0};  // V' vs FD(V), V'' vs FD(V'), V''' vs FD(V'')
    bool ok = true;
};
DerivativeCheck check_derivatives(const PotentialSpec& v, int grid = 1024, double tol = 1e-6);
bool morse_condition_holds(const PotentialSpec& v, int grid = 4096);

// Degree-7 two-point Hermite cutoff: 1 on |x| <= inner, 0 on |x| >= outer, C^3 junctions.
struct CutoffFunction {
    double inner = 0.0;
    double outer = 0.0;
    static CutoffFunction for_period(int T) { return CutoffFunction{0.25 / T, 0.5 / T}; }
    double operator()(double x, int order = 0) const;
};

// Smoothstep S(t) = 35t^4 - 84t^5 + 70t^6 - 20t^7 and its derivatives.
double hermite_step(double t, int order);

struct VariationSpec {
    int T = 1;
    double delta = 0.0;
    std::vector<double> eta, xi, theta;  // index m-1 for bump m = 1..T
    CutoffFunction cutoff;

    // Throws std::invalid_argument unless delta <= T^-5 and all |params| <= delta.
    VariationSpec(int T, double delta, std::vector<double> eta, std::vector<double> xi,
                  std::vector<double> theta);
    static VariationSpec zero(int T, double delta);
    static VariationSpec random(int T, double delta, std::uint64_t seed);

    // Bump m (1..T) evaluated at local coordinate y (real, not wrapped).
    double bump(int m, double y, int order = 0) const;
    double jet(int m, double y, int order = 0) const;  // p_m(y) = eta + xi y + theta y^2 / 2
};

double eval_variation(const VariationSpec& spec, double x, int order = 0);

// (v_m(x) - p_m(x)) / x^3 in the local coordinate x != 0. Throws on x == 0.
double implied_R(const VariationSpec& spec, int m, double x);

struct VariationBoundReport {
    int T = 0;
    double delta = 0.0;
    int grid_n = 0;
    std::array<double, 4> max_abs_R{};  // orders 0..3 of d^k R_m / dx^k, max over m and grid
    std::array<double, 4> max_abs_v{};  // same for the bumps v_m (informational)
    double max_over_orders = 0.0;
    double ratio_to_inv_T = 0.0;  // max_over_orders / (1/T)
    double constant = 64.0;
    double threshold = 0.0;       // constant / T
    int worst_order = 0;
    double worst_x = 0.0;
    bool pass = true;
};
VariationBoundReport verify_variation_derivative_bounds(const VariationSpec& spec, int grid_n,
                                                        double constant = 64.0);

// Base potential plus a finite list of variations; metadata re-estimated.
// Throws std::runtime_error if the Morse constant collapses to <= 0.
PotentialSpec perturbed_potential(const PotentialSpec& base, const std::vector<VariationSpec>& variations);

}  // namespace qps
