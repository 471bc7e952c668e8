#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace qps {

// Finite union of disjoint, sorted open intervals (lo, hi) with lo < hi.
class SimpleSet1D {
public:
    SimpleSet1D() = default;
    explicit SimpleSet1D(std::vector<std::pair<double, double>> intervals);
    static SimpleSet1D interval(double lo, double hi);

    const std::vector<std::pair<double, double>>& intervals() const { return iv_; }
    double measure() const;
    std::size_t complexity() const { return iv_.size(); }
    bool empty() const { return iv_.empty(); }
    bool contains(double x) const;  // closed-interval membership

    SimpleSet1D unite(const SimpleSet1D& o) const;
    SimpleSet1D intersect(const SimpleSet1D& o) const;
    SimpleSet1D subtract(const SimpleSet1D& o) const;
    bool operator==(const SimpleSet1D& o) const { return iv_ == o.iv_; }

private:
    std::vector<std::pair<double, double>> iv_;
};

struct Rect {
    double x_lo, x_hi, y_lo, y_hi;
};

// Finite union of axis rectangles stored in column form: disjoint x-slabs, each carrying
// a SimpleSet1D in y. Adjacent slabs with equal y-sets are merged.
class SimpleSet2D {
public:
    struct Slab {
        double x_lo, x_hi;
        SimpleSet1D ys;
    };

    SimpleSet2D() = default;
    static SimpleSet2D from_rects(const std::vector<Rect>& rects);
    static SimpleSet2D from_slabs(std::vector<Slab> slabs);  // slabs may overlap; unioned

    const std::vector<Slab>& slabs() const { return slabs_; }
    double measure() const;
    std::size_t complexity() const;  // number of rectangles
    bool empty() const { return slabs_.empty(); }
    bool contains(double x, double y) const;
    std::vector<Rect> rects() const;

    SimpleSet2D unite(const SimpleSet2D& o) const;
    SimpleSet2D intersect(const SimpleSet2D& o) const;
    SimpleSet2D subtract(const SimpleSet2D& o) const;
    SimpleSet1D project_x() const;
    SimpleSet1D project_y() const;
    // Slice at fixed x (empty if x is in no slab).
    SimpleSet1D slice_x(double x) const;

private:
    std::vector<Slab> slabs_;
    template <class Op>
    SimpleSet2D combine(const SimpleSet2D& o, Op op) const;
    void merge_adjacent();
};

// Column decomposition of a hyperplane slab.
struct ImplicitSlabReport {
    SimpleSet2D D0;
    double uncovered = 0.0;      // |D \ D0|
    double bound = 0.0;          // (b-a)(2 rho / mu + (b-a) kappa / (m mu))
    double bound_as_printed = 0.0;  // (b-a)(2 rho / mu + kappa / (m mu))
    bool hypotheses_ok = true;   // d_y f >= mu, |d_x f| <= kappa on the sampling grid
    std::string hypothesis_error;
    long sample_violations = 0;  // points of D0 with |f| < rho
    long samples = 0;
    bool pass = true;
};
using Fn2 = std::function<double(double, double)>;
ImplicitSlabReport implicit_slab(const Fn2& f, Rect D, double mu, double kappa, double rho, int m,
                                 int check_grid = 64, long samples = 10000, std::uint64_t seed = 7);

// Inverse-branch Lipschitz check: for y0 fixed and s, t in [-eps, eps], the x-solutions of
// F(x, y0) = s and F(x, y0) = t on a branch where |d_x y| > rho differ by <= 2 eps / (mu rho).
struct InverseBranchReport {
    long pairs_checked = 0;
    double max_ratio = 0.0;  // |phi(s) - phi(t)| / (2 eps / (mu rho))
    bool pass = true;
};
InverseBranchReport inverse_branch_check(const Fn2& F, const Fn2& Fx, const Fn2& Fy, Rect D, double eps,
                                         double mu, double rho, long samples, std::uint64_t seed);

using Fn1 = std::function<double(double)>;

// Closed form of {x in [a,b] : |f(x)| <= eps} found by bisecting the crossings of f = +-eps.
SimpleSet1D sublevel_set(const Fn1& f, double a, double b, double eps, int grid = 4096);

struct SublevelReport {
    double measured = 0.0;
    double constant = 8.0;
    // Convexity form: |f''| >= C.
    bool e2_hypothesis = false;
    int monotone_pieces = 0;
    double e2_bound = 0.0;  // constant * sqrt(eps / C)
    bool e2_ok = true;
    // Morse form: |f'| + |f''| >= C, |f''| + |f'''| <= kappa.
    bool e3_hypothesis = false;
    double e3_bound = 0.0;  // constant * (kappa / C) sqrt(eps / C) (b - a)
    bool e3_ok = true;
    bool pass = true;
};
SublevelReport sublevel_measure_check(const Fn1& f, const Fn1& f1, const Fn1& f2, const Fn1& f3, double a,
                                      double b, double eps, double C, double kappa, double constant = 8.0,
                                      int grid = 4096);

struct DoubleResonanceReport {
    long samples = 0;
    long hits = 0;
    double estimate = 0.0;  // mes of the omega-set
    double sigma = 0.0;     // binomial standard error of the estimate
    double theta = 0.5;
    double reference = 0.0;  // eps^theta (d - c)(b1 - a1)
    double ratio = 0.0;
};
DoubleResonanceReport double_resonance_measure(const Fn2& F1, const Fn2& F2, long n1, double eps, Rect xw,
                                               long samples, std::uint64_t seed, double theta = 0.5,
                                               int x_grid = 1024);
// Two-point exponent fit: log(est2/est1) / log(eps2/eps1).
double empirical_exponent(double eps1, double est1, double eps2, double est2);

struct SlabReport {
    long samples = 0;
    long hits = 0;
    double fraction = 0.0;
    double sigma = 0.0;
    double bound = 0.0;  // N eps / delta
    bool pass = true;
};
SlabReport hyperplane_slab_check(const std::vector<double>& a, double C, double delta, double eps, long samples,
                                 std::uint64_t seed);

}  // namespace qps
