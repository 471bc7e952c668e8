#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qps/operator.hpp"
#include "qps/potential.hpp"

namespace qps {

// Row-major 2x2 matrix [[a, b], [c, d]].
struct Mat2 {
    double a = 1, b = 0, c = 0, d = 1;
    Mat2 operator*(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    double det() const { return a * d - b * c; }
    double max_abs() const;
};

double spectral_norm(const Mat2& m);
Mat2 projector_first();  // [[1, 0], [0, 0]]

// Matrix = exp(log_scale) * m, with max |entry of m| = 1 (or m = 0).
struct ScaledMat2 {
    Mat2 m;
    double log_scale = 0.0;

    static ScaledMat2 from(const Mat2& raw);
    ScaledMat2 operator*(const ScaledMat2& o) const;
    double log_norm() const;  // log of the spectral norm
    double log_abs_det() const;
    // Entry (i,j) as a SignedLog.
    SignedLog entry(int i, int j) const;
    void renormalize();
};

// One-step factor [[v - E, -1], [1, 0]].
inline Mat2 one_step(double v, double E) { return {v - E, -1.0, 1.0, 0.0}; }

// M_[a,b] = A_b ... A_a, renormalized after each factor.
ScaledMat2 monodromy(IndexInterval iv, double x, double omega, double lambda, const PotentialSpec& v, double E);
ScaledMat2 monodromy(const HamiltonianBlock& h, double E);

struct LyapunovEstimate {
    double value = 0.0;
    long n = 0;
    int x_samples = 0;
    double std_error = 0.0;
};

// (1/n) log ||M_[1,n](x)|| averaged over x_k = (k + phase) / x_grid, phase drawn from seed.
LyapunovEstimate lyapunov_estimate(double omega, double E, double lambda, const PotentialSpec& v, long n,
                                   int x_grid, std::uint64_t seed = 1);

class HypothesisError : public std::runtime_error {
public:
    HypothesisError(std::string which, long index, const std::string& what)
        : std::runtime_error(what), which_(std::move(which)), index_(index) {}
    const std::string& which() const { return which_; }
    long index() const { return index_; }

private:
    std::string which_;
    long index_;
};

struct AvalancheReport {
    long n = 0;
    double mu = 0.0;
    double min_log_norm = 0.0;
    double max_log_det = 0.0;
    double max_pair_defect = 0.0;  // max_j log||A_{j+1}|| + log||A_j|| - log||A_{j+1} A_j||
    double lhs = 0.0;
    double n_over_mu = 0.0;
    double fp_floor = 0.0;  // rounding floor of the log sums
    double ratio = 0.0;     // lhs / (n/mu + fp_floor)
    double constant = 10.0;
    bool pass = true;
};

// Checks all three hypotheses (throws HypothesisError naming the first failure), then
// evaluates |log||A_n...A_1|| + sum_{2}^{n-1} log||A_j|| - sum_{1}^{n-1} log||A_{j+1}A_j|||.
AvalancheReport avalanche_verify(const std::vector<Mat2>& mats, double mu, double constant = 10.0);
AvalancheReport avalanche_verify(const std::vector<ScaledMat2>& mats, double mu, double constant = 10.0);

struct AvalancheDetReport {
    AvalancheReport ap;
    double log_f = 0.0;        // log|f_[a_0, a_K]| from the recursion
    double factorized = 0.0;   // sum log||A_l A_{l-1}|| - sum log||A_l||
    double residual = 0.0;
};

// Cut points a_0 < a_1 < ... < a_K: A_1 = M_[a_0,a_1] P, A_l = M_(a_{l-1},a_l], A_K = P M_(a_{K-1},a_K].
AvalancheDetReport avalanche_det(double x, double omega, double lambda, const PotentialSpec& v, double E,
                                 const std::vector<long>& cuts, double constant = 10.0);

struct SplitReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double kappa = 0.0;
    double lambda_C0 = 0.0;
    bool applicable = true;  // |E| <= lambda C0
    bool pass = true;
};
// log||M_[a,b]|| + log||M_[b+1,c]|| - log||M_[a,c]|| <= 20 (log(lambda C0) - log kappa),
// with lambda C0 = lambda max |v| on [a,c] and kappa = dist(sp H_[a,c], E).
SplitReport split_norm_check(const HamiltonianBlock& h, long b_split, double E);

}  // namespace qps
