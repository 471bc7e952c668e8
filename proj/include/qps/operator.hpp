#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qps/potential.hpp"
#include "qps/signed_log.hpp"

namespace qps {

struct IndexInterval {
    long a = 0;
    long b = 0;
    IndexInterval() = default;
    IndexInterval(long a_, long b_);  // throws unless a <= b
    long length() const { return b - a + 1; }
};

// Symmetric tridiagonal matrix: diag[0..n-1], off[0..n-2].
struct Tridiag {
    std::vector<double> diag;
    std::vector<double> off;
    std::size_t size() const { return diag.size(); }
    Eigen::MatrixXd dense() const;
    std::vector<double> apply(const std::vector<double>& v) const;
};

// H_[a,b](x, omega) at coupling lambda: diagonal lambda V(x + n omega), off-diagonal -1.
struct HamiltonianBlock {
    IndexInterval interval;
    double x = 0.0;
    double omega = 0.0;
    double lambda = 1.0;
    const PotentialSpec* potential = nullptr;

    HamiltonianBlock(IndexInterval iv, double x, double omega, double lambda, const PotentialSpec& v);
    double site(long n) const;            // lambda V(x + n omega)
    double site_derivative(long n, int order) const;  // lambda V^(order)(x + n omega)
    Tridiag matrix() const;
    long a() const { return interval.a; }
    long b() const { return interval.b; }
    long size() const { return interval.length(); }
};

// det(T - E) by the three-term recursion, carried with a shared log scale.
SignedLog det_f(const Tridiag& t, double E);
SignedLog det_f(const HamiltonianBlock& h, double E);
// f_[a, a-1+k](E) for k = 0..n (k = 0 is the empty determinant 1).
std::vector<SignedLog> dirichlet_prefix(const Tridiag& t, double E);
// f_[a+k, b](E) for k = 0..n (k = n is the empty determinant 1).
std::vector<SignedLog> dirichlet_suffix(const Tridiag& t, double E);

// Number of eigenvalues strictly below E.
long sturm_count(const Tridiag& t, double E);
long sturm_count(const HamiltonianBlock& h, double E);

struct SpectrumResult {
    std::vector<double> eigenvalues;                // increasing
    std::vector<std::vector<double>> eigenvectors;  // unit vectors, largest entry positive
    std::vector<double> residuals;                  // ||T v - E v||
    std::vector<int> iterations;
    std::vector<std::size_t> indices;               // position of each eigenvalue in the full spectrum
    bool all_converged = true;
    std::vector<std::string> errors;
};

// Gershgorin enclosure [lo, hi].
std::pair<double, double> gershgorin(const Tridiag& t);
// k-th eigenvalue (0-based), bisected to floating-point resolution.
double eigenvalue_k(const Tridiag& t, std::size_t k);
SpectrumResult spectrum(const Tridiag& t, bool want_vectors);
SpectrumResult spectrum(const HamiltonianBlock& h, bool want_vectors);
// Eigenvalues in [lo, hi) only.
SpectrumResult spectrum_window(const Tridiag& t, double lo, double hi, bool want_vectors);
// Inverse iteration at a computed eigenvalue; returns iterations used (negative if not converged).
int inverse_iteration(const Tridiag& t, double E, std::vector<double>& v,
                      const std::vector<std::vector<double>>& deflate = {});
double residual_norm(const Tridiag& t, double E, const std::vector<double>& v);
// Spectral norm of a symmetric tridiagonal matrix (max |eigenvalue|).
double tridiag_norm(const Tridiag& t);
// Solve (T - E) x = rhs by Gaussian elimination with partial pivoting.
std::vector<double> tridiag_solve(const Tridiag& t, double E, const std::vector<double>& rhs);

// (T - E)^{-1}(k, l) with local indices 0..n-1 as a quotient of Dirichlet determinants.
SignedLog green(const Tridiag& t, double E, std::size_t k, std::size_t l);
// Absolute site indices k, l in [a, b].
SignedLog green(const HamiltonianBlock& h, double E, long k, long l);
// phi(m) = G(m,a) phi(a-1) + G(m,b) phi(b+1).
double poisson_reconstruct(const HamiltonianBlock& h, double E, double phi_left, double phi_right, long m);

struct WeylReport {
    std::size_t n = 0;
    double norm_diff = 0.0;
    double max_gap = 0.0;
    double slack = 0.0;  // norm_diff - max_gap
    std::size_t violations = 0;
    bool pass = true;
};
WeylReport weyl_check(const Tridiag& A, const Tridiag& B);
WeylReport weyl_check(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

struct InterlaceReport {
    std::size_t n = 0;
    std::size_t violations = 0;
    double min_margin = 0.0;  // smallest of lambda_j - mu_j and mu_{j+1} - lambda_j
    bool pass = true;
};
// A = B + alpha <., y> y; asserts mu_1 <= lambda_1 <= mu_2 <= ... <= mu_n <= lambda_n.
InterlaceReport interlace_check(const Eigen::MatrixXd& B, const Eigen::VectorXd& y, double alpha);

struct DetWindow {
    double E_lo = 0.0;  // E'
    double E_hi = 0.0;  // E''
    double E1 = 0.0;
    double E2 = 0.0;
};
struct RankPertReport {
    long k = 0;
    bool rank_ok = true;
    // Determinant comparison under a rank-k change.
    double b3_lhs = 0.0, b3_rhs = 0.0;
    bool b3_applicable = true;  // requires ||B|| >= dist(sp A, 0) (see README)
    bool b3_pass = true;
    // Determinant comparison across an energy window.
    bool b5_checked = false;
    long b5_m = 0;
    double b5_lhs = 0.0, b5_rhs = 0.0;
    bool b5_pass = true;
    bool pass = true;
};
long numeric_rank(const Eigen::MatrixXd& M, double rel_tol = 1e-10);
RankPertReport rank_pert_det_check(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                   const std::optional<DetWindow>& window = std::nullopt);

struct EigDerivative {
    std::size_t k = 0;
    double E = 0.0;
    double dE_dx = 0.0;
    double dE_domega = 0.0;
    double d2E_dx2 = 0.0;
    double half_gap = 0.0;       // delta: half distance to the rest of the spectrum
    double norm_A1 = 0.0;        // ||dH/dx||
    double norm_A2 = 0.0;        // ||d2H/dx2||
    double bound_as_stated = 0.0;  // ||A''|| + ||A'||^2 / (2 delta)
    double bound_corrected = 0.0;  // ||A''|| + ||A'||^2 / delta
    bool as_stated_ok = true;
    bool corrected_ok = true;
    std::vector<double> phi;
};
// Throws std::runtime_error if the eigenvalue gap is below 1e-12.
EigDerivative eig_derivative(const HamiltonianBlock& h, std::size_t k);
// Same, for the eigenvalue of h closest to E_near.
EigDerivative eig_derivative_near(const HamiltonianBlock& h, double E_near);
// E'' = (A'' phi, phi) - 2 (g, (H - E)^{-1}_perp g), g = A' phi, via a deflated tridiagonal solve.
double second_derivative_from_resolvent(const Tridiag& t, double E, const std::vector<double>& phi,
                                        const std::vector<double>& a1, const std::vector<double>& a2);
// (H - E)^{-1} restricted to phi-perp, applied to g (component along phi removed first).
std::vector<double> reduced_resolvent_apply(const Tridiag& t, double E, const std::vector<double>& phi,
                                            std::vector<double> g);

struct NearEigenReport {
    double residual = 0.0;     // ||(T - E) phi||
    bool exists = false;       // eigenvalue within eps of E found
    double witness = 0.0;      // nearest eigenvalue
    double witness_gap = 0.0;  // |witness - E|
    double delta = 0.0;        // distance from E to the rest of the spectrum (excluding witness)
    double aligned_distance = 0.0;  // min_{|c|=1} ||phi - c psi||
    double aligned_bound = 0.0;     // sqrt(2) * eps / delta
    bool aligned_ok = true;
    bool pass = true;
};
NearEigenReport near_eigen_exists(const Tridiag& t, const std::vector<double>& phi, double E, double eps);

// Off-diagonal-dominance checks for Dirichlet determinants and resolvents.
struct DominanceReport {
    double mu = 0.0;
    bool applicable = false;
    double log_f = 0.0;
    double dist = 0.0;
    long near_count = 0;   // # sp(H - E) in [-mu, mu]
    bool det_bound_ok = true;
    bool dist_bound_ok = true;
    bool count_ok = true;
    bool pass = true;
};
// Every site far from E: mu = min |lambda v - E| / 2 > 2.
DominanceReport check_all_sites_far(const HamiltonianBlock& h, double E);
// One exceptional site j0 allowed.
DominanceReport check_one_exceptional_site(const HamiltonianBlock& h, double E, long j0);

struct GreenDecayReport {
    double mu = 0.0;
    double slope = 0.0;      // least-squares slope of log|G(a, l)| against l - a
    double bound = 0.0;      // -log(mu) / 2
    double max_entry_excess = 0.0;  // max over (i,j) of log|G(i,j)| + A (|i-j|+1) log lambda, if A given
    bool slope_ok = true;
    bool entry_ok = true;
    bool pass = true;
};
GreenDecayReport green_decay(const HamiltonianBlock& h, double E, std::optional<double> A_exp = std::nullopt);

struct DetPerturbReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = true;
};
// |log|det(I + K)|| <= constant * n * ||K|| for ||K|| < 1/2.
DetPerturbReport identity_perturbation_check(const Eigen::MatrixXd& K, double constant = 3.0);
// |log|det T| - sum log|a_j|| <= constant * n / min|a_j| for the unit off-diagonal tridiagonal T.
DetPerturbReport diagonal_dominance_det_check(const std::vector<double>& a, double constant = 8.0);

struct CoverReport {
    long n = 0;
    double tau = 0.0;
    double gamma_measured = 0.0;  // worst observed decay rate over the cover
    bool decay_hypothesis = false;
    double contradiction_lhs = 0.0;  // 4 n exp(-gamma n^tau); the argument needs < 1
    bool quantitative_condition = false;
    double dist = 0.0;               // dist(sp H, E)
    bool conclusion = false;         // E not in the spectrum (dist > 0 at working precision)
    bool pass = true;                // conclusion holds whenever the quantitative condition does
};
// Overlapping cover of [a,b] by windows of length len with overlap > n^tau.
CoverReport cover_check(const HamiltonianBlock& h, double E, double tau, long len);

}  // namespace qps
