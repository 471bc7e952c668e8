#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qps/measure.hpp"
#include "qps/operator.hpp"
#include "qps/potential.hpp"

namespace qps {

// Exponents and the capped length schedule of the multiscale induction.
struct ScaleParams {
    int N1 = 4;
    double tau = 0.3;
    double vartheta = 0.5;
    double beta = 1.5;
    double gamma = 0.5;
    double nu = 0.5;
    double A_exp = 0.5;
    double sigma = 0.5;
    int cap = 200;
    int scales = 2;  // S_max

    // Throws std::invalid_argument unless 0 < tau < vartheta < 1, N1 >= 1, cap >= N1, scales >= 1.
    void validate() const;
    // N_1, ..., N_{scales+1}: N_{s+1} = min(cap, max(floor(exp(N_s^tau)), N_s^2)).
    std::vector<int> schedule() const;
};

// ---------------------------------------------------------------------------
// Flat-slope elimination and the first resonance-free domain.

struct FlatSlopeResult {
    double eps = 0.0;
    double C0 = 0.0;                 // max |V'| (also bounds the oscillation of V)
    SimpleSet1D A_set;               // {x : |V'(x)| < eps}
    SimpleSet1D V_of_A;              // image V(A)
    double J_lo = 0.0, J_hi = 0.0;   // range of V
    std::vector<std::pair<double, double>> gaps;  // J \ V(A) = union [alpha_i, beta_i]
    double delta = 0.0;
    double h_delta = 0.0;            // sum of gap lengths <= delta
    std::vector<std::size_t> R;      // indices of gaps longer than delta
    SimpleSet1D E0;                  // union over R of [alpha + 2 delta^2, beta - 2 delta^2]
    double L_total = 0.0;            // mes V^{-1}(E0)
    // Resonance counting checks.
    bool image_ok = true;            // mes V(A) <= eps
    double excluded_measure = 0.0;   // mes(J \ E0)
    double excluded_bound = 0.0;     // 2 eps + 4 C0 delta
    bool excluded_ok = true;
    double R_bound = 0.0;            // C0 / delta
    bool R_ok = true;
};
// Throws std::invalid_argument unless 0 < eps < C0^2, std::runtime_error if the grid is too coarse.
FlatSlopeResult flat_slope_sets(const PotentialSpec& v, double eps, int grid = 1 << 14);

// Preimage tile of [y_{k-1}, y_k] on one monotone piece; b may exceed 1 (wraps).
struct Tile {
    std::size_t i = 0;  // gap index in R
    int k = 0;          // level index 1..n_i
    int piece = 0;
    double a = 0.0, b = 0.0;
};

struct ResonanceFreeDomain {
    int N1 = 0;
    double omega_lo = 0.0, omega_hi = 1.0;
    double delta = 0.0;
    std::vector<Tile> tiles;             // all tiles, 1 <= k <= n_i
    SimpleSet2D D1;
    std::size_t complexity = 0;
    double complexity_bound = 0.0;       // 5 m0^2 C0 delta^-3
    double L_interior = 0.0;             // sum of tile lengths with 1 < k < n_i
    // Per-tile frequency exclusion audit.
    long tiles_checked = 0;
    long btilde_violations = 0;          // mes Btilde >= 20 m0 delta or compl Btilde > 5 m0
    double max_B_fraction = 0.0;         // max over tiles of mes(B in window) / window length
    double B_bound = 0.0;                // 40 m0 delta^(1/2)
    long B_violations = 0;
    // Sampled check: |V(x + j w) - E| > delta^2 for 0 < |j| <= N1^2.
    long samples = 0;
    long sample_violations = 0;
    bool pass = true;
};
ResonanceFreeDomain resonance_free_domain(const PotentialSpec& v, const FlatSlopeResult& flat, int N1,
                                          double omega_lo = 0.0, double omega_hi = 1.0, long samples = 1000,
                                          std::uint64_t seed = 11);

// ---------------------------------------------------------------------------
// Eigenvalue branches.

class ResonanceError : public std::runtime_error {
public:
    ResonanceError(long count, const std::string& what) : std::runtime_error(what), count_(count) {}
    long count() const { return count_; }

private:
    long count_;
};

struct BranchSample {
    double x = 0.0;
    double omega = 0.0;
    double E = 0.0;
    std::vector<double> phi;  // indexed by site - interval.a
    double dE_dx = 0.0;
    double dE_domega = 0.0;
    double d2E_dx2 = 0.0;
    double residual = 0.0;
    double half_gap = 0.0;
};

struct EigenBranch {
    int scale = 1;
    long cell_i = 0, cell_j = 0;
    int k = 0;
    IndexInterval interval;
    std::vector<BranchSample> samples;
    double rho = 0.0;  // min half gap over samples
    // Single-site decay |phi(n)| < lambda^{-|n|/3} |phi(0)|.
    bool decay_ok = true;
    double decay_margin = 0.0;  // min over n != 0 of log(lambda^{-|n|/3}|phi(0)|) - log|phi(n)|
    // 1/2 lambda^{39/40} < |dE/dx| <= C0 lambda and |dE/domega| <= C0 N lambda.
    bool derivative_ok = true;
};

// Unique eigenvalue of H_[-N1,N1](x, w) in [lambda V(x) - 2, lambda V(x) + 2]; throws ResonanceError otherwise.
EigenBranch first_scale_branch(double x, double omega, double lambda, const PotentialSpec& v, int N1);

// ---------------------------------------------------------------------------
// Diophantine data and resonance counting.

// min over 1 <= l <= L_max of l^beta ||l w||, with the minimizing l.
std::pair<double, long> diophantine_min(double omega, long L_max, double beta = 1.5);
// #{|l| <= range : |V(x + l w) - E| < lambda^{-1/2}}; throws std::invalid_argument if range > 1e7.
long resonance_count(double x, double E, double omega, double lambda, const PotentialSpec& v, long range);

class NoAdmissibleScale : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
// First N in N_base, N_base^2, N_base^4, ... (at most m0_cap candidates, each <= 1e4) whose annulus
// N < |j| <= N^2 has |V(x + j w) - V(x)| >= lambda^{-1/2}.
long find_N1(double x, double omega, double lambda, const PotentialSpec& v, long N_base, int m0_cap);

// ---------------------------------------------------------------------------
// Separation of eigenvalues.

struct SeparationReport {
    long points = 0;
    long pairs = 0;
    long lambda_size = 0;
    double threshold = 0.0;  // exp(-|Lambda|^{3/4})
    double min_gap = 0.0;    // +inf if no pairs
    double log_margin = 0.0; // log(min_gap) - log(threshold)
    long violations = 0;
    bool pass = true;
};
// branch_set[p] lists the branch eigenvalues at sample point p.
SeparationReport separation_check(const std::vector<std::vector<double>>& branch_set, long Lambda_size);

// Desk instance: blocks [-N^2, N^2] at x_k = (k + phase)/x_samples; the branch eigenvalues are those
// within window_factor * lambda^{1/2} of lambda V(x).
SeparationReport separation_instance(double lambda, const PotentialSpec& v, double omega, int N, int x_samples,
                                     std::uint64_t seed, double window_factor = 0.75);

struct OrthogonalityReport {
    double E1 = 0.0, E2 = 0.0;
    // |log|f_[a,n](E1)| - log|f_[a,n](E2)|| <= |E1 - E2| for n in [-N^2, -N).
    long lipschitz_checked = 0;
    double lipschitz_max_ratio = 0.0;  // max lhs / |E1 - E2| (0 if E1 == E2)
    bool lipschitz_ok = true;
    // Tail mass of the Dirichlet solution at each Ei that is an eigenvalue.
    bool tail_checked = false;
    double tail_ratio = 0.0;  // sum_{N<|n|<=N^2} psi^2 / sum psi^2, worst of E1 and E2
    double tail_bound = 0.0;  // 4 / lambda
    bool tail_ok = true;
    // Orthogonality of the two solution vectors when both are distinct eigenvalues.
    bool orthogonality_checked = false;
    double orthogonality = 0.0;  // |<psi1, psi2>| / (|psi1| |psi2|)
    bool orthogonality_ok = true;
    bool pass = true;
};
// block must be H_[-N^2, N^2](x, w). Throws std::invalid_argument if E1 or E2 lies outside
// lambda V(x) +- 3/4 lambda^{1/2}.
OrthogonalityReport orthogonality_separation_audit(const HamiltonianBlock& block, int N, double E1, double E2);
// Dirichlet solution psi(n) proportional to f_[a, n-1](E) at an eigenvalue E, assembled from the left
// recursion before the peak and the right recursion after it; normalized to max |psi| = 1.
std::vector<double> dirichlet_solution(const Tridiag& t, double E);

// ---------------------------------------------------------------------------
// Morse-condition sampling under random variations.

struct MorseTemplate {
    int T = 10;
    double delta = 1e-6;
    std::vector<double> eta;  // fixed eta (size T); empty means zero
};

struct MorseReport {
    long samples = 0;
    long discarded = 0;   // eigenvalue tracking failed
    long hits = 0;        // |dE/dx| <= eps and |d2E/dx2| <= eps
    double estimate = 0.0;
    double sigma = 0.0;
    long lambda_size = 0;
    double bound = 0.0;   // (|Lambda| eps / (lambda delta))^2
    double constant = 10.0;
    double min_dE = 0.0;  // smallest |dE/dx| + |d2E/dx2| seen
    bool pass = true;     // estimate <= constant * bound + 3 sigma
};
// Branch: the eigenvalue of H_interval(x, w) closest to E_ref, tracked under V + W for random
// (xi, theta) in (-delta, delta)^{2T}. Throws std::invalid_argument unless delta <= T^-5 and rho > 0.
MorseReport morse_sample(const PotentialSpec& v, double lambda, IndexInterval interval, double x, double omega,
                         double E_ref, double rho, const MorseTemplate& tmpl, double eps, long n_samples,
                         std::uint64_t seed, double constant = 10.0);

// ---------------------------------------------------------------------------
// Comparison of two potentials on the same block.

struct LimitCompareReport {
    std::size_t n = 0;
    double sup_diff = 0.0;            // ||V - Vhat||_inf
    double max_eig_delta = 0.0;
    double weyl_bound = 0.0;          // lambda ||V - Vhat||_inf
    bool weyl_ok = true;
    long flagged = 0;                 // pairs with gaps below 2 lambda ||V - Vhat||
    double max_vec_delta = 0.0;       // after sign alignment, unflagged pairs
    double max_dx_delta = 0.0;
    double max_dxx_delta = 0.0;
    bool pass = true;
};
LimitCompareReport potential_limit_compare(const HamiltonianBlock& block_v, const HamiltonianBlock& block_vhat,
                                           double sup_diff);

// ---------------------------------------------------------------------------
// Capped inductive driver.

struct AuditResult {
    std::string name;
    long checked = 0;
    long violations = 0;
    double margin = 0.0;  // worst margin (positive means satisfied)
    bool pass = true;
    std::string note;
};

struct ScaleState {
    int s = 1;
    int N = 0;
    IndexInterval block;
    SimpleSet2D D;
    SimpleSet1D Omega;
    SimpleSet1D E_window;   // surviving energies, in units of V
    EigenBranch branch;     // samples at surviving grid points, in grid order
    std::vector<AuditResult> audits;
    bool audit_pass = true;
    std::string first_failure;
    long grid_points = 0;
    long grid_in_domain = 0;  // grid points of the previous domain examined at this scale
    long grid_surviving = 0;
    long excluded = 0;        // grid points removed at this scale
    double mes_D = 0.0;
    double mes_eliminated = 0.0;  // mes(D_{s-1} \ D_s) (D_0 := D1 construction)
    double mes_Omega = 0.0;
    double mes_E = 0.0;
    std::size_t compl_D = 0;
};

struct MultiscaleConfig {
    ScaleParams params;
    double lambda = 1e4;
    double eps_flat = 0.8;
    double omega_lo = 0.58, omega_hi = 0.66;
    int x_grid = 64;
    int omega_grid = 64;
    long domain_samples = 1000;
    double h2_window = 0.5;   // h2 window half-width, in units of lambda^{1/2}
    double cell_constant = 2.0;  // K ~ c C1 lambda^{1/2}, L ~ c C1 lambda^{5/8}
    bool strict = false;
    std::uint64_t seed = 1;
};

class AuditFailure : public std::runtime_error {
public:
    AuditFailure(std::string audit, int scale, const std::string& what)
        : std::runtime_error(what), audit_(std::move(audit)), scale_(scale) {}
    const std::string& audit() const { return audit_; }
    int scale() const { return scale_; }

private:
    std::string audit_;
    int scale_;
};

struct MultiscaleResult {
    std::vector<int> schedule;
    FlatSlopeResult flat;
    ResonanceFreeDomain domain;
    std::vector<ScaleState> states;
    long cells_x = 0, cells_omega = 0;
    std::vector<std::string> warnings;
    bool all_pass = true;
    std::string first_failure;  // "s<k>:<audit>"
};

// Diagnostic mode records audit failures and continues; strict mode throws AuditFailure.
MultiscaleResult multiscale_run(const MultiscaleConfig& cfg, const PotentialSpec& v);

}  // namespace qps
