#include "qps/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qps/parallel.hpp"
#include "qps/rng.hpp"

namespace qps {

double Mat2::max_abs() const { return std::max({std::fabs(a), std::fabs(b), std::fabs(c), std::fabs(d)}); }

double spectral_norm(const Mat2& m) {
    double p = std::hypot(m.a + m.d, m.b - m.c);
    double q = std::hypot(m.a - m.d, m.b + m.c);
    return 0.5 * (p + q);
}

Mat2 projector_first() { return {1.0, 0.0, 0.0, 0.0}; }

void ScaledMat2::renormalize() {
    double s = m.max_abs();
    if (s == 0.0 || !std::isfinite(s)) return;
    int e = 0;
    std::frexp(s, &e);
    m.a = std::ldexp(m.a, -e);
    m.b = std::ldexp(m.b, -e);
    m.c = std::ldexp(m.c, -e);
    m.d = std::ldexp(m.d, -e);
    log_scale += e * std::log(2.0);
}

ScaledMat2 ScaledMat2::from(const Mat2& raw) {
    ScaledMat2 r{raw, 0.0};
    r.renormalize();
    return r;
}

ScaledMat2 ScaledMat2::operator*(const ScaledMat2& o) const {
    ScaledMat2 r{m * o.m, log_scale + o.log_scale};
    r.renormalize();
    return r;
}

double ScaledMat2::log_norm() const {
    double s = spectral_norm(m);
    return s == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(s) + log_scale;
}

double ScaledMat2::log_abs_det() const {
    double dt = std::fabs(m.det());
    return dt == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(dt) + 2.0 * log_scale;
}

SignedLog ScaledMat2::entry(int i, int j) const {
    double v = i == 0 ? (j == 0 ? m.a : m.b) : (j == 0 ? m.c : m.d);
    SignedLog s = SignedLog::from(v);
    if (!s.is_zero()) s.log_mag += log_scale;
    return s;
}

ScaledMat2 monodromy(IndexInterval iv, double x, double omega, double lambda, const PotentialSpec& v, double E) {
    ScaledMat2 M;
    for (long k = iv.a; k <= iv.b; ++k) {
        double s = lambda * v(x + k * omega) - E;
        const Mat2& p = M.m;
        M.m = Mat2{s * p.a - p.c, s * p.b - p.d, p.a, p.b};
        M.renormalize();
    }
    return M;
}

ScaledMat2 monodromy(const HamiltonianBlock& h, double E) {
    return monodromy(h.interval, h.x, h.omega, h.lambda, *h.potential, E);
}

LyapunovEstimate lyapunov_estimate(double omega, double E, double lambda, const PotentialSpec& v, long n,
                                   int x_grid, std::uint64_t seed) {
    CounterRng rng(seed, 0x4c79);
    double phase = rng.uniform();
    std::vector<double> vals(x_grid);
    parallel_for(static_cast<std::size_t>(x_grid), [&](std::size_t k) {
        double x = (static_cast<double>(k) + phase) / x_grid;
        vals[k] = monodromy(IndexInterval(1, n), x, omega, lambda, v, E).log_norm() / static_cast<double>(n);
    });
    LyapunovEstimate r;
    r.n = n;
    r.x_samples = x_grid;
    double mean = 0.0;
    for (double q : vals) mean += q;
    mean /= x_grid;
    double var = 0.0;
    for (double q : vals) var += (q - mean) * (q - mean);
    var = x_grid > 1 ? var / (x_grid - 1) : 0.0;
    r.value = mean;
    r.std_error = std::sqrt(var / x_grid);
    return r;
}

namespace {

AvalancheReport avalanche_core(const std::vector<ScaledMat2>& A, double mu, double constant) {
    AvalancheReport r;
    long n = static_cast<long>(A.size());
    r.n = n;
    r.mu = mu;
    r.constant = constant;
    if (n < 2) throw HypothesisError("size", 0, "avalanche: need at least two matrices");
    double log_mu = std::log(mu);
    r.max_log_det = -std::numeric_limits<double>::infinity();
    r.min_log_norm = std::numeric_limits<double>::infinity();
    std::vector<double> ln(n);
    for (long j = 0; j < n; ++j) {
        double ld = A[j].log_abs_det();
        r.max_log_det = std::max(r.max_log_det, ld);
        // det is formed from normalized entries, so its rounding error scales like u * ||A||^2.
        double slack = 1e-10 + 16.0 * std::numeric_limits<double>::epsilon() * std::exp(std::min(2.0 * A[j].log_scale, 700.0));
        if (ld > std::log1p(slack))
            throw HypothesisError("det", j, "avalanche hypothesis failed: |det A_" + std::to_string(j + 1) + "| > 1");
        ln[j] = A[j].log_norm();
        r.min_log_norm = std::min(r.min_log_norm, ln[j]);
    }
    if (!(mu > static_cast<double>(n)))
        throw HypothesisError("mu", -1, "avalanche hypothesis failed: mu <= n");
    for (long j = 0; j < n; ++j)
        if (ln[j] < log_mu - 1e-12 * (1.0 + std::fabs(log_mu)))
            throw HypothesisError("norm", j, "avalanche hypothesis failed: ||A_" + std::to_string(j + 1) + "|| < mu");
    std::vector<double> lp(n - 1);
    r.max_pair_defect = -std::numeric_limits<double>::infinity();
    for (long j = 0; j + 1 < n; ++j) {
        lp[j] = (A[j + 1] * A[j]).log_norm();
        double defect = ln[j + 1] + ln[j] - lp[j];
        r.max_pair_defect = std::max(r.max_pair_defect, defect);
        if (!(defect < 0.5 * log_mu))
            throw HypothesisError("pair", j, "avalanche hypothesis failed at pair (" + std::to_string(j + 1) + ", " +
                                                 std::to_string(j + 2) + ")");
    }
    ScaledMat2 prod = A[0];
    for (long j = 1; j < n; ++j) prod = A[j] * prod;
    double total = prod.log_norm();
    double sum_mid = 0.0, sum_pair = 0.0, abs_sum = std::fabs(total);
    for (long j = 1; j + 1 < n; ++j) {
        sum_mid += ln[j];
        abs_sum += std::fabs(ln[j]);
    }
    for (double v : lp) {
        sum_pair += v;
        abs_sum += std::fabs(v);
    }
    r.lhs = std::fabs(total + sum_mid - sum_pair);
    r.n_over_mu = static_cast<double>(n) / mu;
    r.fp_floor = 1e-13 * abs_sum;
    r.ratio = r.lhs / (r.n_over_mu + r.fp_floor);
    r.pass = r.ratio <= constant;
    return r;
}

}  // namespace

AvalancheReport avalanche_verify(const std::vector<Mat2>& mats, double mu, double constant) {
    std::vector<ScaledMat2> s;
    s.reserve(mats.size());
    for (const auto& m : mats) s.push_back(ScaledMat2::from(m));
    return avalanche_core(s, mu, constant);
}

AvalancheReport avalanche_verify(const std::vector<ScaledMat2>& mats, double mu, double constant) {
    return avalanche_core(mats, mu, constant);
}

AvalancheDetReport avalanche_det(double x, double omega, double lambda, const PotentialSpec& v, double E,
                                 const std::vector<long>& cuts, double constant) {
    if (cuts.size() < 3) throw std::invalid_argument("avalanche_det: need a_0 < a_1 < a_2 at least");
    for (std::size_t i = 1; i < cuts.size(); ++i)
        if (cuts[i] <= cuts[i - 1]) throw std::invalid_argument("avalanche_det: cut points must increase");
    std::size_t K = cuts.size() - 1;
    std::vector<ScaledMat2> A(K);
    ScaledMat2 P = ScaledMat2::from(projector_first());
    A[0] = monodromy(IndexInterval(cuts[0], cuts[1]), x, omega, lambda, v, E) * P;
    for (std::size_t l = 1; l < K; ++l)
        A[l] = monodromy(IndexInterval(cuts[l] + 1, cuts[l + 1]), x, omega, lambda, v, E);
    A[K - 1] = P * A[K - 1];
    double mu = std::numeric_limits<double>::infinity();
    for (const auto& a : A) mu = std::min(mu, std::exp(std::min(a.log_norm(), 700.0)));
    AvalancheDetReport r;
    r.ap = avalanche_core(A, mu, constant);
    HamiltonianBlock h(IndexInterval(cuts.front(), cuts.back()), x, omega, lambda, v);
    r.log_f = det_f(h, E).log_mag;
    double fac = 0.0;
    for (std::size_t l = 1; l < K; ++l) fac += (A[l] * A[l - 1]).log_norm();
    for (std::size_t l = 1; l + 1 < K; ++l) fac -= A[l].log_norm();
    r.factorized = fac;
    r.residual = std::fabs(r.log_f - fac);
    return r;
}

SplitReport split_norm_check(const HamiltonianBlock& h, long b_split, double E) {
    if (b_split < h.a() || b_split >= h.b()) throw std::invalid_argument("split_norm_check: need a <= b < c");
    SplitReport r;
    double vmax = 0.0;
    for (long j = h.a(); j <= h.b(); ++j) vmax = std::max(vmax, std::fabs(h.site(j)));
    r.lambda_C0 = vmax;
    r.applicable = std::fabs(E) <= vmax;
    auto ev = spectrum(h.matrix(), false).eigenvalues;
    r.kappa = std::numeric_limits<double>::infinity();
    for (double e : ev) r.kappa = std::min(r.kappa, std::fabs(e - E));
    double l1 = monodromy(IndexInterval(h.a(), b_split), h.x, h.omega, h.lambda, *h.potential, E).log_norm();
    double l2 = monodromy(IndexInterval(b_split + 1, h.b()), h.x, h.omega, h.lambda, *h.potential, E).log_norm();
    double l3 = monodromy(h, E).log_norm();
    r.lhs = l1 + l2 - l3;
    r.rhs = 20.0 * (std::log(vmax) - std::log(r.kappa));
    r.pass = !r.applicable || r.lhs <= r.rhs;
    return r;
}

}  // namespace qps
