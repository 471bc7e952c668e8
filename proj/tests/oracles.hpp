#pragma once

// Reference computations used only by the tests. They deliberately avoid the library's
// recursions: dense long-double elimination, polynomial root finding, forward recursion.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "qps/operator.hpp"

namespace oracle {

using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

inline LMat dense_ld(const qps::Tridiag& t, long double E = 0) {
    const int n = static_cast<int>(t.size());
    LMat M = LMat::Zero(n, n);
    for (int i = 0; i < n; ++i) M(i, i) = static_cast<long double>(t.diag[i]) - E;
    for (int i = 0; i + 1 < n; ++i) M(i, i + 1) = M(i + 1, i) = t.off[i];
    return M;
}

// log|det| and sign by Gaussian elimination with partial pivoting in long double.
struct LogDet {
    int sign;
    long double log_mag;
};
inline LogDet logdet(LMat M) {
    const int n = static_cast<int>(M.rows());
    int sign = 1;
    long double acc = 0;
    for (int k = 0; k < n; ++k) {
        int p = k;
        for (int i = k + 1; i < n; ++i)
            if (std::fabs(M(i, k)) > std::fabs(M(p, k))) p = i;
        if (M(p, k) == 0) return {0, -INFINITY};
        if (p != k) {
            M.row(p).swap(M.row(k));
            sign = -sign;
        }
        long double piv = M(k, k);
        if (piv < 0) sign = -sign;
        acc += std::log(std::fabs(piv));
        for (int i = k + 1; i < n; ++i) {
            long double f = M(i, k) / piv;
            if (f != 0)
                for (int j = k; j < n; ++j) M(i, j) -= f * M(k, j);
        }
    }
    return {sign, acc};
}

inline LMat inverse_ld(const LMat& M) { return M.fullPivLu().inverse(); }

// Characteristic polynomial coefficients (lowest degree first) of a symmetric tridiagonal
// matrix, by expanding det(xI - T) along the last row in polynomial arithmetic.
inline std::vector<long double> char_poly(const qps::Tridiag& t) {
    std::vector<long double> pm2{1.0L}, pm1{-static_cast<long double>(t.diag[0]), 1.0L};
    if (t.size() == 1) return pm1;
    for (std::size_t k = 1; k < t.size(); ++k) {
        std::vector<long double> p(k + 2, 0.0L);
        for (std::size_t i = 0; i < pm1.size(); ++i) {
            p[i + 1] += pm1[i];
            p[i] -= static_cast<long double>(t.diag[k]) * pm1[i];
        }
        long double b2 = static_cast<long double>(t.off[k - 1]) * t.off[k - 1];
        for (std::size_t i = 0; i < pm2.size(); ++i) p[i] -= b2 * pm2[i];
        pm2 = pm1;
        pm1 = p;
    }
    return pm1;
}

// All roots of a real polynomial by Aberth iteration, real parts sorted.
inline std::vector<double> poly_roots(const std::vector<long double>& c) {
    using C = std::complex<long double>;
    const int n = static_cast<int>(c.size()) - 1;
    auto eval = [&](C z, C& d) {
        C p = c[n];
        d = 0;
        for (int i = n - 1; i >= 0; --i) {
            d = d * z + p;
            p = p * z + c[i];
        }
        return p;
    };
    long double R = 0;
    for (int i = 0; i < n; ++i) R = std::max(R, std::fabs(c[i] / c[n]));
    R += 1;
    std::vector<C> z(n);
    for (int k = 0; k < n; ++k) z[k] = std::polar(R, 2.0L * M_PI * (k + 0.25L) / n);
    for (int it = 0; it < 500; ++it) {
        long double change = 0;
        for (int k = 0; k < n; ++k) {
            C d;
            C p = eval(z[k], d);
            C ratio = p / d;
            C s = 0;
            for (int j = 0; j < n; ++j)
                if (j != k) s += 1.0L / (z[k] - z[j]);
            C w = ratio / (1.0L - ratio * s);
            z[k] -= w;
            change = std::max(change, std::abs(w));
        }
        if (change < 1e-30L * R) break;
    }
    std::vector<double> out;
    for (auto& r : z) out.push_back(static_cast<double>(r.real()));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace oracle
