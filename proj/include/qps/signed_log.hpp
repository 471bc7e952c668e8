#pragma once

#include <cmath>
#include <limits>

namespace qps {

// A real number stored as sign * exp(log_mag); used for determinants that grow like lambda^n.
struct SignedLog {
    int sign = 0;
    double log_mag = -std::numeric_limits<double>::infinity();

    SignedLog() = default;
    SignedLog(int s, double lm) : sign(s), log_mag(s == 0 ? -std::numeric_limits<double>::infinity() : lm) {}

    static SignedLog from(double v) {
        if (v == 0.0 || std::isnan(v)) return SignedLog{};
        return SignedLog(v > 0 ? 1 : -1, std::log(std::fabs(v)));
    }
    static SignedLog one() { return SignedLog(1, 0.0); }
    static SignedLog zero() { return SignedLog{}; }

    bool is_zero() const { return sign == 0; }
    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_mag); }

    SignedLog operator-() const { return SignedLog(-sign, log_mag); }
    SignedLog operator*(const SignedLog& o) const {
        if (sign == 0 || o.sign == 0) return SignedLog{};
        return SignedLog(sign * o.sign, log_mag + o.log_mag);
    }
    SignedLog operator/(const SignedLog& o) const {
        if (o.sign == 0) return SignedLog(sign == 0 ? 0 : sign, std::numeric_limits<double>::infinity());
        if (sign == 0) return SignedLog{};
        return SignedLog(sign * o.sign, log_mag - o.log_mag);
    }
    SignedLog operator+(const SignedLog& o) const {
        if (sign == 0) return o;
        if (o.sign == 0) return *this;
        const SignedLog& big = log_mag >= o.log_mag ? *this : o;
        const SignedLog& small = log_mag >= o.log_mag ? o : *this;
        double r = static_cast<double>(small.sign * big.sign) * std::exp(small.log_mag - big.log_mag);
        if (r == -1.0) return SignedLog{};
        double s = 1.0 + r;
        return SignedLog(big.sign * (s > 0 ? 1 : -1), big.log_mag + std::log1p(r));
    }
    SignedLog operator-(const SignedLog& o) const { return *this + (-o); }
};

}  // namespace qps
