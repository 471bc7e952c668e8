#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace qps {

using Json = nlohmann::ordered_json;

inline const double kGolden = 0.6180339887498948482;  // (sqrt 5 - 1) / 2

struct SuiteOptions {
    std::uint64_t seed = 1;
    double lambda = 1e4;
    int trials = 200;               // base count for randomized property checks
    bool plant_violation = false;   // suite D: add a cut at a resonant site
};

// Property suites behind `qps verify`. Each returns
//   {"suite": name, "pass": bool, "checks": [{"name", "pass", "gate", ...}, ...]}
// where gate = true marks a check whose hypothesis did not hold (reported, not failed).
Json suite_A(const SuiteOptions& o);  // eigenvalue perturbation
Json suite_B(const SuiteOptions& o);  // Weyl, interlacing, rank-k determinant comparison
Json suite_C(const SuiteOptions& o);  // Green's functions and determinant bounds
Json suite_D(const SuiteOptions& o);  // Avalanche Principle
Json suite_E(const SuiteOptions& o);  // sublevel sets and implicit slabs
Json suite_F(const SuiteOptions& o);  // hyperplane slabs
Json suite_separation(const SuiteOptions& o);
Json suite_variation(const SuiteOptions& o);

const std::vector<std::string>& suite_names();
// Throws std::invalid_argument on an unknown name.
Json run_suite(const std::string& name, const SuiteOptions& o);

// P(|U_1 + ... + U_N| <= t) for independent U_i uniform on [-1, 1] (Irwin-Hall closed form).
double irwin_hall_abs_cdf(int N, double t);

}  // namespace qps
