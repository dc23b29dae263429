#pragma once

#include <cmath>
#include <limits>
#include <string>

namespace nest {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)), safe for -inf arguments.
inline double log_sum_exp(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double m = a > b ? a : b;
    return m + std::log1p(std::exp((a > b ? b : a) - m));
}

/// Shortest text form that round-trips an IEEE double exactly.
std::string format_double(double x);

/// FNV-1a over a byte string; used for config fingerprints.
std::uint64_t fnv1a(const std::string& bytes);

} // namespace nest
