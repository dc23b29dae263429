#include "nest/stats.hpp"

#include <algorithm>
#include <cmath>

namespace nest {

double ks_statistic_uniform(std::vector<double> samples) {
    if (samples.empty()) return 0.0;
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double lo = samples[i] - static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n - samples[i];
        d = std::max(d, std::max(lo, hi));
    }
    return d;
}

double ks_pvalue(double statistic, std::size_t n) {
    if (n == 0 || statistic <= 0.0) return 1.0;
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
    const double l2 = lambda * lambda;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 200; ++j) {
        const double term = std::exp(-2.0 * j * j * l2);
        sum += sign * term;
        if (term < 1e-16 * std::abs(sum) || term < 1e-300) break;
        sign = -sign;
    }
    double p = 2.0 * sum;
    if (p < 0.0) p = 0.0;
    if (p > 1.0) p = 1.0;
    return p;
}

RankDiagnostic rank_diagnostic(const std::vector<RankStat>& ranks) {
    RankDiagnostic out;
    out.n = ranks.size();
    if (ranks.size() < 100) return out;
    out.sufficient = true;
    std::vector<double> samples;
    samples.reserve(ranks.size());
    for (const RankStat& r : ranks)
        samples.push_back((r.rank + 0.5) / static_cast<double>(r.n_live));
    out.statistic = ks_statistic_uniform(std::move(samples));
    out.p_value = ks_pvalue(out.statistic, ranks.size());
    return out;
}

} // namespace nest
