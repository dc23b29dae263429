#pragma once

#include <cstdint>
#include <vector>

namespace nest {

/// Two-sided KS statistic of the samples against Uniform(0,1).
double ks_statistic_uniform(std::vector<double> samples);

/// Asymptotic p-value for the KS statistic at sample size n (Stephens'
/// small-sample correction applied).
double ks_pvalue(double statistic, std::size_t n);

/// Insertion rank of one replacement: how many live points had a lower logl
/// when the new point joined, and the live count at that instant.
struct RankStat {
    std::uint32_t rank = 0;
    std::uint32_t n_live = 0;
};

struct RankDiagnostic {
    std::size_t n = 0;
    bool sufficient = false; // at least 100 ranks recorded
    double statistic = 0.0;
    double p_value = 1.0;
};

/// KS uniformity test of the midpoint-transformed ranks (rank+0.5)/N.
/// Under a correct constrained sampler, insertion ranks are uniform.
RankDiagnostic rank_diagnostic(const std::vector<RankStat>& ranks);

} // namespace nest
