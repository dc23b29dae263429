#pragma once

#include "nest/rng.hpp"
#include "nest/util.hpp"

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace nest {

/// ln t with t ~ Beta(n_visible, 1), i.e. t = U^(1/n): the volume ratio left
/// by removing the worst of n_visible uniform points.
double beta_shrink(std::size_t n_visible, Rng& rng);

/// (sum w)^2 / sum w^2 for normalized weights; 0 when empty.
double effective_sample_size(std::span<const double> normalized_weights);

/// An evidence accumulator that sees only the subtrees under a
/// with-replacement resample of the root edges. Dead nodes under unseen
/// edges get no weight entry.
struct BootstrapIntegrator {
    std::unordered_map<std::uint64_t, std::uint32_t> root_mult;
    double logv = 0.0;
    double logz = neg_inf;
    std::size_t visible_open = 0;
    std::vector<std::pair<std::uint64_t, double>> sample_logw;
    Rng rng;

    std::uint32_t multiplicity(std::uint64_t edge) const {
        auto it = root_mult.find(edge);
        return it == root_mult.end() ? 0 : it->second;
    }
};

struct EnsembleCombined {
    double logz_mean = neg_inf;
    double logz_sigma = 0.0;
    /// (dead node id, normalized posterior weight), in dead order.
    std::vector<std::pair<std::uint64_t, double>> posterior;
};

/// K bootstrapped integrators plus a full-visibility point estimate with
/// deterministic shrinkage. Members fold over the birth/death event stream
/// in order; each carries its own rng substream, so a fold over the same
/// events always reproduces the same states.
class IntegratorEnsemble {
public:
    /// Resamples root edges for each of k members. Throws UsageError for
    /// fewer than 2 root children or k < 2.
    static IntegratorEnsemble make(const std::vector<std::uint64_t>& root_children,
                                   std::size_t k, std::uint64_t master_seed);

    void on_birth(std::uint64_t node_id, std::uint64_t root_edge);
    void on_death(std::uint64_t node_id, std::uint64_t root_edge, double logl,
                  std::size_t total_width);

    struct OpenNode {
        std::uint64_t id = 0;
        std::uint64_t root_edge = 0;
        double logl = neg_inf;
    };
    /// Adds the equal-split closeout contributions of the remaining open
    /// nodes to every member.
    void finalize(const std::vector<OpenNode>& open);

    EnsembleCombined combine() const;

    /// Spread of the member logz values around the point estimate; usable
    /// mid-run for progress reporting.
    double current_sigma() const;

    const std::vector<BootstrapIntegrator>& members() const { return members_; }
    const BootstrapIntegrator& point_estimate() const { return point_; }

private:
    std::vector<BootstrapIntegrator> members_;
    BootstrapIntegrator point_;
    bool finalized_ = false;
};

} // namespace nest
