#pragma once

#include "nest/nscore.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nest {

struct Candidate {
    UnitPoint u;
    ParamPoint v;
    double logl = neg_inf;
};

/// Likelihood-constrained prior sampler: produces a point with
/// logl strictly above the threshold, or reports failure.
///
/// Both run loops drive a sampler the same way: refit_due/refit at the top
/// of each iteration, then propose() per replacement, all drawing from one
/// master Rng in call order. A sampler whose internal state is derivable
/// from (live set, rng, mode token) at a refit boundary reports
/// snapshot-safe there, which is what makes checkpoint resume exact.
class ConstrainedSampler {
public:
    virtual ~ConstrainedSampler() = default;

    virtual bool refit_due(std::uint64_t /*iteration*/, std::size_t /*width*/) const {
        return false;
    }
    virtual void refit(const std::vector<LivePoint>& /*live_sorted*/,
                       std::uint64_t /*iteration*/, Rng& /*rng*/) {}

    /// True when a checkpoint snapshot taken right now (before any refit at
    /// this boundary) can restore the sampler exactly.
    virtual bool snapshot_safe() const { return true; }

    /// Called at a refit boundary before the snapshot is written; phase
    /// decisions (e.g. switching proposal machinery) belong here so the
    /// snapshot's mode token records them.
    virtual void on_refit_boundary() {}

    /// Called right after a snapshot is written; period statistics reset
    /// here so a resumed run accumulates them identically.
    virtual void on_snapshot() {}

    /// Requests one point with logl > threshold. `live_sorted` is the live
    /// set after the dying point was removed, ascending by (logl, serial).
    virtual std::optional<Candidate> propose(double threshold,
                                             const std::vector<LivePoint>& live_sorted,
                                             std::uint64_t iteration, Rng& rng) = 0;

    virtual std::string mode_token() const { return "-"; }
    virtual void restore_mode(const std::string& /*token*/) {}
    /// Arranges for refit_due to fire at the next boundary (used on resume).
    virtual void force_refit() {}

    /// Short human-readable state for the progress line, e.g. the active
    /// proposal source and recent acceptance rate.
    virtual std::string describe() const { return "-"; }

    std::uint64_t n_proposals = 0;
    std::uint64_t n_evals = 0;
    std::uint64_t n_accepts = 0;
};

/// Rejection sampling from the whole prior, no region guidance. The
/// simplest correct sampler; useful as a baseline and in tests.
class UniformPriorSampler : public ConstrainedSampler {
public:
    explicit UniformPriorSampler(Problem problem, std::uint64_t budget = 10'000'000)
        : problem_(std::move(problem)), budget_(budget) {}

    std::optional<Candidate> propose(double threshold,
                                     const std::vector<LivePoint>& live_sorted,
                                     std::uint64_t iteration, Rng& rng) override;

    std::string describe() const override { return "whole-prior"; }

private:
    Problem problem_;
    std::uint64_t budget_;
};

} // namespace nest
