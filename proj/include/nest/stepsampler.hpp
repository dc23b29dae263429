#pragma once

#include "nest/sampler.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace nest {

/// A slice walk hit a degenerate interval (pathological model geometry).
class WalkError : public RunError {
public:
    explicit WalkError(const std::string& msg) : RunError(msg) {}
};

struct StepConfig {
    int n_steps = 1;            // walk length before a point counts as independent
    int max_expand = 10;        // stepping-out doublings cap
    double initial_scale = 0.1; // bracket half-width as a fraction of the cube width
};

struct WalkState {
    LivePoint current;
    double threshold = neg_inf;
    std::uint64_t n_evals = 0;
};

enum class WalkScheme { AxisSlice, HitAndRun };

/// One slice-sampling update along `direction`: brackets by doubling out
/// from the current point (clipped to the unit cube), then shrinks until a
/// point above the threshold is found. Throws WalkError if the interval
/// collapses below 1e-12.
WalkState slice_step(WalkState ws, const std::vector<double>& direction,
                     const StepConfig& cfg, const Problem& problem, Rng& rng);

/// Slice update along an isotropic random unit direction.
WalkState hit_and_run_step(WalkState ws, const StepConfig& cfg, const Problem& problem,
                           Rng& rng);

/// Runs n_steps walk updates from a live-point seed and returns the end
/// point with birth_logl = threshold. Axis-slice cycles a random permutation
/// of the coordinate axes; hit-and-run draws a fresh direction per step.
/// When `whitening` is given (d x d), directions are drawn in that metric.
/// `eval_count`, when non-null, accumulates likelihood evaluations.
LivePoint generate_independent(const LivePoint& seed, double threshold,
                               const StepConfig& cfg, WalkScheme scheme,
                               const Problem& problem, Rng& rng,
                               const Eigen::MatrixXd* whitening = nullptr,
                               std::uint64_t* eval_count = nullptr);

struct StepOptions {
    WalkScheme scheme = WalkScheme::AxisSlice;
    int n_steps = 0; // 0 -> 2d
    int max_expand = 10;
    double initial_scale = 0.1;
    bool whiten = false; // refit a live-covariance metric on the region schedule
    int max_retries = 10;
};

/// Step-sampling LRPS: picks a random live seed and walks it to an
/// approximately independent point above the threshold.
class StepSampler : public ConstrainedSampler {
public:
    StepSampler(Problem problem, StepOptions opt = {});

    bool refit_due(std::uint64_t iteration, std::size_t width) const override;
    void refit(const std::vector<LivePoint>& live_sorted, std::uint64_t iteration,
               Rng& rng) override;
    bool snapshot_safe() const override { return !opt_.whiten || !whitening_; }
    std::optional<Candidate> propose(double threshold,
                                     const std::vector<LivePoint>& live_sorted,
                                     std::uint64_t iteration, Rng& rng) override;
    std::string mode_token() const override;
    void restore_mode(const std::string& token) override;
    void force_refit() override { force_refit_ = true; }
    std::string describe() const override;

    StepConfig step_config() const { return cfg_; }

private:
    Problem problem_;
    StepOptions opt_;
    StepConfig cfg_;
    std::optional<Eigen::MatrixXd> whitening_;
    bool force_refit_ = false;
    std::uint64_t last_fit_ = 0;
};

} // namespace nest
