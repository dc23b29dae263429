#pragma once

#include "nest/integrate.hpp"
#include "nest/stats.hpp"
#include "nest/tree.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace nest {

enum class SamplerScheme { Region, Slice, HitAndRun, Auto };

const char* scheme_name(SamplerScheme s);
SamplerScheme scheme_from_name(const std::string& name);

struct RunConfig {
    std::string problem = "gauss2d";
    std::size_t n_live = 400; // minimum stack width
    std::size_t max_width = 0; // 0 -> 4 * n_live
    double frac = 0.01;        // termination fraction
    std::size_t k_bootstrap = 30;
    SamplerScheme scheme = SamplerScheme::Auto;
    std::size_t n_steps = 0; // 0 -> 2 * dim
    std::uint64_t seed = 1;
    std::string out_dir; // not part of the config hash
    bool resume = false; // not part of the config hash

    double weight_frac_threshold = 0.1;
    int n_bootstrap_rounds = 30;
    bool use_v_ellipsoid = true;
    std::uint64_t snapshot_every = 100;
    std::uint64_t max_iterations = 1'000'000;
    std::uint64_t stale_budget = 1'000'000;

    std::size_t resolved_max_width() const { return max_width ? max_width : 4 * n_live; }
};

/// Canonical JSON of the semantic fields (everything the run depends on;
/// out_dir and resume excluded).
std::string config_json(const RunConfig& cfg);
RunConfig config_from_json(const std::string& json_text);
std::string config_hash_hex(const RunConfig& cfg);

struct RunCallbacks {
    /// Returning false stops the run cleanly at the next iteration boundary;
    /// the checkpoint stays resumable.
    std::function<bool(std::uint64_t iteration)> keep_going;
    /// Progress line sink; defaults to stderr.
    std::function<void(const std::string&)> progress;
};

struct RunOutputs {
    std::string status; // "ok", "interrupted" or "partial:<reason>"
    StopReason reason = StopReason::Converged;
    double logz_mean = neg_inf;
    double logz_sigma = 0.0;
    double ess = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t iterations = 0;
    std::uint64_t n_likelihood_evals = 0;
    std::uint64_t n_proposals = 0;
    std::uint64_t n_accepts = 0;
    RankDiagnostic rank;
    std::vector<RankStat> ranks;
    /// Posterior samples (iteration deaths then closeout), with normalized
    /// weights aligned index-for-index.
    std::vector<DeadRecord> samples;
    std::vector<double> weights;
    /// Cumulative likelihood evaluations after each iteration and the source
    /// that produced each accepted replacement; populated for uninterrupted
    /// runs only.
    std::vector<std::uint64_t> evals_at_iteration;
    std::vector<std::string> accepted_source;
};

/// Executes (or resumes) a run and writes checkpoint.log, results.json,
/// samples.txt and diagnostics.json into cfg.out_dir.
RunOutputs run(const RunConfig& cfg, const RunCallbacks* callbacks = nullptr);

/// Re-runs the insertion-rank test over a stored checkpoint and rewrites
/// diagnostics.json.
RankDiagnostic diagnose(const std::string& out_dir);

struct ProgressSnapshot {
    std::uint64_t iteration = 0;
    std::size_t width = 0;
    double logv = 0.0;
    double logz = neg_inf;
    double sigma = 0.0;
    double max_logl = neg_inf;
    std::string source = "-";
    double accept_rate = 0.0;
    bool done = false;
    std::string reason;
};

/// One status line, e.g.
/// "it=1200 w=400 logv=-3.00 logz=-4.61+-0.08 maxL=-1.84 src=ball-union acc=0.45".
std::string progress_report(const ProgressSnapshot& s);

/// At-most-once-per-second gate. The clock is injectable for tests.
class ProgressThrottle {
public:
    explicit ProgressThrottle(std::function<std::int64_t()> now_ms = {});
    /// True when a line may be emitted now; `force` bypasses the gate.
    bool allow(bool force = false);

private:
    std::function<std::int64_t()> now_ms_;
    std::int64_t last_ms_ = -1;
};

} // namespace nest
