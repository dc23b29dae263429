#pragma once

#include "nest/model.hpp"
#include "nest/rng.hpp"
#include "nest/util.hpp"

#include <cstdint>
#include <set>
#include <vector>

namespace nest {

class ConstrainedSampler;

/// One sampled point satisfying the likelihood threshold that was in force
/// when it was created.
struct LivePoint {
    UnitPoint u;
    ParamPoint v;
    double logl = neg_inf;
    double birth_logl = neg_inf;
    std::uint64_t serial = 0;
};

/// Ascending (logl, serial); serial breaks likelihood ties so the oldest
/// point dies first and replay is deterministic.
struct LiveOrder {
    bool operator()(const LivePoint& a, const LivePoint& b) const {
        if (a.logl != b.logl) return a.logl < b.logl;
        return a.serial < b.serial;
    }
};

/// A removed point together with the prior mass assigned to it. `logv` is
/// the log of the mass this sample represents (its shell), so
/// logw = logl + logv always, and posterior weights come straight off the
/// record. The running remaining-volume ledger lives in RunState.
struct DeadRecord {
    LivePoint point;
    double logv = 0.0;
    double logw = neg_inf;
    std::uint32_t n_live_at_death = 0;
};

struct RunState {
    Problem problem;
    std::set<LivePoint, LiveOrder> live;
    std::vector<DeadRecord> dead;
    double logv_current = 0.0;     // log of the remaining prior volume
    double logz_current = neg_inf; // log-sum-exp of all dead logw
    std::uint64_t next_serial = 1;
    Rng rng;
};

/// ln((n-1)/n): the per-iteration log volume ratio for n live points.
double shrink_logv(double logv, std::size_t n_live);

/// log of the mass peeled off when one of `width` live points is removed
/// from remaining volume exp(logv_before): V_before / width.
inline double shell_logv(double logv_before, std::size_t width) {
    return logv_before - std::log(static_cast<double>(width));
}

/// Draws n i.i.d. uniform points, transforms and evaluates them.
RunState init_live(const Problem& problem, std::size_t n, Rng rng);

/// Removes the worst live point as a DeadRecord and replaces it with a draw
/// from the constrained sampler at the removed likelihood as threshold.
/// Throws RunError if the sampler cannot produce a point.
void ns_step(RunState& state, ConstrainedSampler& sampler, std::uint64_t iteration);

/// True once the largest possible remaining contribution, exp(logv_next +
/// max live logl), has fallen below frac * Z. Always false while no dead
/// point exists.
bool termination_check(const RunState& state, double frac);

/// True when every live point has the same log-likelihood: the live set
/// carries no ordering information and the loop cannot shrink further.
bool live_plateau(const RunState& state);

/// Appends each remaining live point as a posterior sample with an equal
/// split of the remaining volume. Returns the appended records.
std::vector<DeadRecord> finalize_live(RunState& state);

enum class StopReason {
    Converged,
    FlatLive,
    IterationLimit,
    SamplerExhausted,
    StackEmpty,
    Interrupted
};

const char* stop_reason_name(StopReason r);

struct VanillaRunResult {
    RunState state;
    StopReason reason = StopReason::Converged;
    std::uint64_t iterations = 0;
};

/// The vanilla loop: step until termination (or a plateau / the iteration
/// cap), then finalize. Sampler exhaustion stops the loop with partial
/// results preserved in the returned state.
VanillaRunResult run_vanilla(const Problem& problem, std::size_t n_live, double frac,
                             ConstrainedSampler& sampler, Rng rng,
                             std::uint64_t max_iterations = 10'000'000);

} // namespace nest
