#include "nest/nscore.hpp"

#include "nest/errors.hpp"
#include "nest/sampler.hpp"

#include <cmath>
#include <sstream>

namespace nest {

const char* stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::Converged: return "converged";
        case StopReason::FlatLive: return "flat-live-set";
        case StopReason::IterationLimit: return "iteration-limit";
        case StopReason::SamplerExhausted: return "sampler-exhausted";
        case StopReason::StackEmpty: return "stack-empty";
        case StopReason::Interrupted: return "interrupted";
    }
    return "?";
}

double shrink_logv(double logv, std::size_t n_live) {
    if (n_live < 2) throw UsageError("shrink_logv: needs at least 2 live points");
    const double n = static_cast<double>(n_live);
    return logv + std::log((n - 1.0) / n);
}

RunState init_live(const Problem& problem, std::size_t n, Rng rng) {
    if (n < 2) throw UsageError("init_live: at least 2 live points required");
    RunState state;
    state.problem = problem;
    state.rng = rng;
    for (std::size_t i = 0; i < n; ++i) {
        LivePoint p;
        p.u.resize(problem.dim);
        for (int k = 0; k < problem.dim; ++k) p.u[k] = state.rng.uniform();
        p.v = prior_transform(problem, p.u);
        p.logl = eval_loglike(problem, p.v);
        p.birth_logl = neg_inf;
        p.serial = state.next_serial++;
        state.live.insert(std::move(p));
    }
    return state;
}

void ns_step(RunState& state, ConstrainedSampler& sampler, std::uint64_t iteration) {
    if (state.live.empty()) throw UsageError("ns_step: no live points");
    const std::size_t width = state.live.size();

    auto worst_it = state.live.begin();
    const LivePoint worst = *worst_it;
    state.live.erase(worst_it);

    DeadRecord rec;
    rec.point = worst;
    rec.logv = shell_logv(state.logv_current, width);
    rec.logw = worst.logl + rec.logv;
    rec.n_live_at_death = static_cast<std::uint32_t>(width);
    state.logv_current = shrink_logv(state.logv_current, width);
    state.logz_current = log_sum_exp(state.logz_current, rec.logw);
    state.dead.push_back(rec);

    std::vector<LivePoint> live_sorted(state.live.begin(), state.live.end());
    auto cand = sampler.propose(worst.logl, live_sorted, iteration, state.rng);
    if (!cand) {
        std::ostringstream os;
        os << "constrained sampler exhausted at iteration " << iteration
           << " (threshold logl=" << format_double(worst.logl) << ")";
        throw SamplerExhausted(os.str());
    }
    LivePoint repl;
    repl.u = std::move(cand->u);
    repl.v = std::move(cand->v);
    repl.logl = cand->logl;
    repl.birth_logl = worst.logl;
    repl.serial = state.next_serial++;
    state.live.insert(std::move(repl));
}

bool termination_check(const RunState& state, double frac) {
    if (frac <= 0.0) throw UsageError("termination_check: frac must be positive");
    if (state.dead.empty()) return false;
    const double max_logl = state.live.rbegin()->logl;
    const double logv_next = shrink_logv(state.logv_current, state.live.size());
    return logv_next + max_logl < std::log(frac) + state.logz_current;
}

bool live_plateau(const RunState& state) {
    if (state.live.size() < 2) return false;
    return state.live.begin()->logl == state.live.rbegin()->logl;
}

std::vector<DeadRecord> finalize_live(RunState& state) {
    std::vector<DeadRecord> added;
    const std::size_t n = state.live.size();
    if (n == 0) return added;
    const double logv_each = state.logv_current - std::log(static_cast<double>(n));
    for (const LivePoint& p : state.live) {
        DeadRecord rec;
        rec.point = p;
        rec.logv = logv_each;
        rec.logw = p.logl + logv_each;
        rec.n_live_at_death = static_cast<std::uint32_t>(n);
        state.logz_current = log_sum_exp(state.logz_current, rec.logw);
        state.dead.push_back(rec);
        added.push_back(rec);
    }
    state.live.clear();
    return added;
}

VanillaRunResult run_vanilla(const Problem& problem, std::size_t n_live, double frac,
                             ConstrainedSampler& sampler, Rng rng,
                             std::uint64_t max_iterations) {
    VanillaRunResult out;
    out.state = init_live(problem, n_live, rng);
    RunState& state = out.state;
    out.reason = StopReason::IterationLimit;
    std::uint64_t iteration = 0;
    while (iteration < max_iterations) {
        std::vector<LivePoint> live_sorted(state.live.begin(), state.live.end());
        if (sampler.refit_due(iteration, state.live.size()))
            sampler.refit(live_sorted, iteration, state.rng);
        if (live_plateau(state)) {
            out.reason = StopReason::FlatLive;
            break;
        }
        if (termination_check(state, frac)) {
            out.reason = StopReason::Converged;
            break;
        }
        try {
            ns_step(state, sampler, iteration);
        } catch (const SamplerExhausted&) {
            out.reason = StopReason::SamplerExhausted;
            break;
        }
        ++iteration;
    }
    out.iterations = iteration;
    finalize_live(state);
    return out;
}

std::optional<Candidate> UniformPriorSampler::propose(double threshold,
                                                      const std::vector<LivePoint>&,
                                                      std::uint64_t, Rng& rng) {
    for (std::uint64_t i = 0; i < budget_; ++i) {
        ++n_proposals;
        UnitPoint u(problem_.dim);
        for (int k = 0; k < problem_.dim; ++k) u[k] = rng.uniform();
        ParamPoint v = prior_transform(problem_, u);
        const double ll = eval_loglike(problem_, v);
        ++n_evals;
        if (ll > threshold) {
            ++n_accepts;
            return Candidate{std::move(u), std::move(v), ll};
        }
    }
    return std::nullopt;
}

} // namespace nest
