#include "nest/tree.hpp"

#include "nest/errors.hpp"

#include <cmath>

namespace nest {

std::uint64_t SampleTree::add_child(std::uint64_t parent, LivePoint point) {
    const std::uint64_t id = nodes_.size();
    Node n;
    n.id = id;
    n.parent = parent;
    n.root_edge = parent == 0 ? id : nodes_[parent].root_edge;
    point.serial = id;
    n.point = std::move(point);
    nodes_.push_back(std::move(n));
    nodes_[parent].children.push_back(id);
    return id;
}

bool SampleTree::parent_child_ordered() const {
    for (const Node& n : nodes_) {
        if (n.id == 0) continue;
        const Node& p = nodes_[n.parent];
        const double parent_logl = p.point ? p.point->logl : neg_inf;
        if (!(n.point->logl > parent_logl)) return false;
    }
    return true;
}

std::pair<double, std::uint64_t> ExplorerStack::pop_lowest() {
    auto it = open_.begin();
    const auto out = *it;
    open_.erase(it);
    return out;
}

std::size_t ExplorerStack::count_below(double logl) const {
    std::size_t k = 0;
    for (const auto& [l, id] : open_) {
        if (l < logl)
            ++k;
        else
            break;
    }
    return k;
}

std::size_t should_attach_child(const Node& node, const ExplorerStack& stack,
                                const AttachmentPolicy& policy, const AttachDecision& in) {
    (void)node;
    const std::size_t w_after = stack.width();
    if (w_after >= 2 && in.logz_current != neg_inf) {
        const double logv_next = shrink_logv(in.logv_current, w_after);
        if (logv_next + stack.max_logl() < std::log(in.frac) + in.logz_current) return 0;
    }
    std::size_t n = 0;
    if (w_after < policy.min_width) n = 1;
    if (in.node_logw - in.logz_current > std::log(policy.weight_frac_threshold) &&
        w_after + n < policy.max_width)
        n += 1;
    return n;
}

TreeRunState build_root(const Problem& problem, std::size_t n_init, Rng rng) {
    if (n_init < 2) throw UsageError("build_root: at least 2 initial children required");
    TreeRunState run;
    run.rng = rng;
    for (std::size_t i = 0; i < n_init; ++i) {
        LivePoint p;
        p.u.resize(problem.dim);
        for (int k = 0; k < problem.dim; ++k) p.u[k] = run.rng.uniform();
        p.v = prior_transform(problem, p.u);
        p.logl = eval_loglike(problem, p.v);
        p.birth_logl = neg_inf;
        const std::uint64_t id = run.tree.add_child(0, std::move(p));
        run.stack.insert(run.tree.node(id).point->logl, id);
    }
    return run;
}

std::vector<LivePoint> open_live_points(const TreeRunState& run) {
    std::vector<LivePoint> live;
    live.reserve(run.stack.width());
    for (const auto& [logl, id] : run.stack) live.push_back(*run.tree.node(id).point);
    return live;
}

void breadth_first_run(TreeRunState& run, const AttachmentPolicy& policy,
                       ConstrainedSampler& sampler, const Problem& problem, double frac,
                       std::uint64_t max_iterations, const TreeRunHooks* hooks) {
    if (policy.min_width < 2 || policy.max_width < policy.min_width)
        throw UsageError("breadth_first_run: policy requires 2 <= min_width <= max_width");

    run.reason = StopReason::IterationLimit;
    while (true) {
        if (run.iteration >= max_iterations) {
            run.reason = StopReason::IterationLimit;
            break;
        }
        if (hooks && hooks->before_iteration && !hooks->before_iteration(run.iteration)) {
            run.reason = StopReason::Interrupted;
            break;
        }
        if (sampler.refit_due(run.iteration, run.stack.width()))
            sampler.refit(open_live_points(run), run.iteration, run.rng);
        if (run.stack.empty()) {
            run.reason = StopReason::StackEmpty;
            break;
        }
        if (run.stack.width() >= 2 && run.stack.min_logl() == run.stack.max_logl()) {
            run.reason = StopReason::FlatLive;
            break;
        }
        if (run.logz_current != neg_inf && run.stack.width() >= 2) {
            const double logv_next = shrink_logv(run.logv_current, run.stack.width());
            if (logv_next + run.stack.max_logl() < std::log(frac) + run.logz_current) {
                run.reason = StopReason::Converged;
                break;
            }
        }

        const std::uint64_t iter = run.iteration;
        const std::size_t width = run.stack.width();
        const auto [logl, id] = run.stack.pop_lowest();
        const Node& node = run.tree.node(id);

        DeadRecord rec;
        rec.point = *node.point;
        rec.logv = shell_logv(run.logv_current, width);
        rec.logw = logl + rec.logv;
        rec.n_live_at_death = static_cast<std::uint32_t>(width);
        run.logv_current = width >= 2 ? shrink_logv(run.logv_current, width) : neg_inf;
        run.logz_current = log_sum_exp(run.logz_current, rec.logw);
        run.dead.push_back(rec);
        if (hooks && hooks->on_death) hooks->on_death(rec, node);

        const std::size_t n_children = should_attach_child(
            node, run.stack, policy,
            AttachDecision{rec.logw, run.logv_current, run.logz_current, frac});

        bool exhausted = false;
        for (std::size_t j = 0; j < n_children; ++j) {
            const std::vector<LivePoint> live_now = open_live_points(run);
            auto cand = sampler.propose(logl, live_now, iter, run.rng);
            if (!cand) {
                exhausted = true;
                break;
            }
            LivePoint p;
            p.u = std::move(cand->u);
            p.v = std::move(cand->v);
            p.logl = cand->logl;
            p.birth_logl = logl;
            const std::uint32_t rank =
                static_cast<std::uint32_t>(run.stack.count_below(p.logl));
            const std::uint64_t child_id = run.tree.add_child(id, std::move(p));
            run.stack.insert(run.tree.node(child_id).point->logl, child_id);
            if (hooks && hooks->on_birth)
                hooks->on_birth(run.tree.node(child_id), rank,
                                static_cast<std::uint32_t>(run.stack.width()));
        }
        run.iteration = iter + 1;
        if (exhausted) {
            run.reason = StopReason::SamplerExhausted;
            break;
        }
    }
}

std::vector<DeadRecord> finalize_open(TreeRunState& run) {
    std::vector<DeadRecord> added;
    const std::size_t n = run.stack.width();
    if (n == 0) return added;
    const double logv_each = run.logv_current - std::log(static_cast<double>(n));
    for (const auto& [logl, id] : run.stack) {
        DeadRecord rec;
        rec.point = *run.tree.node(id).point;
        rec.logv = logv_each;
        rec.logw = logl + logv_each;
        rec.n_live_at_death = static_cast<std::uint32_t>(n);
        run.logz_current = log_sum_exp(run.logz_current, rec.logw);
        run.dead.push_back(rec);
        added.push_back(rec);
    }
    return added;
}

} // namespace nest
