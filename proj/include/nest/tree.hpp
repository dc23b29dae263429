#pragma once

#include "nest/nscore.hpp"
#include "nest/sampler.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <utility>
#include <vector>

namespace nest {

/// One tree node. The root (id 0) carries no point and stands for the whole
/// prior volume; every other node's logl strictly exceeds its parent's.
struct Node {
    std::uint64_t id = 0;
    std::optional<LivePoint> point;
    std::uint64_t parent = 0;
    std::vector<std::uint64_t> children;
    std::uint64_t root_edge = 0; // ancestor that is a direct child of the root
};

class SampleTree {
public:
    SampleTree() { nodes_.push_back(Node{}); }

    const Node& node(std::uint64_t id) const { return nodes_[id]; }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<std::uint64_t>& root_children() const { return nodes_[0].children; }

    /// Adds a child; the node id doubles as the point's serial.
    std::uint64_t add_child(std::uint64_t parent, LivePoint point);

    /// True when every non-root node's logl strictly exceeds its parent's.
    bool parent_child_ordered() const;

private:
    std::vector<Node> nodes_;
};

/// Open nodes ascending by (logl, id). Its width is the effective live-point
/// count at the current threshold.
class ExplorerStack {
public:
    void insert(double logl, std::uint64_t id) { open_.emplace(logl, id); }
    std::pair<double, std::uint64_t> pop_lowest();
    std::size_t width() const { return open_.size(); }
    bool empty() const { return open_.empty(); }
    double min_logl() const { return open_.begin()->first; }
    double max_logl() const { return open_.rbegin()->first; }
    /// Open entries with logl strictly below the given value.
    std::size_t count_below(double logl) const;
    auto begin() const { return open_.begin(); }
    auto end() const { return open_.end(); }

private:
    std::set<std::pair<double, std::uint64_t>> open_;
};

inline std::size_t width_at(const ExplorerStack& stack) { return stack.width(); }

struct AttachmentPolicy {
    std::size_t min_width = 2;
    std::size_t max_width = 8;
    double weight_frac_threshold = 0.1;
};

/// Inputs for the child-attachment decision at the node just removed.
struct AttachDecision {
    double node_logw = neg_inf;  // mass-weighted contribution of the removed node
    double logv_current = 0.0;   // remaining volume after its removal
    double logz_current = neg_inf;
    double frac = 0.01;
};

/// Number of children to attach to the node being removed: one to keep the
/// width at the policy floor, one more when the node's posterior weight
/// fraction crosses the widening trigger, zero once the termination
/// criterion holds above this threshold.
std::size_t should_attach_child(const Node& node, const ExplorerStack& stack,
                                const AttachmentPolicy& policy, const AttachDecision& in);

struct TreeRunState {
    SampleTree tree;
    ExplorerStack stack;
    std::vector<DeadRecord> dead;
    double logv_current = 0.0;
    double logz_current = neg_inf;
    std::uint64_t iteration = 0;
    StopReason reason = StopReason::Converged;
    Rng rng;
};

/// Root plus n_init children drawn from the whole prior; the stack holds all
/// children. Draw order matches init_live, point for point.
TreeRunState build_root(const Problem& problem, std::size_t n_init, Rng rng);

struct TreeRunHooks {
    /// Called at the top of each iteration, before any sampler refit.
    /// Returning false stops the run cleanly (resumable).
    std::function<bool(std::uint64_t iteration)> before_iteration;
    std::function<void(const DeadRecord&, const Node&)> on_death;
    /// rank: open entries with logl strictly below the new point's at
    /// insertion; n_live: width including the new point.
    std::function<void(const Node&, std::uint32_t rank, std::uint32_t n_live)> on_birth;
};

/// Breadth-first exploration: repeatedly removes the lowest open node,
/// records it with the width at that instant, asks the policy how many
/// children to attach, and samples them at the removed logl as threshold.
/// Stops on convergence, a flat live set, an empty stack, the iteration cap,
/// sampler exhaustion (partial results kept) or the hook's stop signal.
void breadth_first_run(TreeRunState& run, const AttachmentPolicy& policy,
                       ConstrainedSampler& sampler, const Problem& problem, double frac,
                       std::uint64_t max_iterations, const TreeRunHooks* hooks = nullptr);

/// Equal-split closeout over the remaining open nodes (ascending). Leaves
/// the stack intact; returns the appended records.
std::vector<DeadRecord> finalize_open(TreeRunState& run);

/// Open nodes as a sorted live-point vector (the sampler input).
std::vector<LivePoint> open_live_points(const TreeRunState& run);

} // namespace nest
