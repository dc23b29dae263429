#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nest {

/// Coordinates in the d-dimensional unit hypercube (u-space).
using UnitPoint = std::vector<double>;
/// Coordinates in physical parameter units (v-space).
using ParamPoint = std::vector<double>;

/// A model under analysis: a prior expressed as a transform from the unit
/// cube, and a log-likelihood over physical parameters. Instances are
/// immutable after construction; transform and loglike must be pure, so they
/// are safe to evaluate from concurrent workers.
struct Problem {
    std::string name;
    int dim = 0;
    std::function<ParamPoint(const UnitPoint&)> transform;
    std::function<double(const ParamPoint&)> loglike;
    /// Externally computed reference log-evidence, when one is known.
    std::optional<double> ref_logz;
};

/// Applies the prior transform with precondition checks (dimension, [0,1]
/// range). Throws UsageError on misuse.
ParamPoint prior_transform(const Problem& problem, const UnitPoint& u);

/// Evaluates the log-likelihood. Returns a finite value or -inf (rejected
/// point). A NaN from the model function throws RunError, since the sampling
/// loop needs a total order on likelihoods.
double eval_loglike(const Problem& problem, const ParamPoint& v);

/// Transform + evaluate for a batch of unit points. Evaluation may fan out
/// over `threads` workers; results are returned in input order regardless of
/// the thread count, so callers stay deterministic.
std::vector<double> evaluate_batch(const Problem& problem,
                                   std::span<const UnitPoint> points,
                                   int threads = 1);

/// Built-in benchmark problems:
///   gauss2d, gauss10d  - uniform prior [-5,5]^d, standard normal likelihood
///   funnel2d           - log-scale parameter plus conditionally scaled
///                        coordinate; likelihood standard normal
///   bimodal2d          - two equal Gaussian modes (sigma=0.1) at (+-2, 0)
///   sphere-shell       - likelihood -r^2 inside the inscribed ball, -inf
///                        outside; constrained volumes are analytic
Problem catalog(const std::string& name);
std::vector<std::string> catalog_names();

/// Inverse CDF of the standard normal, accurate to ~1e-15 over (0,1).
double normal_icdf(double p);

/// Inverse CDF of the uniform distribution on [lo, hi].
inline double uniform_icdf(double u, double lo, double hi) {
    return lo + (hi - lo) * u;
}

} // namespace nest
