#include "nest/stepsampler.hpp"

#include "nest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace nest {

namespace {

// t-range along `dir` through x0 that stays inside [0,1]^d.
std::pair<double, double> cube_range(const UnitPoint& x0, const std::vector<double>& dir) {
    double t_lo = -std::numeric_limits<double>::infinity();
    double t_hi = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < x0.size(); ++k) {
        if (dir[k] == 0.0) continue;
        const double a = (0.0 - x0[k]) / dir[k];
        const double b = (1.0 - x0[k]) / dir[k];
        t_lo = std::max(t_lo, std::min(a, b));
        t_hi = std::min(t_hi, std::max(a, b));
    }
    if (!(t_lo <= 0.0)) t_lo = 0.0;
    if (!(t_hi >= 0.0)) t_hi = 0.0;
    return {t_lo, t_hi};
}

UnitPoint point_at(const UnitPoint& x0, const std::vector<double>& dir, double t) {
    UnitPoint x(x0.size());
    for (std::size_t k = 0; k < x0.size(); ++k) {
        double c = x0[k] + t * dir[k];
        if (c < 0.0) c = 0.0;
        if (c > 1.0) c = 1.0;
        x[k] = c;
    }
    return x;
}

std::vector<double> isotropic_direction(int d, Rng& rng) {
    std::vector<double> dir(d);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (int k = 0; k < d; ++k) {
            dir[k] = rng.normal();
            norm2 += dir[k] * dir[k];
        }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& c : dir) c *= inv;
    return dir;
}

std::vector<double> apply_metric(const Eigen::MatrixXd& m, const std::vector<double>& dir) {
    Eigen::VectorXd v =
        m * Eigen::Map<const Eigen::VectorXd>(dir.data(), static_cast<Eigen::Index>(dir.size()));
    const double n = v.norm();
    if (n > 0.0) v /= n;
    return std::vector<double>(v.data(), v.data() + v.size());
}

} // namespace

WalkState slice_step(WalkState ws, const std::vector<double>& direction,
                     const StepConfig& cfg, const Problem& problem, Rng& rng) {
    const UnitPoint& x0 = ws.current.u;
    const auto [t_lo, t_hi] = cube_range(x0, direction);

    auto above = [&](double t) {
        const UnitPoint x = point_at(x0, direction, t);
        const ParamPoint v = prior_transform(problem, x);
        ++ws.n_evals;
        return eval_loglike(problem, v) > ws.threshold;
    };

    // Stepping out: double the reach each round until both ends leave the
    // slice or hit the cube.
    double t_left = std::max(t_lo, -cfg.initial_scale);
    double t_right = std::min(t_hi, cfg.initial_scale);
    double reach = cfg.initial_scale;
    bool done_left = t_left <= t_lo;
    bool done_right = t_right >= t_hi;
    for (int k = 0; k < cfg.max_expand && !(done_left && done_right); ++k) {
        if (!done_left) {
            if (above(t_left)) {
                t_left = std::max(t_lo, t_left - reach);
                if (t_left <= t_lo) done_left = true;
            } else {
                done_left = true;
            }
        }
        if (!done_right) {
            if (above(t_right)) {
                t_right = std::min(t_hi, t_right + reach);
                if (t_right >= t_hi) done_right = true;
            } else {
                done_right = true;
            }
        }
        reach *= 2.0;
    }

    // Shrink: propose uniformly, cut the rejected side back to the proposal.
    while (true) {
        if (t_right - t_left < 1e-12) {
            std::ostringstream os;
            os << "slice interval collapsed below 1e-12 at threshold "
               << format_double(ws.threshold) << " (logl=" << format_double(ws.current.logl)
               << ")";
            throw WalkError(os.str());
        }
        const double t = rng.uniform(t_left, t_right);
        const UnitPoint x = point_at(x0, direction, t);
        const ParamPoint v = prior_transform(problem, x);
        const double ll = eval_loglike(problem, v);
        ++ws.n_evals;
        if (ll > ws.threshold) {
            ws.current.u = x;
            ws.current.v = v;
            ws.current.logl = ll;
            return ws;
        }
        if (t < 0.0)
            t_left = t;
        else
            t_right = t;
    }
}

WalkState hit_and_run_step(WalkState ws, const StepConfig& cfg, const Problem& problem,
                           Rng& rng) {
    const std::vector<double> dir = isotropic_direction(problem.dim, rng);
    return slice_step(std::move(ws), dir, cfg, problem, rng);
}

LivePoint generate_independent(const LivePoint& seed, double threshold,
                               const StepConfig& cfg, WalkScheme scheme,
                               const Problem& problem, Rng& rng,
                               const Eigen::MatrixXd* whitening,
                               std::uint64_t* eval_count) {
    if (cfg.n_steps < 1) throw UsageError("generate_independent: n_steps must be >= 1");
    const int d = problem.dim;
    WalkState ws;
    ws.current = seed;
    ws.threshold = threshold;

    std::vector<int> axes(d);
    std::iota(axes.begin(), axes.end(), 0);

    for (int step = 0; step < cfg.n_steps; ++step) {
        if (scheme == WalkScheme::AxisSlice) {
            const int phase = step % d;
            if (phase == 0) {
                for (int k = d - 1; k > 0; --k)
                    std::swap(axes[k], axes[rng.below(static_cast<std::uint64_t>(k) + 1)]);
            }
            std::vector<double> dir(d, 0.0);
            dir[axes[phase]] = 1.0;
            if (whitening) dir = apply_metric(*whitening, dir);
            ws = slice_step(std::move(ws), dir, cfg, problem, rng);
        } else {
            std::vector<double> dir = isotropic_direction(d, rng);
            if (whitening) dir = apply_metric(*whitening, dir);
            ws = slice_step(std::move(ws), dir, cfg, problem, rng);
        }
    }
    if (eval_count) *eval_count += ws.n_evals;
    ws.current.birth_logl = threshold;
    ws.current.serial = 0;
    return ws.current;
}

StepSampler::StepSampler(Problem problem, StepOptions opt)
    : problem_(std::move(problem)), opt_(opt) {
    cfg_.n_steps = opt_.n_steps > 0 ? opt_.n_steps : 2 * problem_.dim;
    cfg_.max_expand = opt_.max_expand;
    cfg_.initial_scale = opt_.initial_scale;
}

bool StepSampler::refit_due(std::uint64_t iteration, std::size_t width) const {
    if (!opt_.whiten) return false;
    if (force_refit_) return true;
    return refit_schedule(iteration, last_fit_, width) || !whitening_;
}

void StepSampler::refit(const std::vector<LivePoint>& live_sorted, std::uint64_t iteration,
                        Rng&) {
    if (!opt_.whiten || live_sorted.size() < 2) return;
    const int d = problem_.dim;
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(live_sorted.size()), d);
    for (std::size_t i = 0; i < live_sorted.size(); ++i)
        for (int k = 0; k < d; ++k) pts(static_cast<Eigen::Index>(i), k) = live_sorted[i].u[k];
    Eigen::MatrixXd centered = pts.rowwise() - pts.colwise().mean();
    Eigen::MatrixXd cov =
        (centered.transpose() * centered) / std::max<double>(1.0, pts.rows() - 1.0);
    const double ridge = std::max(1e-10 * cov.trace() / d, 1e-30);
    cov.diagonal().array() += ridge;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    whitening_ = es.eigenvectors() *
                 es.eigenvalues().cwiseMax(ridge).cwiseSqrt().asDiagonal() *
                 es.eigenvectors().transpose();
    last_fit_ = iteration;
    force_refit_ = false;
}

std::string StepSampler::mode_token() const {
    std::string base = opt_.scheme == WalkScheme::AxisSlice ? "slice" : "hitandrun";
    if (opt_.whiten && whitening_) base += "+w";
    return base;
}

void StepSampler::restore_mode(const std::string& token) {
    if (token.size() > 2 && token.substr(token.size() - 2) == "+w") force_refit_ = true;
}

std::string StepSampler::describe() const {
    return opt_.scheme == WalkScheme::AxisSlice ? "axis-slice" : "hit-and-run";
}

std::optional<Candidate> StepSampler::propose(double threshold,
                                              const std::vector<LivePoint>& live_sorted,
                                              std::uint64_t, Rng& rng) {
    if (live_sorted.empty()) return std::nullopt;
    const Eigen::MatrixXd* metric =
        (opt_.whiten && whitening_) ? &*whitening_ : nullptr;
    for (int attempt = 0; attempt < opt_.max_retries; ++attempt) {
        ++n_proposals;
        const std::size_t idx = rng.below(live_sorted.size());
        const LivePoint& seed = live_sorted[idx];
        try {
            LivePoint out = generate_independent(seed, threshold, cfg_, opt_.scheme,
                                                 problem_, rng, metric, &n_evals);
            ++n_accepts;
            return Candidate{out.u, out.v, out.logl};
        } catch (const WalkError&) {
            continue;
        }
    }
    return std::nullopt;
}

} // namespace nest
