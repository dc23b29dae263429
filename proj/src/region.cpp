#include "nest/region.hpp"

#include "nest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nest {

namespace {

Eigen::VectorXd to_vec(const std::vector<double>& x) {
    return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

UnitPoint to_std(const Eigen::VectorXd& x) {
    return UnitPoint(x.data(), x.data() + x.size());
}

Eigen::MatrixXd rows_from(const std::vector<std::vector<double>>& pts) {
    const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
    const Eigen::Index d = static_cast<Eigen::Index>(pts.front().size());
    Eigen::MatrixXd m(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = pts[i][j];
    return m;
}

double ridge_for(const Eigen::MatrixXd& cov) {
    const double tr = cov.trace();
    const double d = static_cast<double>(cov.rows());
    const double r = 1e-10 * tr / d;
    return r > 1e-30 ? r : 1e-30;
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& pts) {
    const Eigen::Index n = pts.rows();
    Eigen::MatrixXd centered = pts.rowwise() - pts.colwise().mean();
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    return (centered.transpose() * centered) / denom;
}

struct Whitening {
    Eigen::MatrixXd forward;  // cov^{-1/2}
    Eigen::MatrixXd inverse;  // cov^{1/2}
    double log_det_inverse = 0.0;
};

Whitening whitening_from_cov(const Eigen::MatrixXd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const double ridge = ridge_for(cov);
    Eigen::VectorXd lam = es.eigenvalues();
    Whitening w;
    if (!(lam.maxCoeff() > 0.0)) {
        const Eigen::Index d = cov.rows();
        w.forward = Eigen::MatrixXd::Identity(d, d);
        w.inverse = Eigen::MatrixXd::Identity(d, d);
        return w;
    }
    Eigen::VectorXd sqrt_lam(lam.size()), inv_sqrt_lam(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        const double l = std::max(lam[i], ridge);
        sqrt_lam[i] = std::sqrt(l);
        inv_sqrt_lam[i] = 1.0 / sqrt_lam[i];
        w.log_det_inverse += 0.5 * std::log(l);
    }
    const Eigen::MatrixXd& q = es.eigenvectors();
    w.forward = q * inv_sqrt_lam.asDiagonal() * q.transpose();
    w.inverse = q * sqrt_lam.asDiagonal() * q.transpose();
    return w;
}

// log volume of the unit d-ball.
double log_unit_ball_volume(int d) {
    return 0.5 * d * std::log(M_PI) - std::lgamma(0.5 * d + 1.0);
}

// Uniform direction scaled to a uniform draw in the unit ball.
Eigen::VectorXd unit_ball_draw(int d, Rng& rng) {
    Eigen::VectorXd z(d);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (int i = 0; i < d; ++i) {
            z[i] = rng.normal();
            norm2 += z[i] * z[i];
        }
    } while (norm2 == 0.0);
    const double radius = std::pow(rng.uniform(), 1.0 / d);
    return z * (radius / std::sqrt(norm2));
}

bool in_cube(const Eigen::VectorXd& u) {
    for (Eigen::Index i = 0; i < u.size(); ++i)
        if (!(u[i] >= 0.0 && u[i] <= 1.0)) return false;
    return true;
}

} // namespace

const char* source_name(ProposalSource s) {
    switch (s) {
        case ProposalSource::WholePrior: return "whole-prior";
        case ProposalSource::UEllipsoid: return "u-ellipsoid";
        case ProposalSource::BallUnion: return "ball-union";
    }
    return "?";
}

double BallUnion::nearest2(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd wu = whitening * u;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < centers_whitened.rows(); ++i) {
        const double d2 = (centers_whitened.row(i).transpose() - wu).squaredNorm();
        if (d2 < best) best = d2;
    }
    return best;
}

int BallUnion::multiplicity_whitened(const Eigen::VectorXd& wu) const {
    int count = 0;
    for (Eigen::Index i = 0; i < centers_whitened.rows(); ++i)
        if ((centers_whitened.row(i).transpose() - wu).squaredNorm() <= r2) ++count;
    return count;
}

BallUnion fit_ball_union(const std::vector<UnitPoint>& live_u, int n_bootstrap, Rng& rng) {
    if (live_u.size() < 2) throw UsageError("fit_ball_union: needs at least 2 points");
    if (n_bootstrap < 1) throw UsageError("fit_ball_union: n_bootstrap must be >= 1");

    BallUnion bu;
    bu.centers = rows_from(live_u);
    const Whitening w = whitening_from_cov(sample_covariance(bu.centers));
    bu.whitening = w.forward;
    bu.unwhitening = w.inverse;
    bu.log_det_unwhitening = w.log_det_inverse;
    bu.centers_whitened = bu.centers * bu.whitening.transpose();

    const std::size_t n = live_u.size();
    std::vector<char> selected(n);
    double r2 = 0.0;
    for (int round = 0; round < n_bootstrap; ++round) {
        std::fill(selected.begin(), selected.end(), 0);
        for (std::size_t i = 0; i < n; ++i) selected[rng.below(n)] = 1;
        for (std::size_t i = 0; i < n; ++i) {
            if (selected[i]) continue;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) {
                if (!selected[j]) continue;
                const double d2 =
                    (bu.centers_whitened.row(i) - bu.centers_whitened.row(j)).squaredNorm();
                if (d2 < best) best = d2;
            }
            if (best > r2) r2 = best;
        }
    }
    bu.r2 = r2;
    return bu;
}

double leave_one_out_r2(const std::vector<UnitPoint>& points, const Eigen::MatrixXd& whitening) {
    if (points.size() < 2) throw UsageError("leave_one_out_r2: needs at least 2 points");
    Eigen::MatrixXd wpts = rows_from(points) * whitening.transpose();
    double r2 = 0.0;
    for (Eigen::Index i = 0; i < wpts.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < wpts.rows(); ++j) {
            if (i == j) continue;
            const double d2 = (wpts.row(i) - wpts.row(j)).squaredNorm();
            if (d2 < best) best = d2;
        }
        if (best > r2) r2 = best;
    }
    return r2;
}

Ellipsoid fit_ellipsoid(const std::vector<std::vector<double>>& points,
                        EllipsoidSpace space, int n_bootstrap, Rng& rng) {
    if (points.size() < 2) throw UsageError("fit_ellipsoid: needs at least 2 points");
    const Eigen::MatrixXd pts = rows_from(points);
    const Eigen::Index n = pts.rows();
    const Eigen::Index d = pts.cols();

    const Eigen::VectorXd mean = pts.colwise().mean();
    Eigen::MatrixXd cov = sample_covariance(pts);
    cov.diagonal().array() += ridge_for(cov);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(ridge_for(cov));
    const Eigen::MatrixXd q = es.eigenvectors();
    const Eigen::MatrixXd prec0 =
        q * lam.cwiseInverse().asDiagonal() * q.transpose();

    auto maha2 = [](const Eigen::MatrixXd& p, const Eigen::VectorXd& c,
                    const Eigen::VectorXd& x) {
        const Eigen::VectorXd dd = x - c;
        return dd.dot(p * dd);
    };

    // Floor: every construction point must end up inside.
    double f = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        f = std::max(f, maha2(prec0, mean, pts.row(i).transpose()));

    std::vector<std::uint32_t> draw(n);
    std::vector<char> selected(n);
    for (int round = 0; round < n_bootstrap; ++round) {
        std::fill(selected.begin(), selected.end(), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            draw[i] = static_cast<std::uint32_t>(rng.below(n));
            selected[draw[i]] = 1;
        }
        Eigen::MatrixXd sub(n, d);
        for (Eigen::Index i = 0; i < n; ++i) sub.row(i) = pts.row(draw[i]);
        const Eigen::VectorXd m_r = sub.colwise().mean();
        Eigen::MatrixXd c_r = sample_covariance(sub);
        c_r.diagonal().array() += ridge_for(c_r);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_r(c_r);
        const Eigen::VectorXd lam_r = es_r.eigenvalues().cwiseMax(ridge_for(c_r));
        const Eigen::MatrixXd prec_r =
            es_r.eigenvectors() * lam_r.cwiseInverse().asDiagonal() *
            es_r.eigenvectors().transpose();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (selected[i]) continue;
            f = std::max(f, maha2(prec_r, m_r, pts.row(i).transpose()));
        }
    }
    if (f <= 0.0) f = 1.0;
    f *= 1.0 + 1e-12; // keep boundary points inside under roundoff

    Ellipsoid e;
    e.space = space;
    e.center = mean;
    e.precision = prec0 / f;
    Eigen::VectorXd sqrt_lam(d);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        sqrt_lam[i] = std::sqrt(f * lam[i]);
        logdet += std::log(f * lam[i]);
    }
    e.sample_chol = q * sqrt_lam.asDiagonal();
    e.log_volume = log_unit_ball_volume(static_cast<int>(d)) + 0.5 * logdet;
    return e;
}

bool region_contains(const RegionSet& rs, const UnitPoint& u, const Problem& problem) {
    const Eigen::VectorXd ue = to_vec(u);
    if (!in_cube(ue)) return false;
    if (!rs.u_ell.contains(ue)) return false;
    if (!rs.balls.contains(ue)) return false;
    if (rs.use_v_ell) {
        const ParamPoint v = prior_transform(problem, u);
        if (!rs.v_ell.contains(to_vec(v))) return false;
    }
    return true;
}

RegionSampler::RegionSampler(Problem problem, RegionOptions opt)
    : problem_(std::move(problem)), opt_(opt) {
    window_.cap = opt_.window;
}

bool RegionSampler::refit_due(std::uint64_t iteration, std::size_t width) const {
    if (force_refit_) return true;
    return refit_schedule(iteration, last_fit_, width);
}

void RegionSampler::Window::push(ProposalSource s, bool feasible) {
    const auto i = static_cast<std::uint8_t>(s);
    events.emplace_back(i, feasible);
    ++n[i];
    if (feasible) ++ok[i];
    while (events.size() > cap) {
        const auto& [j, was_ok] = events.front();
        --n[j];
        if (was_ok) --ok[j];
        events.pop_front();
    }
}

double RegionSampler::Window::rate(ProposalSource s) const {
    const auto i = static_cast<std::uint8_t>(s);
    return (ok[i] + 1.0) / (n[i] + 2.0);
}

void RegionSampler::Window::clear() {
    events.clear();
    n.fill(0);
    ok.fill(0);
}

void RegionSampler::refit(const std::vector<LivePoint>& live_sorted, std::uint64_t iteration,
                          Rng& rng) {
    if (live_sorted.size() < 2) return;
    std::vector<UnitPoint> us;
    std::vector<std::vector<double>> vs;
    us.reserve(live_sorted.size());
    vs.reserve(live_sorted.size());
    for (const auto& p : live_sorted) {
        us.push_back(p.u);
        vs.push_back(p.v);
    }
    RegionSet rs;
    rs.balls = fit_ball_union(us, opt_.n_bootstrap, rng);
    rs.u_ell = fit_ellipsoid(us, EllipsoidSpace::U, opt_.n_bootstrap, rng);
    rs.v_ell = fit_ellipsoid(vs, EllipsoidSpace::V, opt_.n_bootstrap, rng);
    rs.use_v_ell = opt_.use_v_ellipsoid;
    region_ = std::move(rs);
    last_fit_ = iteration;
    force_refit_ = false;
    period_evals_ = 0;
    period_accepts_ = 0;
    window_.clear();
    probe_sources(rng);
}

void RegionSampler::restore_mode(const std::string& token) {
    if (token == "region") force_refit_ = true;
}

ProposalSource RegionSampler::current_source() const {
    if (!region_) return ProposalSource::WholePrior;
    return choose_source();
}

double RegionSampler::period_accept_rate() const {
    if (period_evals_ == 0) return 1.0;
    return static_cast<double>(period_accepts_) / static_cast<double>(period_evals_);
}

std::string RegionSampler::describe() const {
    std::ostringstream os;
    os << source_name(current_source());
    return os.str();
}

std::optional<Eigen::VectorXd> RegionSampler::draw_source(ProposalSource src, Rng& rng) const {
    const int d = problem_.dim;
    switch (src) {
        case ProposalSource::WholePrior: {
            Eigen::VectorXd u(d);
            for (int i = 0; i < d; ++i) u[i] = rng.uniform();
            return u;
        }
        case ProposalSource::UEllipsoid: {
            const Ellipsoid& e = region_->u_ell;
            Eigen::VectorXd u = e.center + e.sample_chol * unit_ball_draw(d, rng);
            if (!in_cube(u)) return std::nullopt;
            return u;
        }
        case ProposalSource::BallUnion: {
            const BallUnion& b = region_->balls;
            const std::size_t idx = rng.below(b.size());
            const Eigen::VectorXd wp = b.centers_whitened.row(static_cast<Eigen::Index>(idx))
                                           .transpose() +
                                       std::sqrt(b.r2) * unit_ball_draw(d, rng);
            int mult = b.multiplicity_whitened(wp);
            if (mult < 1) mult = 1;
            const bool keep = rng.uniform() * mult < 1.0;
            if (!keep) return std::nullopt;
            Eigen::VectorXd u = b.unwhitening * wp;
            if (!in_cube(u)) return std::nullopt;
            return u;
        }
    }
    return std::nullopt;
}

bool RegionSampler::geometric_pass(ProposalSource src, const Eigen::VectorXd& u,
                                   ParamPoint& v_out) const {
    const RegionSet& rs = *region_;
    if (src != ProposalSource::UEllipsoid && !rs.u_ell.contains(u)) return false;
    if (src != ProposalSource::BallUnion && !rs.balls.contains(u)) return false;
    v_out = prior_transform(problem_, to_std(u));
    if (rs.use_v_ell && !rs.v_ell.contains(to_vec(v_out))) return false;
    return true;
}

void RegionSampler::probe_sources(Rng& rng) {
    force_whole_prior_ = false;
    const BallUnion& b = region_->balls;
    int union_kept = 0;
    for (ProposalSource src : {ProposalSource::BallUnion, ProposalSource::UEllipsoid,
                               ProposalSource::WholePrior}) {
        for (int i = 0; i < opt_.probe_draws; ++i) {
            auto u = draw_source(src, rng);
            bool ok = false;
            if (u) {
                if (src == ProposalSource::BallUnion) ++union_kept;
                ParamPoint v;
                ok = geometric_pass(src, *u, v);
            }
            window_.push(src, ok);
        }
    }
    // Estimated union volume: n_balls * V_ball * P(multiplicity-kept & in cube).
    const double log_ball_vol = log_unit_ball_volume(problem_.dim) +
                                0.5 * problem_.dim * std::log(b.r2 > 0 ? b.r2 : 0.0) +
                                b.log_det_unwhitening;
    const double kept_rate = (union_kept + 1.0) / (opt_.probe_draws + 2.0);
    const double log_union_vol =
        std::log(static_cast<double>(b.size())) + log_ball_vol + std::log(kept_rate);
    if (!(log_union_vol < 0.0)) force_whole_prior_ = true;
}

ProposalSource RegionSampler::choose_source() const {
    if (force_whole_prior_) return ProposalSource::WholePrior;
    ProposalSource best = ProposalSource::BallUnion;
    double best_rate = window_.rate(best);
    for (ProposalSource s : {ProposalSource::UEllipsoid, ProposalSource::WholePrior}) {
        const double r = window_.rate(s);
        if (r > best_rate) {
            best = s;
            best_rate = r;
        }
    }
    return best;
}

std::optional<Candidate> RegionSampler::propose(double threshold,
                                                const std::vector<LivePoint>& live_sorted,
                                                std::uint64_t iteration, Rng& rng) {
    std::uint64_t consecutive = 0;
    int stale_refits = 0;
    const int d = problem_.dim;
    while (true) {
        ++n_proposals;
        const ProposalSource src =
            region_ ? choose_source() : ProposalSource::WholePrior;
        std::optional<Eigen::VectorXd> u = draw_source(src, rng);
        bool feasible = false;
        ParamPoint v;
        if (u) {
            if (region_) {
                feasible = geometric_pass(src, *u, v);
            } else {
                feasible = true;
                v = prior_transform(problem_, to_std(*u));
            }
        }
        if (region_) window_.push(src, feasible);
        if (feasible) {
            const double ll = eval_loglike(problem_, v);
            ++n_evals;
            ++period_evals_;
            if (ll > threshold) {
                ++n_accepts;
                ++period_accepts_;
                last_accepted_source_ = src;
                UnitPoint uu(u->data(), u->data() + d);
                return Candidate{std::move(uu), std::move(v), ll};
            }
        }
        if (++consecutive >= opt_.stale_budget) {
            if (stale_refits++ == 0 && live_sorted.size() >= 2) {
                refit(live_sorted, iteration, rng);
                consecutive = 0;
                continue;
            }
            return std::nullopt;
        }
    }
}

} // namespace nest
