#pragma once

#include "nest/sampler.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nest {

/// Equal-radius balls centred on the live points, with distances measured
/// in a covariance-whitened metric. The radius is calibrated by bootstrap:
/// it is the largest whitened distance from a left-out point to its nearest
/// resampled neighbour, maximised over rounds.
struct BallUnion {
    Eigen::MatrixXd centers;           // one live u-point per row
    Eigen::MatrixXd centers_whitened;  // centers * whitening^T
    Eigen::MatrixXd whitening;         // maps u-space displacements to the metric
    Eigen::MatrixXd unwhitening;       // inverse map
    double r2 = 0.0;
    double log_det_unwhitening = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(centers.rows()); }
    /// Squared whitened distance to the nearest center.
    double nearest2(const Eigen::VectorXd& u) const;
    bool contains(const Eigen::VectorXd& u) const { return nearest2(u) <= r2; }
    /// Number of balls covering the whitened point.
    int multiplicity_whitened(const Eigen::VectorXd& wu) const;
};

enum class EllipsoidSpace { U, V };

struct Ellipsoid {
    Eigen::VectorXd center;
    Eigen::MatrixXd precision;    // membership: (x-c)^T P (x-c) <= 1
    Eigen::MatrixXd sample_chol;  // A with A A^T = enlarged covariance
    double log_volume = 0.0;
    EllipsoidSpace space = EllipsoidSpace::U;

    double maha2(const Eigen::VectorXd& x) const {
        const Eigen::VectorXd d = x - center;
        return d.dot(precision * d);
    }
    bool contains(const Eigen::VectorXd& x) const { return maha2(x) <= 1.0; }
};

enum class ProposalSource : std::uint8_t { WholePrior = 0, UEllipsoid = 1, BallUnion = 2 };
const char* source_name(ProposalSource s);

/// The intersection constraint: unit cube, ball union and u-space ellipsoid
/// on u, v-space ellipsoid on the transformed point.
struct RegionSet {
    BallUnion balls;
    Ellipsoid u_ell;
    Ellipsoid v_ell;
    bool use_v_ell = true;
};

/// Whitened-metric ball union fit. Throws UsageError for fewer than 2 points.
BallUnion fit_ball_union(const std::vector<UnitPoint>& live_u, int n_bootstrap, Rng& rng);

/// Bootstrap-enlarged covariance ellipsoid. Never aborts on degenerate
/// input: near-singular covariances get a diagonal ridge.
Ellipsoid fit_ellipsoid(const std::vector<std::vector<double>>& points,
                        EllipsoidSpace space, int n_bootstrap, Rng& rng);

/// Deterministic leave-one-out radius (max over points of the squared
/// whitened distance to the nearest other point). Reference variant used by
/// tests; no resampling.
double leave_one_out_r2(const std::vector<UnitPoint>& points, const Eigen::MatrixXd& whitening);

/// Membership in the full intersection (cube, balls, u-ellipsoid,
/// transformed v-ellipsoid).
bool region_contains(const RegionSet& rs, const UnitPoint& u, const Problem& problem);

/// Refit roughly once per volume e-fold.
inline bool refit_schedule(std::uint64_t iteration, std::uint64_t last_fit, std::size_t width) {
    return iteration - last_fit >= width;
}

struct RegionOptions {
    int n_bootstrap = 30;
    std::uint64_t stale_budget = 1'000'000;
    std::size_t window = 1000;
    bool use_v_ellipsoid = true;
    int probe_draws = 64;
};

/// Region-based rejection sampler. Until the first fit it proposes from the
/// whole prior; afterwards it draws from the cost-greedy best of
/// {whole prior, u-ellipsoid, ball union} and filters by the intersection.
class RegionSampler : public ConstrainedSampler {
public:
    RegionSampler(Problem problem, RegionOptions opt = {});

    bool refit_due(std::uint64_t iteration, std::size_t width) const override;
    void refit(const std::vector<LivePoint>& live_sorted, std::uint64_t iteration,
               Rng& rng) override;
    bool snapshot_safe() const override { return !region_.has_value(); }
    std::optional<Candidate> propose(double threshold,
                                     const std::vector<LivePoint>& live_sorted,
                                     std::uint64_t iteration, Rng& rng) override;
    std::string mode_token() const override { return region_ ? "region" : "warmup"; }
    void restore_mode(const std::string& token) override;
    void force_refit() override { force_refit_ = true; }
    void on_snapshot() override {
        period_evals_ = 0;
        period_accepts_ = 0;
    }
    std::string describe() const override;

    bool has_region() const { return region_.has_value(); }
    const RegionSet& region() const { return *region_; }
    ProposalSource current_source() const;
    ProposalSource last_accepted_source() const { return last_accepted_source_; }
    /// Acceptances per likelihood evaluation since the last refit.
    double period_accept_rate() const;

private:
    struct Window {
        std::size_t cap = 1000;
        std::deque<std::pair<std::uint8_t, bool>> events;
        std::array<std::uint32_t, 3> n{};
        std::array<std::uint32_t, 3> ok{};
        void push(ProposalSource s, bool feasible);
        double rate(ProposalSource s) const;
        void clear();
    };

    // Draws one candidate from the source; nullopt on a geometric miss.
    std::optional<Eigen::VectorXd> draw_source(ProposalSource src, Rng& rng) const;
    bool geometric_pass(ProposalSource src, const Eigen::VectorXd& u, ParamPoint& v_out) const;
    void probe_sources(Rng& rng);
    ProposalSource choose_source() const;

    Problem problem_;
    RegionOptions opt_;
    std::optional<RegionSet> region_;
    Window window_;
    bool force_whole_prior_ = false;
    bool force_refit_ = false;
    std::uint64_t last_fit_ = 0;
    std::uint64_t period_evals_ = 0;
    std::uint64_t period_accepts_ = 0;
    ProposalSource last_accepted_source_ = ProposalSource::WholePrior;
};

} // namespace nest
