#include "nest/integrate.hpp"

#include "nest/errors.hpp"

#include <cmath>

namespace nest {

double beta_shrink(std::size_t n_visible, Rng& rng) {
    if (n_visible < 1) throw UsageError("beta_shrink: n_visible must be >= 1");
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    return std::log(u) / static_cast<double>(n_visible);
}

double effective_sample_size(std::span<const double> w) {
    if (w.empty()) return 0.0;
    double sum = 0.0, sum2 = 0.0;
    for (double x : w) {
        sum += x;
        sum2 += x * x;
    }
    if (sum2 <= 0.0) return 0.0;
    return (sum * sum) / sum2;
}

IntegratorEnsemble IntegratorEnsemble::make(const std::vector<std::uint64_t>& root_children,
                                            std::size_t k, std::uint64_t master_seed) {
    if (root_children.size() < 2)
        throw UsageError("make_ensemble: root needs at least 2 children");
    if (k < 2) throw UsageError("make_ensemble: ensemble size must be >= 2");

    IntegratorEnsemble e;
    e.members_.resize(k);
    const std::size_t n = root_children.size();
    for (std::size_t i = 0; i < k; ++i) {
        BootstrapIntegrator& m = e.members_[i];
        m.rng = Rng::substream(master_seed, i + 1);
        for (std::size_t j = 0; j < n; ++j)
            m.root_mult[root_children[m.rng.below(n)]] += 1;
    }
    for (std::uint64_t edge : root_children) e.point_.root_mult[edge] = 1;
    return e;
}

void IntegratorEnsemble::on_birth(std::uint64_t, std::uint64_t root_edge) {
    for (BootstrapIntegrator& m : members_) m.visible_open += m.multiplicity(root_edge);
    point_.visible_open += 1;
}

void IntegratorEnsemble::on_death(std::uint64_t node_id, std::uint64_t root_edge,
                                  double logl, std::size_t total_width) {
    for (BootstrapIntegrator& m : members_) {
        const std::uint32_t mult = m.multiplicity(root_edge);
        if (mult == 0) continue;
        const std::size_t n_vis = m.visible_open;
        const double log_t = beta_shrink(n_vis, m.rng);
        const double log_shell = m.logv + std::log(-std::expm1(log_t));
        const double logw = logl + log_shell;
        m.logz = log_sum_exp(m.logz, logw);
        m.logv += log_t;
        m.sample_logw.emplace_back(node_id, logw);
        m.visible_open -= mult;
    }
    const double log_shell = point_.logv - std::log(static_cast<double>(total_width));
    const double logw = logl + log_shell;
    point_.logz = log_sum_exp(point_.logz, logw);
    point_.logv = total_width >= 2
                      ? point_.logv + std::log((total_width - 1.0) / total_width)
                      : neg_inf;
    point_.sample_logw.emplace_back(node_id, logw);
    point_.visible_open -= 1;
}

void IntegratorEnsemble::finalize(const std::vector<OpenNode>& open) {
    if (finalized_) throw UsageError("ensemble: finalize called twice");
    finalized_ = true;
    for (BootstrapIntegrator& m : members_) {
        const std::size_t n_vis = m.visible_open;
        if (n_vis == 0) continue;
        for (const OpenNode& o : open) {
            const std::uint32_t mult = m.multiplicity(o.root_edge);
            if (mult == 0) continue;
            const double logw = o.logl + m.logv -
                                std::log(static_cast<double>(n_vis)) +
                                std::log(static_cast<double>(mult));
            m.logz = log_sum_exp(m.logz, logw);
            m.sample_logw.emplace_back(o.id, logw);
        }
    }
    if (!open.empty()) {
        const double log_each =
            point_.logv - std::log(static_cast<double>(open.size()));
        for (const OpenNode& o : open) {
            const double logw = o.logl + log_each;
            point_.logz = log_sum_exp(point_.logz, logw);
            point_.sample_logw.emplace_back(o.id, logw);
        }
    }
}

double IntegratorEnsemble::current_sigma() const {
    double ss = 0.0;
    for (const BootstrapIntegrator& m : members_) {
        const double dz = (m.logz == neg_inf && point_.logz == neg_inf)
                              ? 0.0
                              : m.logz - point_.logz;
        ss += dz * dz;
    }
    return std::sqrt(ss / static_cast<double>(members_.size()));
}

EnsembleCombined IntegratorEnsemble::combine() const {
    EnsembleCombined out;
    out.logz_mean = point_.logz;
    out.logz_sigma = current_sigma();
    out.posterior.reserve(point_.sample_logw.size());
    for (const auto& [id, logw] : point_.sample_logw)
        out.posterior.emplace_back(id, std::exp(logw - point_.logz));
    return out;
}

} // namespace nest
