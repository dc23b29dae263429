#include "nest/model.hpp"

#include "nest/errors.hpp"
#include "nest/util.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

namespace nest {

namespace {

constexpr double log_two_pi = 1.8378770664093454836;

double clamp01_open(double u) {
    // Keeps inverse-CDF transforms total on the closed cube.
    if (u < 1e-300) return 1e-300;
    if (u > 1.0 - 1e-16) return 1.0 - 1e-16;
    return u;
}

double gauss_logdensity(const ParamPoint& v) {
    double q = 0.0;
    for (double x : v) q += x * x;
    return -0.5 * (static_cast<double>(v.size()) * log_two_pi + q);
}

Problem make_gauss(const std::string& name, int d, double ref_logz) {
    Problem p;
    p.name = name;
    p.dim = d;
    p.transform = [d](const UnitPoint& u) {
        ParamPoint v(d);
        for (int i = 0; i < d; ++i) v[i] = uniform_icdf(u[i], -5.0, 5.0);
        return v;
    };
    p.loglike = gauss_logdensity;
    p.ref_logz = ref_logz;
    return p;
}

Problem make_funnel2d() {
    Problem p;
    p.name = "funnel2d";
    p.dim = 2;
    p.transform = [](const UnitPoint& u) {
        ParamPoint v(2);
        v[0] = uniform_icdf(u[0], -3.0, 3.0);
        v[1] = std::exp(v[0]) * normal_icdf(clamp01_open(u[1]));
        return v;
    };
    p.loglike = gauss_logdensity;
    // (1/6) * integral over [-3,3] of phi(t) / sqrt(2*pi*(1+e^{2t})) dt,
    // computed by Gauss-Legendre quadrature (tests regenerate this value).
    p.ref_logz = -3.8658235180054519;
    return p;
}

Problem make_bimodal2d() {
    Problem p;
    p.name = "bimodal2d";
    p.dim = 2;
    const double sigma = 0.1;
    p.transform = [](const UnitPoint& u) {
        ParamPoint v(2);
        v[0] = uniform_icdf(u[0], -5.0, 5.0);
        v[1] = uniform_icdf(u[1], -5.0, 5.0);
        return v;
    };
    p.loglike = [sigma](const ParamPoint& v) {
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        const double norm = -log_two_pi - 2.0 * std::log(sigma);
        const double dxp = v[0] - 2.0, dxm = v[0] + 2.0, dy = v[1];
        const double la = norm - (dxp * dxp + dy * dy) * inv2s2;
        const double lb = norm - (dxm * dxm + dy * dy) * inv2s2;
        return std::log(0.5) + log_sum_exp(la, lb);
    };
    // Grid quadrature over [-5,5]^2 (tests regenerate this value).
    p.ref_logz = -4.6051713837853234;
    return p;
}

Problem make_sphere_shell() {
    Problem p;
    p.name = "sphere-shell";
    p.dim = 2;
    p.transform = [](const UnitPoint& u) { return ParamPoint(u); };
    p.loglike = [](const ParamPoint& v) {
        const double dx = v[0] - 0.5, dy = v[1] - 0.5;
        const double r2 = dx * dx + dy * dy;
        return r2 <= 0.25 ? -r2 : neg_inf;
    };
    // Z = pi * (1 - exp(-1/4)), closed form for the inscribed-ball support.
    p.ref_logz = std::log(M_PI * (1.0 - std::exp(-0.25)));
    return p;
}

} // namespace

ParamPoint prior_transform(const Problem& problem, const UnitPoint& u) {
    if (static_cast<int>(u.size()) != problem.dim) {
        std::ostringstream os;
        os << "prior_transform: point has dimension " << u.size() << ", problem '"
           << problem.name << "' expects " << problem.dim;
        throw UsageError(os.str());
    }
    for (double c : u) {
        if (!(c >= 0.0 && c <= 1.0)) {
            throw UsageError("prior_transform: coordinate " + format_double(c) +
                             " outside the unit interval");
        }
    }
    return problem.transform(u);
}

double eval_loglike(const Problem& problem, const ParamPoint& v) {
    if (static_cast<int>(v.size()) != problem.dim) {
        throw UsageError("loglike: dimension mismatch for problem '" + problem.name + "'");
    }
    const double ll = problem.loglike(v);
    if (std::isnan(ll)) {
        std::ostringstream os;
        os << "invalid likelihood: model '" << problem.name << "' returned NaN at v=(";
        for (std::size_t i = 0; i < v.size(); ++i)
            os << (i ? "," : "") << format_double(v[i]);
        os << ")";
        throw RunError(os.str());
    }
    return ll;
}

std::vector<double> evaluate_batch(const Problem& problem,
                                   std::span<const UnitPoint> points,
                                   int threads) {
    std::vector<double> out(points.size());
    auto eval_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            out[i] = eval_loglike(problem, prior_transform(problem, points[i]));
    };
    if (threads <= 1 || points.size() < 2) {
        eval_range(0, points.size());
        return out;
    }
    const std::size_t n = points.size();
    const std::size_t workers = std::min<std::size_t>(threads, n);
    std::vector<std::future<void>> futs;
    futs.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = n * w / workers;
        const std::size_t hi = n * (w + 1) / workers;
        futs.push_back(std::async(std::launch::async, eval_range, lo, hi));
    }
    for (auto& f : futs) f.get();
    return out;
}

Problem catalog(const std::string& name) {
    // gauss refs: (1/10^d) * erf(5/sqrt(2))^d, from the quadrature oracle.
    if (name == "gauss2d") return make_gauss("gauss2d", 2, -4.6051713538193250);
    if (name == "gauss10d") return make_gauss("gauss10d", 10, -23.025856636288609);
    if (name == "funnel2d") return make_funnel2d();
    if (name == "bimodal2d") return make_bimodal2d();
    if (name == "sphere-shell") return make_sphere_shell();

    std::ostringstream os;
    os << "unknown problem '" << name << "'; available:";
    for (const auto& n : catalog_names()) os << " " << n;
    throw UsageError(os.str());
}

std::vector<std::string> catalog_names() {
    return {"gauss2d", "gauss10d", "funnel2d", "bimodal2d", "sphere-shell"};
}

// Acklam's rational approximation refined with one Halley step against the
// exact erfc, giving ~1e-15 over (0,1).
double normal_icdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return neg_inf;
        if (p == 1.0) return -neg_inf;
        throw UsageError("normal_icdf: argument outside [0,1]");
    }
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement.
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

} // namespace nest
