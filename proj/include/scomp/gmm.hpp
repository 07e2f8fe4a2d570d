#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "scomp/errors.hpp"
#include "scomp/linalg.hpp"
#include "scomp/rng.hpp"
#include "scomp/sde.hpp"

// Analytic Gaussian-mixture targets. Under the VP forward process the
// diffused mixture at time t is again a mixture with components
// N(sqrt(ab) mu_i, ab Sigma_i + (1 - ab) I), so its score and log-density are
// closed-form. This is the verification oracle the rest of the project is
// checked against.

namespace scomp {

template <class Real>
struct GaussianMixtureTarget {
    std::vector<Real> weights;
    std::vector<std::vector<Real>> means;        // each of length d
    std::vector<std::vector<Real>> covariances;  // each d*d row-major, symmetric PD

    int dim() const { return means.empty() ? 0 : int(means[0].size()); }

    void validate() const {
        if (weights.empty() || weights.size() != means.size() || weights.size() != covariances.size())
            throw ConfigError("mixture: weights/means/covariances size mismatch");
        const size_t d = means[0].size();
        double wsum = 0.0;
        for (Real w : weights) {
            if (!(w >= Real(0))) throw ConfigError("mixture: negative weight");
            wsum += double(w);
        }
        if (std::abs(wsum - 1.0) > 1e-12) throw ConfigError("mixture: weights must sum to 1");
        for (size_t i = 0; i < means.size(); ++i) {
            if (means[i].size() != d) throw ConfigError("mixture: means must share dimension");
            if (covariances[i].size() != d * d) throw ConfigError("mixture: covariance shape mismatch");
            if (!linalg::is_symmetric<Real>(covariances[i], d, Real(1e-9)))
                throw ConfigError("mixture: covariance not symmetric");
            linalg::cholesky<Real>(covariances[i], d, "mixture covariance");  // PD check
        }
    }

    static GaussianMixtureTarget standard_normal(int d) {
        return isotropic(std::vector<Real>(size_t(d), Real(0)), Real(1));
    }

    static GaussianMixtureTarget isotropic(std::vector<Real> mean, Real var) {
        GaussianMixtureTarget t;
        const size_t d = mean.size();
        t.weights = {Real(1)};
        t.means = {std::move(mean)};
        std::vector<Real> cov(d * d, Real(0));
        for (size_t i = 0; i < d; ++i) cov[i * d + i] = var;
        t.covariances = {std::move(cov)};
        return t;
    }
};

namespace detail {

// log N(x; m, A) and A^{-1}(x - m) for one diffused component
template <class Real>
struct ComponentEval {
    Real log_density;
    std::vector<Real> solved_residual;
};

template <class Real>
ComponentEval<Real> eval_diffused_component(const GaussianMixtureTarget<Real>& target, size_t i,
                                            std::span<const Real> x, Real ab) {
    const size_t d = x.size();
    std::vector<Real> a(d * d);
    for (size_t r = 0; r < d; ++r)
        for (size_t c = 0; c < d; ++c)
            a[r * d + c] = ab * target.covariances[i][r * d + c] + ((r == c) ? (Real(1) - ab) : Real(0));
    // at t = 0 the diffused covariance is the plain covariance
    const Real mean_scale = std::sqrt(ab);
    std::vector<Real> resid(d);
    for (size_t r = 0; r < d; ++r) resid[r] = x[r] - mean_scale * target.means[i][r];
    auto l = linalg::cholesky<Real>(a, d, "diffused covariance");
    auto solved = linalg::chol_solve<Real>(l, d, resid);
    double quad = 0.0;
    for (size_t r = 0; r < d; ++r) quad += double(resid[r]) * double(solved[r]);
    const double logdet = double(linalg::chol_logdet<Real>(l, d));
    const double log2pi = 1.8378770664093454835606594728112;
    ComponentEval<Real> ev;
    ev.log_density = Real(-0.5 * (double(d) * log2pi + logdet + quad));
    ev.solved_residual = std::move(solved);
    return ev;
}

template <class Real>
void check_finite_point(std::span<const Real> x, const char* what) {
    for (Real v : x)
        if (!std::isfinite(double(v))) throw NumericError(std::string(what) + ": non-finite input point");
}

}  // namespace detail

// Exact gradient of the diffused mixture's log-density at time t.
template <class Real>
std::vector<Real> analytic_score(const GaussianMixtureTarget<Real>& target, std::span<const Real> x,
                                 Real t, const DiffusionSchedule<Real>& sched) {
    detail::check_finite_point<Real>(x, "analytic_score");
    const Real ab = (t == Real(0)) ? Real(1) : alpha_bar(sched, t);
    const size_t d = x.size();
    const size_t n = target.weights.size();
    std::vector<Real> logw(n);
    std::vector<std::vector<Real>> comp_scores(n);
    Real max_logw = -std::numeric_limits<Real>::infinity();
    for (size_t i = 0; i < n; ++i) {
        auto ev = detail::eval_diffused_component(target, i, x, ab);
        logw[i] = (target.weights[i] > Real(0) ? std::log(target.weights[i])
                                               : -std::numeric_limits<Real>::infinity()) +
                  ev.log_density;
        comp_scores[i] = std::move(ev.solved_residual);
        for (auto& v : comp_scores[i]) v = -v;
        max_logw = std::max(max_logw, logw[i]);
    }
    // responsibility-weighted component scores
    double norm = 0.0;
    std::vector<double> resp(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        if (logw[i] == -std::numeric_limits<Real>::infinity()) continue;
        resp[i] = std::exp(double(logw[i] - max_logw));
        norm += resp[i];
    }
    std::vector<Real> score(d, Real(0));
    for (size_t i = 0; i < n; ++i) {
        const double r = resp[i] / norm;
        for (size_t k = 0; k < d; ++k) score[k] += Real(r * double(comp_scores[i][k]));
    }
    return score;
}

// Exact log-density of the diffused mixture (log-sum-exp stabilized).
template <class Real>
Real analytic_logpdf(const GaussianMixtureTarget<Real>& target, std::span<const Real> x, Real t,
                     const DiffusionSchedule<Real>& sched) {
    detail::check_finite_point<Real>(x, "analytic_logpdf");
    const Real ab = (t == Real(0)) ? Real(1) : alpha_bar(sched, t);
    const size_t n = target.weights.size();
    std::vector<Real> logw(n);
    Real max_logw = -std::numeric_limits<Real>::infinity();
    for (size_t i = 0; i < n; ++i) {
        auto ev = detail::eval_diffused_component(target, i, x, ab);
        logw[i] = (target.weights[i] > Real(0) ? std::log(target.weights[i])
                                               : -std::numeric_limits<Real>::infinity()) +
                  ev.log_density;
        max_logw = std::max(max_logw, logw[i]);
    }
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i)
        if (logw[i] != -std::numeric_limits<Real>::infinity())
            acc += std::exp(double(logw[i] - max_logw));
    return max_logw + Real(std::log(acc));
}

// Ancestral sampling: categorical component, then Gaussian.
template <class Real>
std::vector<std::vector<Real>> sample_target(const GaussianMixtureTarget<Real>& target, int n, Rng& rng) {
    const size_t d = size_t(target.dim());
    std::vector<std::vector<Real>> chols;
    chols.reserve(target.covariances.size());
    for (const auto& cov : target.covariances) chols.push_back(linalg::cholesky<Real>(cov, d));
    std::vector<std::vector<Real>> out;
    out.reserve(size_t(n));
    for (int s = 0; s < n; ++s) {
        const double u = rng.uniform();
        size_t comp = 0;
        double acc = 0.0;
        for (size_t i = 0; i < target.weights.size(); ++i) {
            acc += double(target.weights[i]);
            if (u < acc) {
                comp = i;
                break;
            }
            comp = i;  // numerical slack: fall through to the last component
        }
        std::vector<Real> z(d);
        for (auto& v : z) v = Real(rng.normal());
        std::vector<Real> x(d);
        const auto& l = chols[comp];
        for (size_t r = 0; r < d; ++r) {
            double a = double(target.means[comp][r]);
            for (size_t c = 0; c <= r; ++c) a += double(l[r * d + c]) * double(z[c]);
            x[r] = Real(a);
        }
        out.push_back(std::move(x));
    }
    return out;
}

}  // namespace scomp
