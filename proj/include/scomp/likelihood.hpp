#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "scomp/compose.hpp"
#include "scomp/errors.hpp"
#include "scomp/rng.hpp"
#include "scomp/sde.hpp"
#include "scomp/trainer.hpp"

// Variational lower bound on log-likelihood for a trained (or injected) score:
//
//   log p(x0) >= E[log p(x_T)] - int_{t_eps}^{t_end} E[ 1/2 g^2 ||s||^2
//                + div(g^2 s - f) ] dt
//
// with x_t ~ kernel(x0, t). div f = -1/2 beta(t) d is closed form; div s comes
// from finite differences (exact per-coordinate for small d, or Hutchinson
// probes). The [0, t_eps) remainder of the integral is truncated.

namespace scomp {

enum class DivergenceMethod { exact_fd, hutchinson };

inline std::string to_string(DivergenceMethod m) {
    return m == DivergenceMethod::exact_fd ? "exact-fd" : "hutchinson";
}

inline DivergenceMethod divergence_method_from_string(const std::string& s) {
    if (s == "exact-fd") return DivergenceMethod::exact_fd;
    if (s == "hutchinson") return DivergenceMethod::hutchinson;
    throw ConfigError("unknown divergence method '" + s + "' (exact-fd|hutchinson)");
}

// Divergence (trace of the Jacobian) of a vector field (x, t) -> vector.
template <class Real, class Field>
Real divergence(Field&& field, std::span<const Real> x, Real t, DivergenceMethod method,
                Rng* rng = nullptr, int n_probe = 64) {
    const size_t d = x.size();
    std::vector<Real> xp(x.begin(), x.end());
    double acc = 0.0;
    if (method == DivergenceMethod::exact_fd) {
        for (size_t i = 0; i < d; ++i) {
            const Real h = Real(1e-3) * (Real(1) + std::abs(x[i]));
            const Real xi = xp[i];
            xp[i] = xi + h;
            const std::vector<Real> splus = field(std::span<const Real>(xp), t);
            xp[i] = xi - h;
            const std::vector<Real> sminus = field(std::span<const Real>(xp), t);
            xp[i] = xi;
            acc += (double(splus[i]) - double(sminus[i])) / (2.0 * double(h));
        }
    } else {
        if (!rng) throw ConfigError("divergence: hutchinson needs an rng");
        if (n_probe < 1) throw ConfigError("divergence: n_probe must be >= 1");
        Real xmax = Real(0);
        for (Real v : x) xmax = std::max(xmax, std::abs(v));
        const Real h = Real(1e-3) * (Real(1) + xmax);
        std::vector<Real> v(d);
        for (int p = 0; p < n_probe; ++p) {
            for (size_t i = 0; i < d; ++i) v[i] = (rng->next_u64() & 1u) ? Real(1) : Real(-1);
            for (size_t i = 0; i < d; ++i) xp[i] = x[i] + h * v[i];
            const std::vector<Real> splus = field(std::span<const Real>(xp), t);
            for (size_t i = 0; i < d; ++i) xp[i] = x[i] - h * v[i];
            const std::vector<Real> sminus = field(std::span<const Real>(xp), t);
            double vjv = 0.0;
            for (size_t i = 0; i < d; ++i)
                vjv += double(v[i]) * (double(splus[i]) - double(sminus[i])) / (2.0 * double(h));
            acc += vjv;
        }
        acc /= n_probe;
    }
    if (!std::isfinite(acc)) throw NumericError("divergence: non-finite estimate");
    return Real(acc);
}

template <class Real>
struct ElboEstimate {
    Real value = Real(0);       // nats
    Real std_error = Real(0);
    int64_t n_mc = 0;
    int n_time = 0;
    DivergenceMethod divergence_method = DivergenceMethod::exact_fd;
};

// Core estimator over an arbitrary score function (x, t) -> vector.
// t is stratified uniform over [t_eps, t_end] with n_time strata; each MC
// sample pairs one integrand draw with one prior draw at t_end.
template <class Real, class ScoreFn>
ElboEstimate<Real> elbo_with_score(const DiffusionSchedule<Real>& sched, ScoreFn&& score_fn,
                                   std::span<const Real> x0, int64_t n_mc, int n_time,
                                   DivergenceMethod method, Rng& rng, int n_probe = 64) {
    if (n_mc < 1 || n_time < 1) throw ConfigError("elbo: n_mc and n_time must be >= 1");
    const size_t d = x0.size();
    const double log2pi = 1.8378770664093454835606594728112;
    const Real span_t = sched.t_end - sched.t_eps;
    double sum = 0.0, sum_sq = 0.0;
    for (int64_t j = 0; j < n_mc; ++j) {
        const int stratum = int(j % n_time);
        const Real t = sched.t_eps + span_t * (Real(stratum) + Real(rng.uniform())) / Real(n_time);
        const PerturbationSample<Real> ps = perturb<Real>(sched, x0, t, rng);
        const std::vector<Real> s = score_fn(std::span<const Real>(ps.x_t), t);
        const double b = double(beta_at(sched, t));
        double snorm2 = 0.0;
        for (Real v : s) snorm2 += double(v) * double(v);
        const double div_s = double(divergence<Real>(score_fn, ps.x_t, t, method, &rng, n_probe));
        const double div_f = -0.5 * b * double(d);
        const double integrand = 0.5 * b * snorm2 + b * div_s - div_f;
        const PerturbationSample<Real> pT = perturb<Real>(sched, x0, sched.t_end, rng);
        double xT2 = 0.0;
        for (Real v : pT.x_t) xT2 += double(v) * double(v);
        const double prior = -0.5 * double(d) * log2pi - 0.5 * xT2;
        const double contrib = prior - double(span_t) * integrand;
        sum += contrib;
        sum_sq += contrib * contrib;
    }
    const double mean = sum / double(n_mc);
    double se = 0.0;
    if (n_mc > 1) {
        const double var = std::max(0.0, (sum_sq - double(n_mc) * mean * mean) / double(n_mc - 1));
        se = std::sqrt(var / double(n_mc));
    }
    if (!std::isfinite(mean)) throw NumericError("elbo: non-finite estimate");
    ElboEstimate<Real> out;
    out.value = Real(mean);
    out.std_error = Real(se);
    out.n_mc = n_mc;
    out.n_time = n_time;
    out.divergence_method = method;
    return out;
}

// Recipe-conditioned bound for a trained checkpoint.
template <class Real>
ElboEstimate<Real> elbo(const Checkpoint<Real>& ckpt, std::span<const Real> x0,
                        const CompositeScore<Real>& recipe, int64_t n_mc, int n_time, Rng& rng,
                        DivergenceMethod method = DivergenceMethod::exact_fd, int n_probe = 64) {
    const ScoreNet<Real> net(ckpt.config.net, ckpt.params);
    Tape<Real> ws;
    auto score_fn = [&](std::span<const Real> x, Real t) { return evaluate(recipe, net, x, t, ws); };
    return elbo_with_score<Real>(ckpt.config.schedule, score_fn, x0, n_mc, n_time, method, rng, n_probe);
}

}  // namespace scomp
