#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scomp/errors.hpp"
#include "scomp/rng.hpp"

// Variance-preserving forward diffusion, its Gaussian perturbation kernel and
// the Euler-Maruyama reverse-time integrator.
//
//   forward:  dx = -1/2 beta(t) x dt + sqrt(beta(t)) dw
//   kernel:   x_t | x_0 ~ N(sqrt(alpha_bar(t)) x_0, (1 - alpha_bar(t)) I)
//   reverse:  dx = [f(x,t) - g_t^2 s(x,t)] dt + g_t dw_bar
//
// beta is linear in t, so alpha_bar has the closed form used below.

namespace scomp {

template <class Real>
struct DiffusionSchedule {
    Real beta_min = Real(0.1);
    Real beta_max = Real(20.0);
    Real t_end = Real(1.0);   // integration horizon T
    Real t_eps = Real(1e-3);  // smallest usable t; the kernel degenerates at t = 0

    void validate() const {
        if (!(beta_min > Real(0)) || !(beta_max >= beta_min))
            throw ConfigError("schedule: need 0 < beta_min <= beta_max");
        if (!(t_eps > Real(0)) || !(t_eps < t_end))
            throw ConfigError("schedule: need 0 < t_eps < t_end");
    }
};

template <class Real>
Real beta_at(const DiffusionSchedule<Real>& sched, Real t) {
    return sched.beta_min + t * (sched.beta_max - sched.beta_min);
}

template <class Real>
Real alpha_bar(const DiffusionSchedule<Real>& sched, Real t) {
    if (!(t >= Real(0)) || !(t <= sched.t_end))
        throw std::domain_error("alpha_bar: t outside [0, t_end]");
    return std::exp(-(sched.beta_min * t + (sched.beta_max - sched.beta_min) * t * t / Real(2)));
}

template <class Real>
std::vector<Real> drift(const DiffusionSchedule<Real>& sched, std::span<const Real> x, Real t) {
    if (!(t >= Real(0)) || !(t <= sched.t_end))
        throw std::domain_error("drift: t outside [0, t_end]");
    const Real c = Real(-0.5) * beta_at(sched, t);
    std::vector<Real> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = c * x[i];
    return out;
}

template <class Real>
Real diffusion_coeff(const DiffusionSchedule<Real>& sched, Real t) {
    if (!(t >= Real(0)) || !(t <= sched.t_end))
        throw std::domain_error("diffusion_coeff: t outside [0, t_end]");
    return std::sqrt(beta_at(sched, t));
}

template <class Real>
struct PerturbationSample {
    std::vector<Real> x_t;
    Real t;
    std::vector<Real> noise;         // the epsilon draw
    std::vector<Real> target_score;  // -(x_t - sqrt(ab) x0) / (1 - ab) = -noise / sqrt(1 - ab)
};

// deterministic core: the caller supplies the epsilon draw
template <class Real>
PerturbationSample<Real> perturb_with_noise(const DiffusionSchedule<Real>& sched,
                                            std::span<const Real> x0, Real t,
                                            std::span<const Real> noise) {
    if (!(t >= sched.t_eps) || !(t <= sched.t_end))
        throw std::domain_error("perturb: t outside [t_eps, t_end]");
    if (noise.size() != x0.size()) throw ConfigError("perturb: noise dimension mismatch");
    const Real ab = alpha_bar(sched, t);
    const Real mean_scale = std::sqrt(ab);
    const Real noise_scale = std::sqrt(Real(1) - ab);
    PerturbationSample<Real> ps;
    ps.t = t;
    ps.noise.assign(noise.begin(), noise.end());
    ps.x_t.resize(x0.size());
    ps.target_score.resize(x0.size());
    for (size_t i = 0; i < x0.size(); ++i) {
        ps.x_t[i] = mean_scale * x0[i] + noise_scale * ps.noise[i];
        ps.target_score[i] = -(ps.x_t[i] - mean_scale * x0[i]) / (Real(1) - ab);
    }
    return ps;
}

template <class Real>
PerturbationSample<Real> perturb(const DiffusionSchedule<Real>& sched, std::span<const Real> x0,
                                 Real t, Rng& rng) {
    std::vector<Real> noise(x0.size());
    for (auto& v : noise) v = Real(rng.normal());
    return perturb_with_noise<Real>(sched, x0, t, noise);
}

template <class Real>
struct SdeState {
    std::vector<Real> x;
    Real t;
};

// One reverse-time step of size dt > 0 (t decreases); deterministic core with
// caller-supplied z draw.
template <class Real>
SdeState<Real> euler_maruyama_step_with_noise(const DiffusionSchedule<Real>& sched,
                                              const SdeState<Real>& state, Real dt,
                                              std::span<const Real> score_value,
                                              std::span<const Real> z) {
    if (!(dt > Real(0))) throw std::domain_error("euler_maruyama_step: dt must be > 0");
    // slack for the accumulated rounding of a uniform time grid in Real precision
    const Real tol = Real(64) * std::numeric_limits<Real>::epsilon() * sched.t_end;
    if (state.t - dt < sched.t_eps - tol)
        throw std::domain_error("euler_maruyama_step: step would pass t_eps");
    if (score_value.size() != state.x.size() || z.size() != state.x.size())
        throw ConfigError("euler_maruyama_step: dimension mismatch");
    const Real b = beta_at(sched, state.t);
    const Real noise_scale = std::sqrt(b) * std::sqrt(dt);
    SdeState<Real> next;
    next.t = state.t - dt;
    next.x.resize(state.x.size());
    for (size_t i = 0; i < state.x.size(); ++i) {
        const Real f_i = Real(-0.5) * b * state.x[i];
        next.x[i] = state.x[i] + (f_i - b * score_value[i]) * (-dt) + noise_scale * z[i];
    }
    return next;
}

template <class Real>
SdeState<Real> euler_maruyama_step(const DiffusionSchedule<Real>& sched, const SdeState<Real>& state,
                                   Real dt, std::span<const Real> score_value, Rng& rng) {
    std::vector<Real> z(state.x.size());
    for (auto& v : z) v = Real(rng.normal());
    return euler_maruyama_step_with_noise<Real>(sched, state, dt, score_value, z);
}

// Integrates the reverse SDE from t_end to t_eps on a uniform grid, starting
// from x_T ~ N(0, I). Path i draws from substream (root, i), so the set of
// samples is independent of any later parallel split.
template <class Real, class ScoreFn>
std::vector<std::vector<Real>> reverse_sample(const DiffusionSchedule<Real>& sched, ScoreFn&& score_fn,
                                              int n_steps, int n_samples, int dim, Rng& rng) {
    if (n_steps < 1) throw std::domain_error("reverse_sample: n_steps must be >= 1");
    if (n_samples < 1) throw std::domain_error("reverse_sample: n_samples must be >= 1");
    if (dim < 1) throw ConfigError("reverse_sample: dim must be >= 1");
    const Real dt = (sched.t_end - sched.t_eps) / Real(n_steps);
    const uint64_t root = rng.next_u64();
    std::vector<std::vector<Real>> out;
    out.reserve(size_t(n_samples));
    for (int i = 0; i < n_samples; ++i) {
        Rng path_rng(root, uint64_t(i));
        SdeState<Real> st;
        st.t = sched.t_end;
        st.x.resize(size_t(dim));
        for (auto& v : st.x) v = Real(path_rng.normal());
        for (int k = 0; k < n_steps; ++k) {
            // recompute t from the index so the grid does not drift
            st.t = sched.t_end - Real(k) * dt;
            std::vector<Real> s = score_fn(std::span<const Real>(st.x), st.t);
            st = euler_maruyama_step(sched, st, dt, std::span<const Real>(s), path_rng);
        }
        out.push_back(std::move(st.x));
    }
    return out;
}

}  // namespace scomp
