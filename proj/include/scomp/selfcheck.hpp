#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "scomp/gmm.hpp"
#include "scomp/likelihood.hpp"
#include "scomp/rng.hpp"
#include "scomp/sde.hpp"

// Built-in oracle suite: fast statistical and algebraic checks binding the SDE
// kernel, the Euler-Maruyama sampler, the analytic mixture scores and the
// divergence estimator together. Runs in a few seconds; every check is listed
// exactly once in the report.

namespace scomp {

// test hooks: deliberately corrupt one quantity to prove the suite catches it
struct OracleFaults {
    bool flip_target_score_sign = false;
};

struct OracleReport {
    struct Check {
        std::string name;
        bool pass;
        std::string detail;
    };
    std::vector<Check> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

inline OracleReport run_oracle_suite(const OracleFaults& faults = {}) {
    using Real = double;
    OracleReport report;
    auto add = [&](const std::string& name, bool pass, const std::string& detail) {
        report.checks.push_back({name, pass, detail});
    };
    char buf[160];
    const DiffusionSchedule<Real> sched;

    {  // kernel mean and variance at t = 0.5
        Rng rng(11);
        const std::vector<Real> x0 = {1.0, -1.0};
        const Real t = 0.5;
        const Real ab = alpha_bar(sched, t);
        const int n = 100000;
        std::vector<double> mean(2, 0.0), m2(2, 0.0);
        for (int i = 0; i < n; ++i) {
            auto ps = perturb<Real>(sched, x0, t, rng);
            for (int k = 0; k < 2; ++k) {
                mean[k] += ps.x_t[k];
                m2[k] += ps.x_t[k] * ps.x_t[k];
            }
        }
        bool mean_ok = true, var_ok = true;
        double worst_mean = 0.0, worst_var = 0.0;
        for (int k = 0; k < 2; ++k) {
            mean[k] /= n;
            const double var = m2[k] / n - mean[k] * mean[k];
            const double mean_tol = 4.0 * std::sqrt((1.0 - ab) / n);
            const double mean_err = std::abs(mean[k] - std::sqrt(ab) * x0[k]);
            const double var_err = std::abs(var - (1.0 - ab)) / (1.0 - ab);
            worst_mean = std::max(worst_mean, mean_err / mean_tol);
            worst_var = std::max(worst_var, var_err);
            if (mean_err > mean_tol) mean_ok = false;
            if (var_err > 0.03) var_ok = false;
        }
        std::snprintf(buf, sizeof(buf), "worst mean err %.3f of tolerance", worst_mean);
        add("kernel-mean", mean_ok, buf);
        std::snprintf(buf, sizeof(buf), "worst relative var err %.4f (tol 0.03)", worst_var);
        add("kernel-variance", var_ok, buf);
    }

    {  // score-target identity: target + eps / sqrt(1 - ab) == 0
        Rng rng(12);
        double worst = 0.0;
        for (int i = 0; i < 10000; ++i) {
            std::vector<Real> x0 = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
            const Real t = Real(rng.uniform(double(sched.t_eps), double(sched.t_end)));
            auto ps = perturb<Real>(sched, x0, t, rng);
            const Real ab = alpha_bar(sched, t);
            for (int k = 0; k < 2; ++k) {
                Real target = ps.target_score[k];
                if (faults.flip_target_score_sign) target = -target;
                worst = std::max(worst, std::abs(double(target + ps.noise[k] / std::sqrt(Real(1) - ab))));
            }
        }
        std::snprintf(buf, sizeof(buf), "worst |target + eps/sqrt(1-ab)| = %.2e (tol 1e-6)", worst);
        add("score-target-identity", worst <= 1e-6, buf);
    }

    {  // EM sampling with the N(0, I) fixed-point score
        Rng rng(13);
        auto score = [](std::span<const Real> x, Real) {
            std::vector<Real> s(x.size());
            for (size_t i = 0; i < x.size(); ++i) s[i] = -x[i];
            return s;
        };
        auto samples = reverse_sample<Real>(sched, score, 500, 6400, 2, rng);
        std::vector<double> mean(2, 0.0);
        for (const auto& s : samples)
            for (int k = 0; k < 2; ++k) mean[k] += s[k];
        for (auto& m : mean) m /= double(samples.size());
        double cov[3] = {0, 0, 0};
        for (const auto& s : samples) {
            cov[0] += (s[0] - mean[0]) * (s[0] - mean[0]);
            cov[1] += (s[1] - mean[1]) * (s[1] - mean[1]);
            cov[2] += (s[0] - mean[0]) * (s[1] - mean[1]);
        }
        for (auto& c : cov) c /= double(samples.size() - 1);
        const double mean_err = std::max(std::abs(mean[0]), std::abs(mean[1]));
        const double cov_err = std::sqrt((cov[0] - 1) * (cov[0] - 1) + (cov[1] - 1) * (cov[1] - 1) +
                                         2 * cov[2] * cov[2]) /
                               std::sqrt(2.0);
        std::snprintf(buf, sizeof(buf), "|mean| %.4f (tol 0.05), cov frob err %.4f (tol 0.10)", mean_err, cov_err);
        add("em-fixed-point-moments", mean_err < 0.05 && cov_err < 0.10, buf);
    }

    {  // analytic mixture score vs finite differences of the log-density
        Rng rng(14);
        GaussianMixtureTarget<Real> target;
        target.weights = {0.4, 0.6};
        target.means = {{1.0, 0.5}, {-1.0, -0.2}};
        target.covariances = {{0.5, 0.1, 0.1, 0.7}, {0.8, -0.2, -0.2, 0.4}};
        target.validate();
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            std::vector<Real> x = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
            const Real t = Real(rng.uniform(0.05, 1.0));
            auto s = analytic_score(target, std::span<const Real>(x), t, sched);
            for (int k = 0; k < 2; ++k) {
                const Real h = 1e-5;
                std::vector<Real> xp = x, xm = x;
                xp[k] += h;
                xm[k] -= h;
                const Real fd = (analytic_logpdf(target, std::span<const Real>(xp), t, sched) -
                                 analytic_logpdf(target, std::span<const Real>(xm), t, sched)) /
                                (2 * h);
                worst = std::max(worst, std::abs(double(s[k] - fd)) / std::max(1.0, std::abs(double(fd))));
            }
        }
        std::snprintf(buf, sizeof(buf), "worst relative fd err %.2e (tol 1e-5)", worst);
        add("mixture-score-vs-fd", worst <= 1e-5, buf);
    }

    {  // divergence of a linear field equals the trace
        auto field = [](std::span<const Real> x, Real) {
            return std::vector<Real>{Real(1) * x[0] + Real(2) * x[1], Real(3) * x[0] + Real(4) * x[1]};
        };
        const std::vector<Real> x = {0.3, -0.7};
        const Real div = divergence<Real>(field, x, Real(0.5), DivergenceMethod::exact_fd);
        std::snprintf(buf, sizeof(buf), "divergence %.8f (expect 5)", double(div));
        add("divergence-linear-trace", std::abs(double(div) - 5.0) <= 1e-6, buf);
    }

    {  // kernel variance equals the g^2 quadrature identity
        const Real t = 0.6;
        const Real ab_t = alpha_bar(sched, t);
        const int n = 4000;  // Simpson needs even n
        const Real dt = t / n;
        double acc = 0.0;
        for (int i = 0; i <= n; ++i) {
            const Real s = i * dt;
            const double g2 = double(beta_at(sched, s));
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += w * g2 * double(ab_t) / double(alpha_bar(sched, s));
        }
        acc *= double(dt) / 3.0;
        const double expect = 1.0 - double(ab_t);
        std::snprintf(buf, sizeof(buf), "quadrature %.6f vs 1-ab %.6f", acc, expect);
        add("variance-quadrature-identity", std::abs(acc - expect) <= 1e-4, buf);
    }

    return report;
}

inline void print_oracle_report(const OracleReport& report, std::ostream& os) {
    for (const auto& c : report.checks)
        os << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
    os << (report.all_pass() ? "oracle suite: all checks passed\n" : "oracle suite: FAILURES\n");
}

}  // namespace scomp
