#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "scomp/rng.hpp"
#include "scomp/sde.hpp"

using namespace scomp;
using Real = double;

namespace {

const DiffusionSchedule<Real> kSched;  // beta 0.1..20 on [1e-3, 1]

// quadrature oracle: alpha_bar should equal exp(-int_0^t beta)
double alpha_bar_by_quadrature(const DiffusionSchedule<Real>& s, double t, int n = 20000) {
    double acc = 0.0;
    const double dt = t / n;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += w * double(beta_at(s, Real(i * dt)));
    }
    return std::exp(-acc * dt);
}

}  // namespace

TEST_CASE("alpha_bar closed form") {
    CHECK(alpha_bar(kSched, 0.0) == 1.0);
    // exp(-(0.1*1 + 19.9/2)) = exp(-10.05)
    CHECK(alpha_bar(kSched, 1.0) == doctest::Approx(std::exp(-10.05)).epsilon(1e-15));
    CHECK(alpha_bar(kSched, 1.0) == doctest::Approx(4.3186e-5).epsilon(1e-3));
    for (double t : {0.1, 0.25, 0.5, 0.9})
        CHECK(alpha_bar(kSched, t) == doctest::Approx(alpha_bar_by_quadrature(kSched, t)).epsilon(1e-8));
}

TEST_CASE("alpha_bar is strictly decreasing and in (0,1]") {
    double prev = alpha_bar(kSched, 0.0);
    for (int i = 1; i <= 100; ++i) {
        const double t = i / 100.0;
        const double ab = alpha_bar(kSched, t);
        CHECK(ab < prev);
        CHECK(ab > 0.0);
        CHECK(ab < 1.0);
        prev = ab;
    }
}

TEST_CASE("alpha_bar domain errors") {
    CHECK_THROWS_AS(alpha_bar(kSched, -0.01), std::domain_error);
    CHECK_THROWS_AS(alpha_bar(kSched, 1.01), std::domain_error);
}

TEST_CASE("schedule validation") {
    DiffusionSchedule<Real> bad = kSched;
    bad.beta_min = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = kSched;
    bad.t_eps = 2.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_NOTHROW(kSched.validate());
}

TEST_CASE("drift is -beta/2 x") {
    const std::vector<Real> zero = {0.0, 0.0};
    auto d0 = drift<Real>(kSched, zero, 0.3);
    CHECK(d0[0] == 0.0);
    CHECK(d0[1] == 0.0);

    const std::vector<Real> x = {2.0, 0.0};
    auto d = drift<Real>(kSched, x, 0.0);
    CHECK(d[0] == doctest::Approx(-0.1).epsilon(1e-15));
    CHECK(d[1] == 0.0);
}

TEST_CASE("finite differences of log alpha_bar reproduce beta") {
    const double h = 1e-6;
    for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double fd = -(std::log(alpha_bar(kSched, t + h)) - std::log(alpha_bar(kSched, t - h))) / (2 * h);
        CHECK(fd == doctest::Approx(double(beta_at(kSched, Real(t)))).epsilon(1e-6));
    }
}

TEST_CASE("diffusion_coeff squares to beta") {
    CHECK(diffusion_coeff(kSched, 0.0) == doctest::Approx(std::sqrt(0.1)).epsilon(1e-15));
    for (double t : {0.05, 0.2, 0.55, 1.0}) {
        const double g = diffusion_coeff(kSched, t);
        CHECK(g * g == doctest::Approx(double(beta_at(kSched, Real(t)))).epsilon(1e-12));
    }
    // strictly increasing for beta_max > beta_min
    double prev = diffusion_coeff(kSched, 0.0);
    for (int i = 1; i <= 20; ++i) {
        const double g = diffusion_coeff(kSched, i / 20.0);
        CHECK(g > prev);
        prev = g;
    }
}

TEST_CASE("kernel variance matches the g^2 quadrature identity") {
    // Var[x_t | x0] = 1 - ab(t) = int_0^t g_s^2 (ab(t)/ab(s)) ds
    for (double t : {0.3, 0.6, 1.0}) {
        const int n = 4000;
        const double dt = t / n;
        const double abt = alpha_bar(kSched, t);
        double acc = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double s = i * dt;
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += w * double(beta_at(kSched, Real(s))) * abt / alpha_bar(kSched, s);
        }
        acc *= dt / 3.0;
        CHECK(acc == doctest::Approx(1.0 - abt).epsilon(1e-4));
    }
}

TEST_CASE("perturb with forced zero noise") {
    const std::vector<Real> x0 = {1.5, -2.0};
    const std::vector<Real> eps = {0.0, 0.0};
    auto ps = perturb_with_noise<Real>(kSched, x0, 0.4, eps);
    const double ms = std::sqrt(alpha_bar(kSched, 0.4));
    CHECK(ps.x_t[0] == doctest::Approx(ms * 1.5).epsilon(1e-15));
    CHECK(ps.x_t[1] == doctest::Approx(ms * -2.0).epsilon(1e-15));
    CHECK(ps.target_score[0] == 0.0);
    CHECK(ps.target_score[1] == 0.0);
}

TEST_CASE("perturb rejects t below t_eps") {
    const std::vector<Real> x0 = {1.0};
    Rng rng(1);
    CHECK_THROWS_AS(perturb<Real>(kSched, x0, 1e-4, rng), std::domain_error);
    CHECK_THROWS_AS(perturb<Real>(kSched, x0, 0.0, rng), std::domain_error);
}

TEST_CASE("score-target identity holds to float rounding") {
    Rng rng(7);
    const std::vector<Real> x0 = {0.7, -0.3};
    for (int i = 0; i < 2000; ++i) {
        const Real t = Real(rng.uniform(double(kSched.t_eps), double(kSched.t_end)));
        auto ps = perturb<Real>(kSched, x0, t, rng);
        const double ab = alpha_bar(kSched, t);
        for (int k = 0; k < 2; ++k)
            CHECK(std::abs(ps.target_score[k] + ps.noise[k] / std::sqrt(1.0 - ab)) < 1e-9);
    }
}

TEST_CASE("perturbation kernel moments") {
    Rng rng(3);
    const std::vector<Real> x0 = {1.0, -1.0};
    const Real t = 0.5;
    const double ab = alpha_bar(kSched, t);
    const int n = 100000;
    double mean[2] = {0, 0}, m2[2] = {0, 0};
    for (int i = 0; i < n; ++i) {
        auto ps = perturb<Real>(kSched, x0, t, rng);
        for (int k = 0; k < 2; ++k) {
            mean[k] += ps.x_t[k];
            m2[k] += ps.x_t[k] * ps.x_t[k];
        }
    }
    for (int k = 0; k < 2; ++k) {
        mean[k] /= n;
        const double var = m2[k] / n - mean[k] * mean[k];
        CHECK(std::abs(mean[k] - std::sqrt(ab) * x0[k]) < 4.0 * std::sqrt((1.0 - ab) / n));
        CHECK(std::abs(var - (1.0 - ab)) / (1.0 - ab) < 0.03);
    }
}

TEST_CASE("euler-maruyama deterministic update with forced z=0") {
    SdeState<Real> st{{1.0, -2.0}, 0.8};
    const std::vector<Real> score = {0.5, 0.25};
    const std::vector<Real> z = {0.0, 0.0};
    const Real dt = 0.01;
    auto next = euler_maruyama_step_with_noise<Real>(kSched, st, dt, score, z);
    const double b = beta_at(kSched, Real(0.8));
    for (int k = 0; k < 2; ++k) {
        const double f = -0.5 * b * st.x[k];
        CHECK(next.x[k] == doctest::Approx(st.x[k] + (f - b * score[k]) * -dt).epsilon(1e-14));
    }
    CHECK(next.t == doctest::Approx(0.79));
}

TEST_CASE("euler-maruyama rejects bad steps") {
    SdeState<Real> st{{0.0}, 0.5};
    const std::vector<Real> score = {0.0};
    Rng rng(1);
    CHECK_THROWS_AS(euler_maruyama_step<Real>(kSched, st, -0.1, score, rng), std::domain_error);
    CHECK_THROWS_AS(euler_maruyama_step<Real>(kSched, st, 0.0, score, rng), std::domain_error);
    CHECK_THROWS_AS(euler_maruyama_step<Real>(kSched, st, 0.6, score, rng), std::domain_error);
}

TEST_CASE("reverse_sample smoke with one step") {
    Rng rng(5);
    auto score = [](std::span<const Real> x, Real) {
        std::vector<Real> s(x.size());
        for (size_t i = 0; i < x.size(); ++i) s[i] = -x[i];
        return s;
    };
    auto out = reverse_sample<Real>(kSched, score, 1, 3, 2, rng);
    REQUIRE(out.size() == 3);
    for (const auto& s : out) {
        REQUIRE(s.size() == 2);
        for (double v : s) CHECK(std::isfinite(v));
    }
}

TEST_CASE("reverse_sample recovers N(0,I) moments with the fixed-point score") {
    Rng rng(11);
    auto score = [](std::span<const Real> x, Real) {
        std::vector<Real> s(x.size());
        for (size_t i = 0; i < x.size(); ++i) s[i] = -x[i];
        return s;
    };
    auto out = reverse_sample<Real>(kSched, score, 400, 4000, 2, rng);
    double mean[2] = {0, 0};
    for (const auto& s : out)
        for (int k = 0; k < 2; ++k) mean[k] += s[k];
    for (auto& m : mean) m /= double(out.size());
    double c00 = 0, c11 = 0, c01 = 0;
    for (const auto& s : out) {
        c00 += (s[0] - mean[0]) * (s[0] - mean[0]);
        c11 += (s[1] - mean[1]) * (s[1] - mean[1]);
        c01 += (s[0] - mean[0]) * (s[1] - mean[1]);
    }
    c00 /= out.size() - 1;
    c11 /= out.size() - 1;
    c01 /= out.size() - 1;
    CHECK(std::abs(mean[0]) < 0.08);
    CHECK(std::abs(mean[1]) < 0.08);
    CHECK(std::abs(c00 - 1.0) < 0.12);
    CHECK(std::abs(c11 - 1.0) < 0.12);
    CHECK(std::abs(c01) < 0.08);
}

TEST_CASE("reverse_sample is bit-identical for a fixed seed") {
    auto score = [](std::span<const Real> x, Real) {
        std::vector<Real> s(x.size());
        for (size_t i = 0; i < x.size(); ++i) s[i] = -x[i];
        return s;
    };
    Rng a(42), b(42);
    auto s1 = reverse_sample<Real>(kSched, score, 50, 10, 2, a);
    auto s2 = reverse_sample<Real>(kSched, score, 50, 10, 2, b);
    CHECK(s1 == s2);
    Rng c(43);
    auto s3 = reverse_sample<Real>(kSched, score, 50, 10, 2, c);
    CHECK(s1 != s3);
}

TEST_CASE("rng substreams and state roundtrip") {
    Rng a(9, 0), b(9, 1);
    CHECK(a.next_u64() != b.next_u64());
    Rng c(9, 0);
    c.next_u64();
    const auto hex = c.state_hex();
    Rng d = Rng::from_state_hex(hex);
    for (int i = 0; i < 8; ++i) CHECK(c.next_u64() == d.next_u64());
}
