#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "scomp/param_store.hpp"
#include "scomp/rng.hpp"
#include "scomp/tape.hpp"

using namespace scomp;
using Real = double;
using Var = Tape<Real>::Var;

TEST_CASE("param store basics") {
    ParamStore<Real> p;
    auto a = p.add("a", {2, 3});
    CHECK(a.size() == 6);
    p.add("b", {4});
    CHECK(p.total_count() == 10);
    CHECK(p.has("a"));
    CHECK(!p.has("c"));
    CHECK_THROWS_AS(p.add("a", {1}), ConfigError);
    CHECK_THROWS_AS(p.values("zzz"), ConfigError);
    auto q = ParamStore<Real>::like(p);
    CHECK(q.same_shapes(p));
    for (const auto& e : q.entries())
        for (Real v : e.values) CHECK(v == 0.0);
}

TEST_CASE("linear forward and backward") {
    Tape<Real> tape;
    const std::vector<Real> w = {1, 2, 3, 4, 5, 6};  // 2x3
    const std::vector<Real> b = {10, 20};
    const std::vector<Real> x = {1, -1, 2};
    Var vw = tape.view(w), vb = tape.view(b), vx = tape.constant(x);
    Var y = tape.linear(vw, vb, vx);
    auto yv = tape.value(y);
    CHECK(yv[0] == 15.0);   // 1-2+6+10
    CHECK(yv[1] == 31.0);   // 4-5+12+20
    Var loss = tape.sum(y);
    tape.backward(loss);
    auto gw = tape.gradient(vw);
    auto gb = tape.gradient(vb);
    auto gx = tape.gradient(vx);
    // d(sum y)/dW_ij = x_j
    CHECK(std::vector<Real>(gw.begin(), gw.end()) == std::vector<Real>{1, -1, 2, 1, -1, 2});
    CHECK(std::vector<Real>(gb.begin(), gb.end()) == std::vector<Real>{1, 1});
    CHECK(std::vector<Real>(gx.begin(), gx.end()) == std::vector<Real>{5, 7, 9});
}

TEST_CASE("gradient of half squared norm is the parameter itself") {
    ParamStore<Real> params;
    auto theta = params.add("theta", {5});
    Rng rng(2);
    for (auto& v : theta) v = rng.normal();
    ParamStore<Real> g;
    const Real loss = grad<Real>(params, [](Tape<Real>& t, BoundParams<Real>& bp) {
        return t.scale(t.sum_squares(bp["theta"]), 0.5);
    }, g);
    double want = 0.0;
    for (Real v : params.values("theta")) want += 0.5 * v * v;
    CHECK(double(loss) == doctest::Approx(want).epsilon(1e-15));
    for (size_t i = 0; i < 5; ++i)
        CHECK(g.values("theta")[i] == params.values("theta")[i]);
}

TEST_CASE("gradient of a constant loss is zero") {
    ParamStore<Real> params;
    auto theta = params.add("theta", {3});
    theta[0] = 1;
    theta[1] = 2;
    theta[2] = 3;
    ParamStore<Real> g;
    grad<Real>(params, [](Tape<Real>& t, BoundParams<Real>&) {
        const std::vector<Real> c = {7.0};
        return t.constant(c);
    }, g);
    for (Real v : g.values("theta")) CHECK(v == 0.0);
}

TEST_CASE("fan-out accumulates gradients") {
    ParamStore<Real> params;
    auto theta = params.add("theta", {2});
    theta[0] = 0.5;
    theta[1] = -1.5;
    ParamStore<Real> g;
    // loss = sum(theta * theta) + 3 * sum(theta) uses theta three times
    grad<Real>(params, [](Tape<Real>& t, BoundParams<Real>& bp) {
        Var th = bp["theta"];
        return t.add(t.sum(t.mul(th, th)), t.scale(t.sum(th), 3.0));
    }, g);
    CHECK(g.values("theta")[0] == doctest::Approx(2 * 0.5 + 3).epsilon(1e-15));
    CHECK(g.values("theta")[1] == doctest::Approx(2 * -1.5 + 3).epsilon(1e-15));
}

TEST_CASE("group_norm forward: zero mean, unit variance, constant to zero") {
    Tape<Real> tape;
    const std::vector<Real> c(8, 3.7);
    auto z = tape.value(tape.group_norm(tape.constant(c), 4, 1e-5));
    for (Real v : z) CHECK(std::abs(v) < 1e-9);

    Rng rng(3);
    std::vector<Real> h(16);
    for (auto& v : h) v = rng.normal() * 2 + 1;
    Tape<Real> t2;
    auto y = t2.value(t2.group_norm(t2.constant(h), 8, 1e-5));
    for (int g0 = 0; g0 < 16; g0 += 8) {
        double mean = 0, var = 0;
        for (int i = 0; i < 8; ++i) mean += y[g0 + i];
        mean /= 8;
        for (int i = 0; i < 8; ++i) var += (y[g0 + i] - mean) * (y[g0 + i] - mean);
        var /= 8;
        CHECK(std::abs(mean) < 1e-4);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
    }
    CHECK_THROWS_AS(t2.group_norm(t2.constant(h), 5, 1e-5), ConfigError);
}

TEST_CASE("whole-graph gradients match central finite differences") {
    // a small net-shaped composite: linear -> group_norm -> mul -> silu -> sum_squares
    ParamStore<Real> params;
    Rng rng(17);
    for (auto& v : params.add("W", {8, 4})) v = rng.normal() * 0.5;
    for (auto& v : params.add("b", {8})) v = rng.normal() * 0.1;
    for (auto& v : params.add("gain", {8})) v = rng.normal() * 0.5 + 1.0;
    const std::vector<Real> x = {0.3, -1.2, 0.8, 0.05};

    auto builder = [&x](Tape<Real>& t, BoundParams<Real>& bp) {
        Var h = t.linear(bp["W"], bp["b"], t.constant(x));
        Var gn = t.group_norm(h, 4, 1e-5);
        Var m = t.mul(bp["gain"], gn);
        Var s = t.silu(m);
        return t.add(t.sum_squares(s), t.scale(t.dot(s, bp["gain"]), 0.25));
    };
    ParamStore<Real> g;
    grad<Real>(params, builder, g);

    auto loss_at = [&](ParamStore<Real>& p) {
        Tape<Real> t;
        BoundParams<Real> bp(t, p);
        return double(t.value(builder(t, bp))[0]);
    };
    Rng pick(23);
    for (int probe = 0; probe < 60; ++probe) {
        auto& entries = params.entries();
        const size_t e = pick.uniform_index(entries.size());
        const size_t i = pick.uniform_index(entries[e].values.size());
        const double h = 1e-5;
        const Real orig = entries[e].values[i];
        entries[e].values[i] = orig + h;
        const double lp = loss_at(params);
        entries[e].values[i] = orig - h;
        const double lm = loss_at(params);
        entries[e].values[i] = orig;
        const double fd = (lp - lm) / (2 * h);
        const double an = double(g.entries()[e].values[i]);
        CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("non-finite loss raises a numeric error") {
    ParamStore<Real> params;
    params.add("theta", {1});
    ParamStore<Real> g;
    CHECK_THROWS_AS(grad<Real>(params, [](Tape<Real>& t, BoundParams<Real>&) {
        const std::vector<Real> c = {std::numeric_limits<Real>::infinity()};
        return t.constant(c);
    }, g), NumericError);
}

TEST_CASE("tape reuse via reset") {
    Tape<Real> tape;
    const std::vector<Real> a = {1, 2}, b = {3, 4};
    for (int i = 0; i < 3; ++i) {
        tape.reset();
        Var s = tape.add(tape.constant(a), tape.constant(b));
        auto v = tape.value(s);
        CHECK(v[0] == 4.0);
        CHECK(v[1] == 6.0);
    }
}
