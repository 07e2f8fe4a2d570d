#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "scomp/net.hpp"
#include "scomp/rng.hpp"

using namespace scomp;
using Real = double;

namespace {

NetConfig small_cfg() {
    NetConfig cfg;
    cfg.d = 2;
    cfg.d_z = 4;
    cfg.hidden_width = 16;
    cfg.n_blocks = 2;
    cfg.time_embed_dim = 8;
    cfg.group_size = 4;
    cfg.K = 3;
    return cfg;
}

}  // namespace

TEST_CASE("time_embed shape and t=0 values") {
    auto e = time_embed<Real>(0.0, 12);
    REQUIRE(e.size() == 12);
    for (int j = 0; j < 6; ++j) {
        CHECK(e[j] == 0.0);       // sin block
        CHECK(e[6 + j] == 1.0);   // cos block
    }
    CHECK_THROWS_AS(time_embed<Real>(0.5, 7), ConfigError);
}

TEST_CASE("time_embed separates distinct times on a 1e3 grid") {
    const int n = 1000;
    std::vector<std::vector<Real>> embs;
    embs.reserve(n);
    for (int i = 0; i < n; ++i)
        embs.push_back(time_embed<Real>(1e-3 + (1.0 - 1e-3) * i / (n - 1), 16));
    double min_dist = 1e300;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double d = 0;
            for (int k = 0; k < 16; ++k) d += (embs[i][k] - embs[j][k]) * (embs[i][k] - embs[j][k]);
            min_dist = std::min(min_dist, d);
        }
    CHECK(min_dist > 0.0);
}

TEST_CASE("group_normalize: constant input maps to zeros") {
    std::vector<Real> h(12, 5.0);
    auto out = group_normalize<Real>(h, 4);
    for (Real v : out) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("group_normalize is invariant to per-group rescaling above the eps floor") {
    Rng rng(7);
    std::vector<Real> h(16);
    for (auto& v : h) v = rng.normal();
    auto base = group_normalize<Real>(h, 8);
    std::vector<Real> scaled = h;
    for (auto& v : scaled) v *= 1e3;
    auto big = group_normalize<Real>(scaled, 8);
    // the 1e-5 variance floor shifts the result by ~eps/2 relative at unit variance
    for (size_t i = 0; i < h.size(); ++i) CHECK(big[i] == doctest::Approx(base[i]).epsilon(2e-5));
}

TEST_CASE("modulate at init is plain group normalization") {
    // init sets zs.b = ts.b = 1-vector biases... zs.b = 1, ts.b = 1, tb.b = 0,
    // with small random weights; zero them to force the exact identity.
    Rng rng(1);
    auto net = ScoreNet<Real>::init(small_cfg(), rng);
    for (auto& e : net.params().entries()) {
        if (e.name.find(".ts.W") != std::string::npos || e.name.find(".tb.W") != std::string::npos ||
            e.name.find(".zs.W") != std::string::npos)
            for (auto& v : e.values) v = 0.0;
    }
    Rng rng2(2);
    std::vector<Real> h(16), zeta(4);
    for (auto& v : h) v = rng2.normal();
    for (auto& v : zeta) v = rng2.normal();
    auto out = net.modulate(0, h, 0.37, zeta);
    auto gn = group_normalize<Real>(h, 4);
    for (size_t i = 0; i < h.size(); ++i) CHECK(out[i] == doctest::Approx(gn[i]).epsilon(1e-12));
}

TEST_CASE("modulate is linear in zeta_s") {
    Rng rng(3);
    auto net = ScoreNet<Real>::init(small_cfg(), rng);
    // zero the zeta-affine bias so zeta_s is linear (not affine) in zeta
    for (auto& e : net.params().entries())
        if (e.name.find(".zs.b") != std::string::npos)
            for (auto& v : e.values) v = 0.0;
    std::vector<Real> h(16), zeta(4);
    for (auto& v : h) v = rng.normal();
    for (auto& v : zeta) v = rng.normal();
    std::vector<Real> zeta2 = zeta;
    for (auto& v : zeta2) v *= 2.0;
    auto m1 = net.modulate(1, h, 0.6, zeta);
    auto m2 = net.modulate(1, h, 0.6, zeta2);
    for (size_t i = 0; i < h.size(); ++i) CHECK(m2[i] == doctest::Approx(2.0 * m1[i]).epsilon(1e-10));
}

TEST_CASE("modulate with zero zeta_s is the zero vector") {
    Rng rng(4);
    auto net = ScoreNet<Real>::init(small_cfg(), rng);
    for (auto& e : net.params().entries())
        if (e.name.find(".zs.") != std::string::npos)
            for (auto& v : e.values) v = 0.0;
    std::vector<Real> h(16, 0.5), zeta(4, 1.0);
    auto out = net.modulate(0, h, 0.2, zeta);
    for (Real v : out) CHECK(v == 0.0);
}

TEST_CASE("forward_score shape, determinism, and near-zero init") {
    Rng rng(5);
    auto net = ScoreNet<Real>::init(small_cfg(), rng);
    const std::vector<Real> x = {0.4, -1.1};
    const std::vector<Real> zeta = {0.3, -0.2, 0.9, 0.0};
    auto s1 = net.score(x, 0.5, zeta);
    auto s2 = net.score(x, 0.5, zeta);
    REQUIRE(s1.size() == 2);
    CHECK(s1 == s2);  // bit-identical
    for (Real v : s1) CHECK(std::abs(v) < 0.05);  // zero-ish head init
    const std::vector<Real> bad = {0.1};
    CHECK_THROWS_AS(net.score(bad, 0.5, zeta), ConfigError);
}

TEST_CASE("encode produces K x d_z and is deterministic") {
    Rng rng(6);
    auto net = ScoreNet<Real>::init(small_cfg(), rng);
    const std::vector<Real> x = {1.0, 2.0};
    auto b1 = net.encode(x);
    auto b2 = net.encode(x);
    REQUIRE(b1.K() == 3);
    for (const auto& z : b1.latents) CHECK(z.size() == 4);
    CHECK(b1.latents == b2.latents);
    // distinct inputs map to distinct bundles even at init
    const std::vector<Real> y = {-1.0, 0.5};
    auto b3 = net.encode(y);
    double dist = 0;
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 4; ++j)
            dist += std::abs(b1.latents[k][j] - b3.latents[k][j]);
    CHECK(dist > 0.0);
}

TEST_CASE("net config validation") {
    NetConfig cfg = small_cfg();
    cfg.hidden_width = 15;  // not divisible by group_size=4
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_cfg();
    cfg.time_embed_dim = 9;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_cfg();
    cfg.K = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("score gradients match finite differences through encode + score") {
    auto cfg = small_cfg();
    Rng rng(11);
    auto net = ScoreNet<Real>::init(cfg, rng);
    const std::vector<Real> x0 = {0.8, -0.3};
    const std::vector<Real> xt = {0.2, 0.6};
    const Real t = 0.45;

    auto builder = [&](Tape<Real>& tape, BoundParams<Real>& bp) {
        auto zetas = net.build_encode(tape, bp, x0);
        auto scores = net.build_score_multi(tape, bp, xt, t, zetas);
        auto comp = scores[0];
        for (size_t k = 1; k < scores.size(); ++k) comp = tape.add(comp, scores[k]);
        comp = tape.scale(comp, 1.0 / 3.0);
        return tape.sum_squares(comp);
    };
    ParamStore<Real> g;
    grad<Real>(net.params(), builder, g);

    auto loss_at = [&]() {
        Tape<Real> tape;
        BoundParams<Real> bp(tape, net.params());
        return double(tape.value(builder(tape, bp))[0]);
    };
    Rng pick(29);
    int checked = 0;
    for (int probe = 0; probe < 200 && checked < 50; ++probe) {
        auto& entries = net.params().entries();
        const size_t e = pick.uniform_index(entries.size());
        const size_t i = pick.uniform_index(entries[e].values.size());
        const double an = double(g.entries()[e].values[i]);
        const double h = 1e-4;
        const Real orig = entries[e].values[i];
        entries[e].values[i] = orig + h;
        const double lp = loss_at();
        entries[e].values[i] = orig - h;
        const double lm = loss_at();
        entries[e].values[i] = orig;
        const double fd = (lp - lm) / (2 * h);
        if (std::abs(fd) < 1e-10 && std::abs(an) < 1e-10) continue;
        ++checked;
        CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
    CHECK(checked >= 30);
}
