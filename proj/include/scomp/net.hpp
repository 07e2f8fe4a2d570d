#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scomp/errors.hpp"
#include "scomp/param_store.hpp"
#include "scomp/rng.hpp"
#include "scomp/tape.hpp"

// Latent-conditioned score network and encoder.
//
// The score net is a residual MLP: a linear lift of [x, time_embed(t)], then
// n_blocks of  h += silu(AdaGN(linear(h), t, zeta))  where
//
//   AdaGN(v, t, zeta) = zeta_s * (t_s * GroupNorm(v) + t_b)
//
// with (t_s, t_b) projected from a shared time trunk and zeta_s an affine map
// of the latent, then a linear head to dimension d. The encoder is a shared
// MLP trunk with K linear heads, one latent per component.

namespace scomp {

inline constexpr double kGroupNormEps = 1e-5;

struct NetConfig {
    int d = 2;                // data dimension
    int d_z = 16;             // latent dimension
    int hidden_width = 128;
    int n_blocks = 4;
    int time_embed_dim = 64;
    int group_size = 8;
    int K = 3;                // number of score components

    void validate() const {
        if (d < 1 || d_z < 1 || hidden_width < 1 || n_blocks < 1 || time_embed_dim < 1 ||
            group_size < 1 || K < 1)
            throw ConfigError("net config: all fields must be positive");
        if (hidden_width % group_size != 0)
            throw ConfigError("net config: hidden_width must be divisible by group_size");
        if (time_embed_dim % 2 != 0) throw ConfigError("net config: time_embed_dim must be even");
    }
};

template <class Real>
struct LatentBundle {
    std::vector<std::vector<Real>> latents;  // K vectors of length d_z

    int K() const { return int(latents.size()); }

    void validate(int expected_k, int d_z) const {
        if (int(latents.size()) != expected_k) throw ConfigError("latent bundle: wrong K");
        for (const auto& z : latents) {
            if (int(z.size()) != d_z) throw ConfigError("latent bundle: wrong latent dimension");
            for (Real v : z)
                if (!std::isfinite(double(v))) throw NumericError("latent bundle: non-finite latent");
        }
    }
};

// Sinusoidal features [sin(w_j t)..., cos(w_j t)...] with w_j log-spaced in
// [1, 1000]; length dim (dim even).
template <class Real>
std::vector<Real> time_embed(Real t, int dim) {
    if (dim < 2 || dim % 2 != 0) throw ConfigError("time_embed: dim must be even and >= 2");
    const int m = dim / 2;
    std::vector<Real> out(static_cast<size_t>(dim));
    for (int j = 0; j < m; ++j) {
        const double w = (m == 1) ? 1.0 : std::pow(1000.0, double(j) / double(m - 1));
        out[size_t(j)] = Real(std::sin(w * double(t)));
        out[size_t(m + j)] = Real(std::cos(w * double(t)));
    }
    return out;
}

// Standalone group normalization (same math as the tape op).
template <class Real>
std::vector<Real> group_normalize(std::span<const Real> h, int group_size) {
    Tape<Real> tape;
    auto v = tape.group_norm(tape.constant(h), group_size, Real(kGroupNormEps));
    auto out = tape.value(v);
    return {out.begin(), out.end()};
}

template <class Real>
ParamStore<Real> init_params(const NetConfig& cfg, Rng& rng) {
    cfg.validate();
    ParamStore<Real> p;
    const int64_t h = cfg.hidden_width, d = cfg.d, dz = cfg.d_z, ted = cfg.time_embed_dim;
    auto lin = [&](const std::string& name, int64_t m, int64_t n) {
        p.add(name + ".W", {m, n});
        p.add(name + ".b", {m});
    };
    lin("enc.trunk1", h, d);
    lin("enc.trunk2", h, h);
    for (int k = 1; k <= cfg.K; ++k) lin("enc.head" + std::to_string(k), dz, h);
    lin("net.lift", h, d + ted);
    lin("net.time", h, ted);
    for (int i = 0; i < cfg.n_blocks; ++i) {
        const std::string b = "net.block" + std::to_string(i);
        lin(b + ".lin", h, h);
        lin(b + ".ts", h, h);
        lin(b + ".tb", h, h);
        lin(b + ".zs", h, dz);
    }
    lin("net.head", d, h);

    // fan-in scaled uniform; modulation biases start at identity (ts=1, zs=1,
    // tb=0); the head starts near zero so the initial score is ~0.
    for (auto& e : p.entries()) {
        if (e.shape.size() == 2) {
            const double bound = 1.0 / std::sqrt(double(e.shape[1]));
            const double s = (e.name == "net.head.W") ? 1e-3 : 1.0;
            for (auto& v : e.values) v = Real(s * bound * (2.0 * rng.uniform() - 1.0));
        } else {
            Real fill = Real(0);
            if (e.name.find(".ts.b") != std::string::npos || e.name.find(".zs.b") != std::string::npos)
                fill = Real(1);
            for (auto& v : e.values) v = fill;
        }
    }
    return p;
}

template <class Real>
class ScoreNet {
public:
    using Var = typename Tape<Real>::Var;

    ScoreNet() = default;
    ScoreNet(NetConfig cfg, ParamStore<Real> params) : cfg_(cfg), params_(std::move(params)) {
        cfg_.validate();
        resolve_indices();
    }

    static ScoreNet init(const NetConfig& cfg, Rng& rng) { return ScoreNet(cfg, init_params<Real>(cfg, rng)); }

    const NetConfig& config() const { return cfg_; }
    const ParamStore<Real>& params() const { return params_; }
    ParamStore<Real>& params() { return params_; }

    // --- graph builders ---------------------------------------------------

    // One score forward per latent, sharing the lift, time trunk and (t_s,t_b)
    // projections across latents; the latents may be tape vars (training) or
    // plain vectors wrapped by the caller.
    std::vector<Var> build_score_multi(Tape<Real>& tape, const BoundParams<Real>& bp,
                                       std::span<const Real> x, Real t,
                                       std::span<const Var> zetas) const {
        check_input(x);
        std::vector<Real> emb = time_embed(t, cfg_.time_embed_dim);
        std::vector<Real> lift_in(x.begin(), x.end());
        lift_in.insert(lift_in.end(), emb.begin(), emb.end());
        const Var lift = tape.linear(bp.by_index(ix_.lift_w), bp.by_index(ix_.lift_b),
                                     tape.constant(lift_in));
        const Var tt = tape.silu(tape.linear(bp.by_index(ix_.time_w), bp.by_index(ix_.time_b),
                                             tape.constant(emb)));
        std::vector<Var> ts(ix_.blocks.size()), tb(ix_.blocks.size());
        for (size_t i = 0; i < ix_.blocks.size(); ++i) {
            ts[i] = tape.linear(bp.by_index(ix_.blocks[i].ts_w), bp.by_index(ix_.blocks[i].ts_b), tt);
            tb[i] = tape.linear(bp.by_index(ix_.blocks[i].tb_w), bp.by_index(ix_.blocks[i].tb_b), tt);
        }
        std::vector<Var> scores;
        scores.reserve(zetas.size());
        for (const Var zeta : zetas) {
            std::vector<Var> zs(ix_.blocks.size());
            for (size_t i = 0; i < ix_.blocks.size(); ++i)
                zs[i] = tape.linear(bp.by_index(ix_.blocks[i].zs_w), bp.by_index(ix_.blocks[i].zs_b), zeta);
            Var h = lift;
            for (size_t i = 0; i < ix_.blocks.size(); ++i) {
                const Var pre = tape.linear(bp.by_index(ix_.blocks[i].lin_w), bp.by_index(ix_.blocks[i].lin_b), h);
                const Var gn = tape.group_norm(pre, cfg_.group_size, Real(kGroupNormEps));
                const Var mod = tape.mul(zs[i], tape.add(tape.mul(ts[i], gn), tb[i]));
                h = tape.add(h, tape.silu(mod));
                if (!all_finite(tape.value(h)))
                    throw NumericError("score net: non-finite activations in block " + std::to_string(i));
            }
            const Var s = tape.linear(bp.by_index(ix_.head_w), bp.by_index(ix_.head_b), h);
            if (!all_finite(tape.value(s))) throw NumericError("score net: non-finite score output");
            scores.push_back(s);
        }
        return scores;
    }

    std::vector<Var> build_encode(Tape<Real>& tape, const BoundParams<Real>& bp,
                                  std::span<const Real> x) const {
        check_input(x);
        const Var t1 = tape.silu(tape.linear(bp.by_index(ix_.enc1_w), bp.by_index(ix_.enc1_b),
                                             tape.constant(x)));
        const Var t2 = tape.silu(tape.linear(bp.by_index(ix_.enc2_w), bp.by_index(ix_.enc2_b), t1));
        std::vector<Var> heads;
        heads.reserve(ix_.enc_heads.size());
        for (const auto& [w, b] : ix_.enc_heads) {
            Var z = tape.linear(bp.by_index(w), bp.by_index(b), t2);
            if (!all_finite(tape.value(z))) throw NumericError("encoder: non-finite latent");
            heads.push_back(z);
        }
        return heads;
    }

    // --- value paths --------------------------------------------------------

    std::vector<Real> score(std::span<const Real> x, Real t, std::span<const Real> zeta,
                            Tape<Real>& ws) const {
        ws.reset();
        BoundParams<Real> bp(ws, params_);
        const Var z = ws.constant(zeta);
        auto scores = build_score_multi(ws, bp, x, t, std::span<const Var>(&z, 1));
        auto v = ws.value(scores[0]);
        return {v.begin(), v.end()};
    }

    std::vector<Real> score(std::span<const Real> x, Real t, std::span<const Real> zeta) const {
        Tape<Real> ws;
        return score(x, t, zeta, ws);
    }

    LatentBundle<Real> encode(std::span<const Real> x, Tape<Real>& ws) const {
        ws.reset();
        BoundParams<Real> bp(ws, params_);
        auto heads = build_encode(ws, bp, x);
        LatentBundle<Real> out;
        for (Var h : heads) {
            auto v = ws.value(h);
            out.latents.emplace_back(v.begin(), v.end());
        }
        return out;
    }

    LatentBundle<Real> encode(std::span<const Real> x) const {
        Tape<Real> ws;
        return encode(x, ws);
    }

    // AdaGN for one block, exposed for direct probing.
    std::vector<Real> modulate(int block, std::span<const Real> h, Real t,
                               std::span<const Real> zeta) const {
        if (block < 0 || block >= cfg_.n_blocks) throw ConfigError("modulate: bad block index");
        Tape<Real> tape;
        BoundParams<Real> bp(tape, params_);
        std::vector<Real> emb = time_embed(t, cfg_.time_embed_dim);
        const Var tt = tape.silu(tape.linear(bp.by_index(ix_.time_w), bp.by_index(ix_.time_b),
                                             tape.constant(emb)));
        const auto& blk = ix_.blocks[size_t(block)];
        const Var ts = tape.linear(bp.by_index(blk.ts_w), bp.by_index(blk.ts_b), tt);
        const Var tb = tape.linear(bp.by_index(blk.tb_w), bp.by_index(blk.tb_b), tt);
        const Var zs = tape.linear(bp.by_index(blk.zs_w), bp.by_index(blk.zs_b), tape.constant(zeta));
        const Var gn = tape.group_norm(tape.constant(h), cfg_.group_size, Real(kGroupNormEps));
        const Var out = tape.mul(zs, tape.add(tape.mul(ts, gn), tb));
        auto v = tape.value(out);
        return {v.begin(), v.end()};
    }

private:
    struct BlockIdx {
        size_t lin_w, lin_b, ts_w, ts_b, tb_w, tb_b, zs_w, zs_b;
    };
    struct Indices {
        size_t enc1_w, enc1_b, enc2_w, enc2_b;
        std::vector<std::pair<size_t, size_t>> enc_heads;
        size_t lift_w, lift_b, time_w, time_b, head_w, head_b;
        std::vector<BlockIdx> blocks;
    };

    void resolve_indices() {
        const auto& p = params_;
        ix_.enc1_w = p.index_of("enc.trunk1.W");
        ix_.enc1_b = p.index_of("enc.trunk1.b");
        ix_.enc2_w = p.index_of("enc.trunk2.W");
        ix_.enc2_b = p.index_of("enc.trunk2.b");
        for (int k = 1; k <= cfg_.K; ++k)
            ix_.enc_heads.emplace_back(p.index_of("enc.head" + std::to_string(k) + ".W"),
                                       p.index_of("enc.head" + std::to_string(k) + ".b"));
        ix_.lift_w = p.index_of("net.lift.W");
        ix_.lift_b = p.index_of("net.lift.b");
        ix_.time_w = p.index_of("net.time.W");
        ix_.time_b = p.index_of("net.time.b");
        for (int i = 0; i < cfg_.n_blocks; ++i) {
            const std::string b = "net.block" + std::to_string(i);
            ix_.blocks.push_back(BlockIdx{
                p.index_of(b + ".lin.W"), p.index_of(b + ".lin.b"),
                p.index_of(b + ".ts.W"), p.index_of(b + ".ts.b"),
                p.index_of(b + ".tb.W"), p.index_of(b + ".tb.b"),
                p.index_of(b + ".zs.W"), p.index_of(b + ".zs.b")});
        }
        ix_.head_w = p.index_of("net.head.W");
        ix_.head_b = p.index_of("net.head.b");
        // shape sanity against the config
        if (p.entries()[ix_.lift_w].shape != std::vector<int64_t>{cfg_.hidden_width, cfg_.d + cfg_.time_embed_dim})
            throw ConfigError("score net: parameter shapes do not match the config");
    }

    void check_input(std::span<const Real> x) const {
        if (int(x.size()) != cfg_.d) throw ConfigError("score net: input dimension mismatch");
        for (Real v : x)
            if (!std::isfinite(double(v))) throw NumericError("score net: non-finite input");
    }

    static bool all_finite(std::span<const Real> v) {
        for (Real u : v)
            if (!std::isfinite(double(u))) return false;
        return true;
    }

    NetConfig cfg_;
    ParamStore<Real> params_;
    Indices ix_;
};

}  // namespace scomp
