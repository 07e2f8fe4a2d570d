#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "scomp/errors.hpp"
#include "scomp/net.hpp"
#include "scomp/tape.hpp"

// Composite score recipes: weighted combinations of latent-conditioned score
// components plus an unconditional term (the all-ones latent). A recipe is a
// plain value describing weights and latents, so it serializes into run
// manifests and every sweep is replayable.

namespace scomp {

template <class Real>
struct CompositeScore {
    struct Term {
        Real weight;
        std::vector<Real> latent;
    };
    std::vector<Term> terms;
    Real uncond_weight = Real(0);

    Real total_weight() const {
        Real s = uncond_weight;
        for (const auto& t : terms) s += t.weight;
        return s;
    }

    void validate() const {
        if (terms.empty() && uncond_weight == Real(0))
            throw ConfigError("composite score: needs at least one term or a nonzero uncond weight");
        for (const auto& t : terms)
            if (!std::isfinite(double(t.weight)))
                throw ConfigError("composite score: non-finite weight");
        if (!std::isfinite(double(uncond_weight)))
            throw ConfigError("composite score: non-finite uncond weight");
    }
};

template <class Real>
std::vector<Real> unconditional_latent(int d_z) {
    if (d_z < 1) throw ConfigError("unconditional_latent: d_z must be >= 1");
    return std::vector<Real>(size_t(d_z), Real(1));
}

// Eq-style decomposition: every component weighted 1/K, no unconditional term.
template <class Real>
CompositeScore<Real> decomposition_recipe(const LatentBundle<Real>& bundle) {
    if (bundle.latents.empty()) throw ConfigError("decomposition_recipe: empty bundle");
    CompositeScore<Real> r;
    const Real w = Real(1) / Real(bundle.K());
    for (const auto& z : bundle.latents) r.terms.push_back({w, z});
    return r;
}

// Dilutes component k (1-based) toward the unconditional score:
// term k gets alpha/K, the others 1/K, uncond (1-alpha)/K.
template <class Real>
CompositeScore<Real> dilute_single(const LatentBundle<Real>& bundle, int k, Real alpha) {
    const int K = bundle.K();
    if (k < 1 || k > K) throw ConfigError("dilute_single: component index out of range");
    if (!(alpha >= Real(0)) || !(alpha <= Real(1)))
        throw std::domain_error("dilute_single: alpha must be in [0, 1]");
    CompositeScore<Real> r;
    for (int i = 1; i <= K; ++i)
        r.terms.push_back({(i == k ? alpha : Real(1)) / Real(K), bundle.latents[size_t(i - 1)]});
    r.uncond_weight = (Real(1) - alpha) / Real(K);
    return r;
}

// Dilutes two distinct components at once; uncond picks up 2(1-alpha)/K.
template <class Real>
CompositeScore<Real> dilute_pair(const LatentBundle<Real>& bundle, int k1, int k2, Real alpha) {
    const int K = bundle.K();
    if (k1 < 1 || k1 > K || k2 < 1 || k2 > K) throw ConfigError("dilute_pair: component index out of range");
    if (k1 == k2) throw ConfigError("dilute_pair: indices must be distinct");
    if (!(alpha >= Real(0)) || !(alpha <= Real(1)))
        throw std::domain_error("dilute_pair: alpha must be in [0, 1]");
    CompositeScore<Real> r;
    for (int i = 1; i <= K; ++i)
        r.terms.push_back({((i == k1 || i == k2) ? alpha : Real(1)) / Real(K), bundle.latents[size_t(i - 1)]});
    r.uncond_weight = Real(2) * (Real(1) - alpha) / Real(K);
    return r;
}

// Per-component weights w_k/K, no unconditional term.
template <class Real>
CompositeScore<Real> tune_weights(const LatentBundle<Real>& bundle, std::span<const Real> w) {
    const int K = bundle.K();
    if (int(w.size()) != K) throw ConfigError("tune_weights: expected " + std::to_string(K) + " weights");
    CompositeScore<Real> r;
    for (int i = 0; i < K; ++i) {
        if (!std::isfinite(double(w[size_t(i)]))) throw ConfigError("tune_weights: non-finite weight");
        r.terms.push_back({w[size_t(i)] / Real(K), bundle.latents[size_t(i)]});
    }
    return r;
}

// One component alone. unit_weight=true gives it weight 1 (a conditional model
// on that component); false keeps the 1/K share from the decomposition.
template <class Real>
CompositeScore<Real> single_component(const LatentBundle<Real>& bundle, int k, bool unit_weight = true) {
    const int K = bundle.K();
    if (k < 1 || k > K) throw ConfigError("single_component: component index out of range");
    CompositeScore<Real> r;
    r.terms.push_back({unit_weight ? Real(1) : Real(1) / Real(K), bundle.latents[size_t(k - 1)]});
    return r;
}

// Generic evaluation against any per-latent score function
// (x, t, latent) -> vector; d_z tells it how to build the ones latent.
template <class Real, class ScoreFn>
std::vector<Real> evaluate_with(const CompositeScore<Real>& recipe, ScoreFn&& score_fn,
                                std::span<const Real> x, Real t, int d_z) {
    recipe.validate();
    std::vector<Real> out(x.size(), Real(0));
    auto accumulate = [&](Real w, const std::vector<Real>& s) {
        if (s.size() != out.size()) throw ConfigError("evaluate: component dimension mismatch");
        for (size_t i = 0; i < out.size(); ++i) out[i] += w * s[i];
    };
    for (const auto& term : recipe.terms)
        accumulate(term.weight, score_fn(x, t, std::span<const Real>(term.latent)));
    if (recipe.uncond_weight != Real(0)) {
        const std::vector<Real> ones = unconditional_latent<Real>(d_z);
        accumulate(recipe.uncond_weight, score_fn(x, t, std::span<const Real>(ones)));
    }
    for (Real v : out)
        if (!std::isfinite(double(v))) throw NumericError("evaluate: non-finite composite score");
    return out;
}

// Network-backed evaluation; all component forwards share one tape so the
// lift/time subgraphs are computed once.
template <class Real>
std::vector<Real> evaluate(const CompositeScore<Real>& recipe, const ScoreNet<Real>& net,
                           std::span<const Real> x, Real t, Tape<Real>& ws) {
    recipe.validate();
    ws.reset();
    BoundParams<Real> bp(ws, net.params());
    std::vector<typename Tape<Real>::Var> zetas;
    zetas.reserve(recipe.terms.size() + 1);
    for (const auto& term : recipe.terms) zetas.push_back(ws.constant(term.latent));
    const bool with_uncond = recipe.uncond_weight != Real(0);
    std::vector<Real> ones;
    if (with_uncond) {
        ones = unconditional_latent<Real>(net.config().d_z);
        zetas.push_back(ws.constant(ones));
    }
    auto scores = net.build_score_multi(ws, bp, x, t, zetas);
    std::vector<Real> out(x.size(), Real(0));
    for (size_t i = 0; i < recipe.terms.size(); ++i) {
        auto s = ws.value(scores[i]);
        for (size_t j = 0; j < out.size(); ++j) out[j] += recipe.terms[i].weight * s[j];
    }
    if (with_uncond) {
        auto s = ws.value(scores.back());
        for (size_t j = 0; j < out.size(); ++j) out[j] += recipe.uncond_weight * s[j];
    }
    return out;
}

template <class Real>
std::vector<Real> evaluate(const CompositeScore<Real>& recipe, const ScoreNet<Real>& net,
                           std::span<const Real> x, Real t) {
    Tape<Real> ws;
    return evaluate(recipe, net, x, t, ws);
}

// Adapts a recipe + net to the (x, t) -> score shape reverse_sample expects.
template <class Real>
auto recipe_score_fn(const ScoreNet<Real>& net, CompositeScore<Real> recipe) {
    return [&net, recipe = std::move(recipe), ws = Tape<Real>()](std::span<const Real> x,
                                                                 Real t) mutable {
        return evaluate(recipe, net, x, t, ws);
    };
}

}  // namespace scomp
