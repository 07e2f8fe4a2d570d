#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scomp/compose.hpp"
#include "scomp/container.hpp"
#include "scomp/dataset.hpp"
#include "scomp/errors.hpp"
#include "scomp/net.hpp"
#include "scomp/sde.hpp"
#include "scomp/tape.hpp"

// Per-datum denoising score matching: each batch element is encoded into K
// latents, the K-component composite score is regressed onto the perturbation
// kernel's score target, and with probability uncond_drop_prob the latents are
// replaced by the all-ones vector so the same network also learns the
// unconditional score.

namespace scomp {

enum class LambdaWeighting { sigma2, one };

inline std::string to_string(LambdaWeighting w) {
    return w == LambdaWeighting::sigma2 ? "sigma2" : "one";
}

inline LambdaWeighting lambda_weighting_from_string(const std::string& s) {
    if (s == "sigma2") return LambdaWeighting::sigma2;
    if (s == "one") return LambdaWeighting::one;
    throw ConfigError("unknown lambda weighting '" + s + "' (sigma2|one)");
}

template <class Real>
Real lambda_value(LambdaWeighting mode, const DiffusionSchedule<Real>& sched, Real t) {
    return mode == LambdaWeighting::sigma2 ? Real(1) - alpha_bar(sched, t) : Real(1);
}

template <class Real>
struct TrainConfig {
    int64_t iterations = 5000;
    int batch_size = 32;
    Real learning_rate = Real(1e-3);
    LambdaWeighting lambda_weighting = LambdaWeighting::sigma2;
    Real uncond_drop_prob = Real(0.1);
    uint64_t seed = 1;
    NetConfig net;
    DiffusionSchedule<Real> schedule;

    void validate() const {
        if (iterations < 0) throw ConfigError("train config: iterations must be >= 0");
        if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
        if (!(learning_rate > Real(0))) throw ConfigError("train config: learning_rate must be > 0");
        if (!(uncond_drop_prob >= Real(0)) || !(uncond_drop_prob < Real(1)))
            throw ConfigError("train config: uncond_drop_prob must be in [0, 1)");
        net.validate();
        schedule.validate();
    }
};

template <class Real>
struct AdamState {
    ParamStore<Real> m, v;
    int64_t step = 0;
    Real beta1 = Real(0.9);
    Real beta2 = Real(0.999);
    Real eps_hat = Real(1e-8);

    static AdamState like(const ParamStore<Real>& params) {
        AdamState s;
        s.m = ParamStore<Real>::like(params);
        s.v = ParamStore<Real>::like(params);
        return s;
    }
};

template <class Real>
void adam_update(ParamStore<Real>& params, const ParamStore<Real>& grads, AdamState<Real>& adam,
                 Real learning_rate) {
    if (!params.same_shapes(grads) || !params.same_shapes(adam.m))
        throw ConfigError("adam_update: shape mismatch");
    adam.step += 1;
    const double b1 = double(adam.beta1), b2 = double(adam.beta2);
    const double bc1 = 1.0 - std::pow(b1, double(adam.step));
    const double bc2 = 1.0 - std::pow(b2, double(adam.step));
    auto& pe = params.entries();
    auto& me = adam.m.entries();
    auto& ve = adam.v.entries();
    const auto& ge = grads.entries();
    for (size_t e = 0; e < pe.size(); ++e) {
        for (size_t i = 0; i < pe[e].values.size(); ++i) {
            const double g = double(ge[e].values[i]);
            const double m = b1 * double(me[e].values[i]) + (1.0 - b1) * g;
            const double v = b2 * double(ve[e].values[i]) + (1.0 - b2) * g * g;
            me[e].values[i] = Real(m);
            ve[e].values[i] = Real(v);
            const double mh = m / bc1, vh = v / bc2;
            pe[e].values[i] = Real(double(pe[e].values[i]) -
                                   double(learning_rate) * mh / (std::sqrt(vh) + double(adam.eps_hat)));
        }
    }
}

// One-sample DSM loss: perturb x0 at t, evaluate the K-component composite at
// (x_t, t) and return lambda_t * || composite - target_score ||^2.
template <class Real>
Real dsm_loss(const ScoreNet<Real>& net, std::span<const Real> x0, const LatentBundle<Real>& bundle,
              Real t, LambdaWeighting weighting, const DiffusionSchedule<Real>& sched, Rng& rng) {
    bundle.validate(net.config().K, net.config().d_z);
    const PerturbationSample<Real> ps = perturb<Real>(sched, x0, t, rng);
    const std::vector<Real> comp = evaluate(decomposition_recipe(bundle), net,
                                            std::span<const Real>(ps.x_t), t);
    double acc = 0.0;
    for (size_t i = 0; i < comp.size(); ++i) {
        const double e = double(comp[i]) - double(ps.target_score[i]);
        acc += e * e;
    }
    const Real loss = lambda_value(weighting, sched, t) * Real(acc);
    if (!std::isfinite(double(loss))) throw NumericError("dsm_loss: non-finite loss at t=" + std::to_string(double(t)));
    return loss;
}

// One optimizer step on the mean loss of a batch. Per element the rng draw
// order is fixed: t, drop coin, then the perturbation noise. Encoder and score
// net are trained jointly through one tape.
template <class Real>
Real train_step(ScoreNet<Real>& net, AdamState<Real>& adam, std::span<const std::vector<Real>> batch,
                const TrainConfig<Real>& cfg, Rng& rng) {
    if (batch.empty()) throw ConfigError("train_step: empty batch");
    using Var = typename Tape<Real>::Var;
    Tape<Real> tape;
    BoundParams<Real> bp(tape, net.params());
    const int K = cfg.net.K;
    const std::vector<Real> ones = unconditional_latent<Real>(cfg.net.d_z);
    Var total{};
    for (size_t e = 0; e < batch.size(); ++e) {
        const Real t = Real(rng.uniform(double(cfg.schedule.t_eps), double(cfg.schedule.t_end)));
        const bool drop = rng.uniform() < double(cfg.uncond_drop_prob);
        std::vector<Var> zetas;
        if (drop) {
            zetas.assign(size_t(K), Var{});
            for (auto& z : zetas) z = tape.constant(ones);
        } else {
            zetas = net.build_encode(tape, bp, batch[e]);
        }
        const PerturbationSample<Real> ps = perturb<Real>(cfg.schedule, batch[e], t, rng);
        auto scores = net.build_score_multi(tape, bp, ps.x_t, t, zetas);
        Var comp = scores[0];
        for (size_t k = 1; k < scores.size(); ++k) comp = tape.add(comp, scores[k]);
        comp = tape.scale(comp, Real(1) / Real(K));
        const Var err = tape.sub(comp, tape.constant(ps.target_score));
        const Var l = tape.scale(tape.sum_squares(err), lambda_value(cfg.lambda_weighting, cfg.schedule, t));
        total = (e == 0) ? l : tape.add(total, l);
    }
    const Var mean_loss = tape.scale(total, Real(1) / Real(batch.size()));
    const Real loss_value = tape.value(mean_loss)[0];
    if (!std::isfinite(double(loss_value))) throw NumericError("train_step: non-finite loss");
    tape.backward(mean_loss);
    ParamStore<Real> grads = bp.collect_gradients();
    for (const auto& ge : grads.entries())
        for (Real g : ge.values)
            if (!std::isfinite(double(g))) throw NumericError("train_step: non-finite gradient");
    adam_update(net.params(), grads, adam, cfg.learning_rate);
    return loss_value;
}

struct LossRecord {
    int64_t iteration;
    double loss;
    double wallclock_s;
};

template <class Real>
struct Checkpoint {
    int version = 1;
    TrainConfig<Real> config;
    ParamStore<Real> params;
    int64_t iteration = 0;
    std::string rng_state_hex;
};

template <class Real>
struct TrainResult {
    Checkpoint<Real> checkpoint;
    std::vector<LossRecord> loss_log;
};

// --- config <-> key/value -----------------------------------------------

namespace detail {

template <class Real>
std::string real_to_string(Real v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", double(v));
    return buf;
}

}  // namespace detail

template <class Real>
std::vector<std::pair<std::string, std::string>> train_config_to_kv(const TrainConfig<Real>& cfg) {
    using detail::real_to_string;
    return {
        {"train.iterations", std::to_string(cfg.iterations)},
        {"train.batch_size", std::to_string(cfg.batch_size)},
        {"train.learning_rate", real_to_string(cfg.learning_rate)},
        {"train.lambda_weighting", to_string(cfg.lambda_weighting)},
        {"train.uncond_drop_prob", real_to_string(cfg.uncond_drop_prob)},
        {"train.seed", std::to_string(cfg.seed)},
        {"net.d", std::to_string(cfg.net.d)},
        {"net.d_z", std::to_string(cfg.net.d_z)},
        {"net.hidden_width", std::to_string(cfg.net.hidden_width)},
        {"net.n_blocks", std::to_string(cfg.net.n_blocks)},
        {"net.time_embed_dim", std::to_string(cfg.net.time_embed_dim)},
        {"net.group_size", std::to_string(cfg.net.group_size)},
        {"net.K", std::to_string(cfg.net.K)},
        {"schedule.beta_min", real_to_string(cfg.schedule.beta_min)},
        {"schedule.beta_max", real_to_string(cfg.schedule.beta_max)},
        {"schedule.t_end", real_to_string(cfg.schedule.t_end)},
        {"schedule.t_eps", real_to_string(cfg.schedule.t_eps)},
    };
}

// Applies known keys from kv; complains about unknown keys carrying one of the
// config prefixes when strict.
template <class Real>
TrainConfig<Real> train_config_from_kv(const std::vector<std::pair<std::string, std::string>>& kv,
                                       bool strict = true) {
    TrainConfig<Real> cfg;
    auto parse_int = [](const std::string& k, const std::string& v) -> int64_t {
        try {
            size_t used = 0;
            int64_t r = std::stoll(v, &used);
            if (used != v.size()) throw std::invalid_argument("");
            return r;
        } catch (const std::exception&) {
            throw ConfigError("config: bad integer for " + k + ": '" + v + "'");
        }
    };
    auto parse_real = [](const std::string& k, const std::string& v) -> Real {
        try {
            size_t used = 0;
            double r = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument("");
            return Real(r);
        } catch (const std::exception&) {
            throw ConfigError("config: bad number for " + k + ": '" + v + "'");
        }
    };
    for (const auto& [k, v] : kv) {
        if (k == "train.iterations") cfg.iterations = parse_int(k, v);
        else if (k == "train.batch_size") cfg.batch_size = int(parse_int(k, v));
        else if (k == "train.learning_rate") cfg.learning_rate = parse_real(k, v);
        else if (k == "train.lambda_weighting") cfg.lambda_weighting = lambda_weighting_from_string(v);
        else if (k == "train.uncond_drop_prob") cfg.uncond_drop_prob = parse_real(k, v);
        else if (k == "train.seed") cfg.seed = uint64_t(parse_int(k, v));
        else if (k == "net.d") cfg.net.d = int(parse_int(k, v));
        else if (k == "net.d_z") cfg.net.d_z = int(parse_int(k, v));
        else if (k == "net.hidden_width") cfg.net.hidden_width = int(parse_int(k, v));
        else if (k == "net.n_blocks") cfg.net.n_blocks = int(parse_int(k, v));
        else if (k == "net.time_embed_dim") cfg.net.time_embed_dim = int(parse_int(k, v));
        else if (k == "net.group_size") cfg.net.group_size = int(parse_int(k, v));
        else if (k == "net.K") cfg.net.K = int(parse_int(k, v));
        else if (k == "schedule.beta_min") cfg.schedule.beta_min = parse_real(k, v);
        else if (k == "schedule.beta_max") cfg.schedule.beta_max = parse_real(k, v);
        else if (k == "schedule.t_end") cfg.schedule.t_end = parse_real(k, v);
        else if (k == "schedule.t_eps") cfg.schedule.t_eps = parse_real(k, v);
        else if (strict && (k.rfind("train.", 0) == 0 || k.rfind("net.", 0) == 0 || k.rfind("schedule.", 0) == 0))
            throw ConfigError("config: unknown key '" + k + "'");
    }
    cfg.validate();
    return cfg;
}

// --- checkpoint persistence ----------------------------------------------

template <class Real>
void save_checkpoint(const Checkpoint<Real>& ckpt, const std::filesystem::path& path) {
    Container c;
    c.meta.emplace_back("kind", "checkpoint");
    c.meta.emplace_back("checkpoint.version", std::to_string(ckpt.version));
    c.meta.emplace_back("checkpoint.iteration", std::to_string(ckpt.iteration));
    c.meta.emplace_back("checkpoint.rng_state", ckpt.rng_state_hex);
    for (auto& [k, v] : train_config_to_kv(ckpt.config)) c.meta.emplace_back(k, v);
    for (const auto& e : ckpt.params.entries()) {
        TensorEntry t;
        t.name = e.name;
        t.shape = e.shape;
        t.data.assign(e.values.begin(), e.values.end());
        c.tensors.push_back(std::move(t));
    }
    write_container(path, c);
}

template <class Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path& path) {
    Container c = read_container(path);
    if (c.meta_or_throw("kind") != "checkpoint")
        throw DataError("checkpoint: '" + path.string() + "' is not a checkpoint container");
    Checkpoint<Real> ckpt;
    ckpt.version = std::stoi(c.meta_or_throw("checkpoint.version"));
    if (ckpt.version != 1)
        throw DataError("checkpoint: unsupported checkpoint version " + std::to_string(ckpt.version));
    ckpt.iteration = std::stoll(c.meta_or_throw("checkpoint.iteration"));
    ckpt.rng_state_hex = c.meta_or_throw("checkpoint.rng_state");
    ckpt.config = train_config_from_kv<Real>(c.meta, /*strict=*/false);
    for (const auto& t : c.tensors) {
        auto dst = ckpt.params.add(t.name, t.shape);
        for (size_t i = 0; i < dst.size(); ++i) dst[i] = Real(t.data[i]);
    }
    // verify layout against the stored config
    Rng probe(0);
    ParamStore<Real> expected = init_params<Real>(ckpt.config.net, probe);
    if (!expected.same_shapes(ckpt.params))
        throw DataError("checkpoint: parameter shapes do not match net config in '" + path.string() + "'");
    return ckpt;
}

// --- full training loop ----------------------------------------------------

template <class Real>
TrainResult<Real> train(const Dataset& ds, const TrainConfig<Real>& cfg,
                        std::optional<std::filesystem::path> abort_checkpoint_path = std::nullopt) {
    cfg.validate();
    ds.validate();
    if (ds.d != cfg.net.d)
        throw ConfigError("train: dataset dimension " + std::to_string(ds.d) +
                          " does not match net.d=" + std::to_string(cfg.net.d));
    Rng rng(cfg.seed);
    ScoreNet<Real> net = ScoreNet<Real>::init(cfg.net, rng);
    AdamState<Real> adam = AdamState<Real>::like(net.params());
    TrainResult<Real> result;
    const auto t0 = std::chrono::steady_clock::now();
    auto wallclock = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    const int64_t record_every = 50;
    ParamStore<Real> last_good = net.params();
    int64_t last_good_iter = 0;
    std::vector<std::vector<Real>> batch(size_t(cfg.batch_size));
    for (int64_t it = 0; it < cfg.iterations; ++it) {
        if (it % 100 == 0) {
            // snapshot the state entering this iteration; it has survived every
            // completed step so far
            last_good = net.params();
            last_good_iter = it;
        }
        for (auto& b : batch) {
            const auto row = ds.row(int64_t(rng.uniform_index(uint64_t(ds.n))));
            b.resize(row.size());
            for (size_t j = 0; j < b.size(); ++j) b[j] = Real(row[j]);
        }
        double loss;
        try {
            loss = double(train_step(net, adam, std::span<const std::vector<Real>>(batch), cfg, rng));
        } catch (const NumericError& e) {
            if (abort_checkpoint_path) {
                Checkpoint<Real> ck{1, cfg, last_good, last_good_iter, rng.state_hex()};
                save_checkpoint(ck, *abort_checkpoint_path);
            }
            throw NumericError(std::string(e.what()) + " (iteration " + std::to_string(it) +
                               "; last good checkpoint at iteration " + std::to_string(last_good_iter) + ")");
        }
        if (it % record_every == 0 || it + 1 == cfg.iterations)
            result.loss_log.push_back({it, loss, wallclock()});
    }
    result.checkpoint = Checkpoint<Real>{1, cfg, net.params(), cfg.iterations, rng.state_hex()};
    return result;
}

inline void save_loss_log(const std::filesystem::path& path, const std::vector<LossRecord>& log) {
    std::string out = "iteration,loss,wallclock_s\n";
    char buf[96];
    for (const auto& r : log) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.3f\n", (long long)r.iteration, r.loss, r.wallclock_s);
        out += buf;
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("loss log: cannot open '" + tmp.string() + "' for writing");
        f.write(out.data(), std::streamsize(out.size()));
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace scomp
