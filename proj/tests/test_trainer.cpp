#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "scomp/gmm.hpp"
#include "scomp/trainer.hpp"

using namespace scomp;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
    const fs::path p = fs::temp_directory_path() / "scomp_test_trainer";
    fs::create_directories(p);
    return p;
}

template <class Real>
TrainConfig<Real> small_train_cfg() {
    TrainConfig<Real> cfg;
    cfg.net.d = 2;
    cfg.net.d_z = 4;
    cfg.net.hidden_width = 16;
    cfg.net.n_blocks = 2;
    cfg.net.time_embed_dim = 8;
    cfg.net.group_size = 4;
    cfg.net.K = 3;
    cfg.batch_size = 8;
    cfg.iterations = 50;
    cfg.seed = 7;
    return cfg;
}

Dataset gaussian_dataset(int n, uint64_t seed) {
    auto target = GaussianMixtureTarget<double>::standard_normal(2);
    Rng rng(seed);
    auto pts = sample_target(target, n, rng);
    Dataset ds;
    ds.n = n;
    ds.d = 2;
    for (const auto& p : pts) ds.points.insert(ds.points.end(), p.begin(), p.end());
    return ds;
}

}  // namespace

TEST_CASE("lambda weighting") {
    DiffusionSchedule<double> sched;
    CHECK(lambda_value(LambdaWeighting::sigma2, sched, 0.5) ==
          doctest::Approx(1.0 - alpha_bar(sched, 0.5)).epsilon(1e-15));
    CHECK(lambda_value(LambdaWeighting::one, sched, 0.5) == 1.0);
}

TEST_CASE("dsm loss equals the epsilon-prediction form per sample") {
    using Real = double;
    auto cfg = small_train_cfg<Real>();
    Rng rng(3);
    auto net = ScoreNet<Real>::init(cfg.net, rng);
    const std::vector<Real> x0 = {0.6, -0.9};
    auto bundle = net.encode(std::span<const Real>(x0));
    for (int i = 0; i < 10; ++i) {
        const Real t = Real(rng.uniform(double(cfg.schedule.t_eps), 1.0));
        Rng r1(100 + i), r2(100 + i);
        const Real loss = dsm_loss(net, std::span<const Real>(x0), bundle, t,
                                   LambdaWeighting::sigma2, cfg.schedule, r1);
        // replicate the draw and check lambda ||c - target||^2 == ||sqrt(lambda) c + eps||^2
        auto ps = perturb<Real>(cfg.schedule, std::span<const Real>(x0), t, r2);
        auto comp = evaluate(decomposition_recipe(bundle), net, std::span<const Real>(ps.x_t), t);
        const double lam = 1.0 - alpha_bar(cfg.schedule, t);
        double eps_form = 0.0;
        for (int k = 0; k < 2; ++k) {
            const double v = std::sqrt(lam) * comp[k] + ps.noise[k];
            eps_form += v * v;
        }
        CHECK(double(loss) == doctest::Approx(eps_form).epsilon(1e-9));
    }
}

TEST_CASE("dsm loss with zero composite averages to the data dimension") {
    using Real = double;
    auto cfg = small_train_cfg<Real>();
    Rng rng(5);
    auto net = ScoreNet<Real>::init(cfg.net, rng);
    // zero head -> composite identically zero -> loss = lambda ||target||^2 = ||eps||^2
    for (auto& v : net.params().values("net.head.W")) v = 0;
    for (auto& v : net.params().values("net.head.b")) v = 0;
    const std::vector<Real> x0 = {0.5, 1.0};
    auto bundle = net.encode(std::span<const Real>(x0));
    const int n = 30000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const Real t = Real(rng.uniform(double(cfg.schedule.t_eps), 1.0));
        acc += double(dsm_loss(net, std::span<const Real>(x0), bundle, t, LambdaWeighting::sigma2,
                               cfg.schedule, rng));
    }
    acc /= n;
    CHECK(acc == doctest::Approx(2.0).epsilon(0.025));
}

TEST_CASE("dsm loss is invariant to permuting identical latents") {
    using Real = double;
    auto cfg = small_train_cfg<Real>();
    Rng rng(6);
    auto net = ScoreNet<Real>::init(cfg.net, rng);
    const std::vector<Real> x0 = {0.2, 0.4};
    auto bundle = net.encode(std::span<const Real>(x0));
    LatentBundle<Real> perm;
    perm.latents = {bundle.latents[1], bundle.latents[2], bundle.latents[0]};
    LatentBundle<Real> same;
    same.latents = {bundle.latents[0], bundle.latents[0], bundle.latents[0]};
    LatentBundle<Real> same_perm = same;
    Rng ra(9), rb(9);
    const Real la = dsm_loss(net, std::span<const Real>(x0), same, Real(0.5),
                             LambdaWeighting::sigma2, cfg.schedule, ra);
    const Real lb = dsm_loss(net, std::span<const Real>(x0), same_perm, Real(0.5),
                             LambdaWeighting::sigma2, cfg.schedule, rb);
    CHECK(la == lb);
    // permuting distinct latents changes nothing either (sum is order-insensitive to rounding)
    Rng rc(9), rd(9);
    const Real lc = dsm_loss(net, std::span<const Real>(x0), bundle, Real(0.5),
                             LambdaWeighting::sigma2, cfg.schedule, rc);
    const Real ld = dsm_loss(net, std::span<const Real>(x0), perm, Real(0.5),
                             LambdaWeighting::sigma2, cfg.schedule, rd);
    CHECK(double(lc) == doctest::Approx(double(ld)).epsilon(1e-12));
}

TEST_CASE("adam: zero gradient leaves parameters untouched but bumps the step") {
    using Real = double;
    ParamStore<Real> p;
    auto t = p.add("t", {3});
    t[0] = 1;
    t[1] = -2;
    t[2] = 0.5;
    auto g = ParamStore<Real>::like(p);
    auto adam = AdamState<Real>::like(p);
    adam_update(p, g, adam, Real(0.1));
    CHECK(adam.step == 1);
    CHECK(p.values("t")[0] == 1.0);
    CHECK(p.values("t")[1] == -2.0);
    CHECK(p.values("t")[2] == 0.5);
}

TEST_CASE("adam: first step moves by ~lr * sign(g)") {
    using Real = double;
    ParamStore<Real> p;
    auto t = p.add("t", {2});
    t[0] = 0.0;
    t[1] = 0.0;
    ParamStore<Real> g = ParamStore<Real>::like(p);
    g.values("t")[0] = 0.02;
    g.values("t")[1] = -7.5;
    auto adam = AdamState<Real>::like(p);
    adam_update(p, g, adam, Real(1e-3));
    CHECK(double(p.values("t")[0]) == doctest::Approx(-1e-3).epsilon(1e-5));
    CHECK(double(p.values("t")[1]) == doctest::Approx(1e-3).epsilon(1e-5));
}

TEST_CASE("train_step decreases loss and updates both encoder and score parameters") {
    using Real = double;
    auto cfg = small_train_cfg<Real>();
    cfg.uncond_drop_prob = 0.0;
    Rng rng(cfg.seed);
    auto net = ScoreNet<Real>::init(cfg.net, rng);
    auto adam = AdamState<Real>::like(net.params());
    Dataset ds = gaussian_dataset(64, 2);
    std::vector<std::vector<Real>> batch;
    for (int i = 0; i < 8; ++i) {
        auto r = ds.row(i);
        batch.emplace_back(r.begin(), r.end());
    }
    const ParamStore<Real> before = net.params();
    double first = 0, last = 0;
    for (int it = 0; it < 60; ++it) {
        const double l = double(train_step(net, adam, std::span<const std::vector<Real>>(batch), cfg, rng));
        if (it == 0) first = l;
        last = l;
    }
    CHECK(last < first);
    double enc_delta = 0, score_delta = 0;
    for (size_t e = 0; e < before.entries().size(); ++e) {
        const auto& name = before.entries()[e].name;
        for (size_t i = 0; i < before.entries()[e].values.size(); ++i) {
            const double d = std::abs(double(before.entries()[e].values[i] -
                                             net.params().entries()[e].values[i]));
            if (name.rfind("enc.", 0) == 0) enc_delta += d;
            else score_delta += d;
        }
    }
    CHECK(enc_delta > 0.0);
    CHECK(score_delta > 0.0);
}

TEST_CASE("train: zero iterations returns the initialized checkpoint") {
    using Real = float;
    auto cfg = small_train_cfg<Real>();
    cfg.iterations = 0;
    Dataset ds = gaussian_dataset(16, 3);
    auto result = train(ds, cfg);
    CHECK(result.checkpoint.iteration == 0);
    Rng rng(cfg.seed);
    auto expected = init_params<Real>(cfg.net, rng);
    CHECK(expected.same_shapes(result.checkpoint.params));
    for (size_t e = 0; e < expected.entries().size(); ++e)
        CHECK(expected.entries()[e].values == result.checkpoint.params.entries()[e].values);
}

TEST_CASE("train is deterministic and the loss trends down") {
    using Real = float;
    auto cfg = small_train_cfg<Real>();
    cfg.iterations = 400;
    Dataset ds = gaussian_dataset(64, 4);
    auto r1 = train(ds, cfg);
    auto r2 = train(ds, cfg);
    for (size_t e = 0; e < r1.checkpoint.params.entries().size(); ++e)
        CHECK(r1.checkpoint.params.entries()[e].values == r2.checkpoint.params.entries()[e].values);
    REQUIRE(r1.loss_log.size() >= 4);
    const double head = r1.loss_log[0].loss + r1.loss_log[1].loss;
    const double tail = r1.loss_log[r1.loss_log.size() - 1].loss + r1.loss_log[r1.loss_log.size() - 2].loss;
    CHECK(tail < head);
}

TEST_CASE("checkpoint roundtrip is bit-identical for float params") {
    using Real = float;
    auto cfg = small_train_cfg<Real>();
    cfg.iterations = 20;
    Dataset ds = gaussian_dataset(16, 5);
    auto result = train(ds, cfg);
    const fs::path p = tmp_dir() / "ck.scmp";
    save_checkpoint(result.checkpoint, p);
    auto back = load_checkpoint<Real>(p);
    CHECK(back.version == result.checkpoint.version);
    CHECK(back.iteration == result.checkpoint.iteration);
    CHECK(back.rng_state_hex == result.checkpoint.rng_state_hex);
    CHECK(back.config.seed == cfg.seed);
    CHECK(back.config.net.K == cfg.net.K);
    REQUIRE(back.params.same_shapes(result.checkpoint.params));
    for (size_t e = 0; e < back.params.entries().size(); ++e)
        CHECK(back.params.entries()[e].values == result.checkpoint.params.entries()[e].values);
    // and a re-save produces identical bytes
    const fs::path p2 = tmp_dir() / "ck2.scmp";
    save_checkpoint(back, p2);
    std::ifstream f1(p, std::ios::binary), f2(p2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
}

TEST_CASE("checkpoint integrity failures") {
    using Real = float;
    auto cfg = small_train_cfg<Real>();
    cfg.iterations = 0;
    Dataset ds = gaussian_dataset(8, 6);
    auto result = train(ds, cfg);
    const fs::path p = tmp_dir() / "ck_corrupt.scmp";
    save_checkpoint(result.checkpoint, p);
    std::string blob;
    {
        std::ifstream f(p, std::ios::binary);
        blob.assign((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    }
    {
        std::ofstream f(tmp_dir() / "trunc.scmp", std::ios::binary);
        f.write(blob.data(), std::streamsize(blob.size() - 8));
    }
    CHECK_THROWS_AS(load_checkpoint<Real>(tmp_dir() / "trunc.scmp"), DataError);

    // a checkpoint whose tensors disagree with its net config is rejected
    Container c = read_container(p);
    c.tensors.pop_back();
    write_container(tmp_dir() / "dropped.scmp", c);
    CHECK_THROWS_AS(load_checkpoint<Real>(tmp_dir() / "dropped.scmp"), DataError);
}

TEST_CASE("numeric blowup persists the last good checkpoint and rethrows") {
    using Real = float;
    auto cfg = small_train_cfg<Real>();
    cfg.iterations = 10;
    // an absurd learning rate sends the parameters to +-1e18 after one Adam
    // step; the next squared-loss evaluation overflows float to inf
    cfg.learning_rate = Real(1e18);
    Dataset ds = gaussian_dataset(8, 9);
    const fs::path abort_path = tmp_dir() / "aborted.scmp";
    fs::remove(abort_path);
    CHECK_THROWS_AS(train(ds, cfg, abort_path), NumericError);
    REQUIRE(fs::exists(abort_path));
    auto saved = load_checkpoint<Real>(abort_path);
    CHECK(saved.iteration == 0);  // the iteration-0 snapshot is the last good state
}

TEST_CASE("a single-point dataset trains a sampler that concentrates near the point") {
    using Real = double;
    auto cfg = small_train_cfg<Real>();
    cfg.iterations = 2000;
    cfg.batch_size = 16;
    cfg.learning_rate = 2e-3;
    cfg.uncond_drop_prob = 0.0;
    Dataset ds;
    ds.n = 1;
    ds.d = 2;
    ds.points = {1.5, -0.5};
    auto result = train(ds, cfg);
    ScoreNet<Real> net(cfg.net, result.checkpoint.params);
    const std::vector<Real> x0 = {1.5, -0.5};
    auto bundle = net.encode(std::span<const Real>(x0));
    Rng rng(41);
    auto fn = recipe_score_fn(net, decomposition_recipe(bundle));
    auto samples = reverse_sample<Real>(cfg.schedule, fn, 300, 64, 2, rng);
    double mean_dist = 0.0;
    for (const auto& s : samples) mean_dist += std::hypot(s[0] - x0[0], s[1] - x0[1]);
    mean_dist /= double(samples.size());
    // an untrained/prior sampler would sit at E||z - x0|| ~ 2; trained should be well inside
    CHECK(mean_dist < 1.0);

    // conditioning is alive: distinct latents move the score on the training point
    auto z_other = bundle.latents[0];
    for (auto& v : z_other) v += 0.7;
    auto s_a = net.score(x0, 0.5, bundle.latents[0]);
    auto s_b = net.score(x0, 0.5, z_other);
    double diff = 0.0;
    for (int k = 0; k < 2; ++k) diff += std::abs(s_a[k] - s_b[k]);
    CHECK(diff > 0.0);

    // encoder separates distinct inputs after training
    const std::vector<Real> other = {-1.0, 1.0};
    auto b2 = net.encode(std::span<const Real>(other));
    double enc_dist = 0.0;
    for (int k = 0; k < cfg.net.K; ++k)
        for (size_t j = 0; j < b2.latents[size_t(k)].size(); ++j)
            enc_dist += std::abs(bundle.latents[size_t(k)][j] - b2.latents[size_t(k)][j]);
    CHECK(enc_dist > 0.0);
}

TEST_CASE("train config kv roundtrip") {
    using Real = float;
    auto cfg = small_train_cfg<Real>();
    cfg.learning_rate = Real(0.00125);
    cfg.lambda_weighting = LambdaWeighting::one;
    cfg.uncond_drop_prob = Real(0.25);
    auto kv = train_config_to_kv(cfg);
    auto back = train_config_from_kv<Real>(kv);
    CHECK(back.iterations == cfg.iterations);
    CHECK(back.batch_size == cfg.batch_size);
    CHECK(back.learning_rate == cfg.learning_rate);
    CHECK(back.lambda_weighting == cfg.lambda_weighting);
    CHECK(back.uncond_drop_prob == cfg.uncond_drop_prob);
    CHECK(back.seed == cfg.seed);
    CHECK(back.net.hidden_width == cfg.net.hidden_width);
    CHECK(double(back.schedule.beta_max) == double(cfg.schedule.beta_max));
    std::vector<std::pair<std::string, std::string>> bad = {{"net.bogus", "1"}};
    CHECK_THROWS_AS(train_config_from_kv<Real>(bad), ConfigError);
}
