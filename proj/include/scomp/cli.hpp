#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "scomp/compose.hpp"
#include "scomp/dataset.hpp"
#include "scomp/errors.hpp"
#include "scomp/gmm.hpp"
#include "scomp/kv.hpp"
#include "scomp/likelihood.hpp"
#include "scomp/net.hpp"
#include "scomp/rng.hpp"
#include "scomp/sde.hpp"
#include "scomp/selfcheck.hpp"
#include "scomp/trainer.hpp"

// Command-line surface. Commands parse fully before any work starts, write
// outputs atomically, and drop a manifest next to every sample artifact with
// enough detail (hashes, seed, recipe weights) to regenerate it bit-exactly
// via `replay`.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric error,
// 5 oracle-suite failure.

namespace scomp::cli {

// shipped precision: parameters are stored and computed as 32-bit floats
using Real = float;

namespace fs = std::filesystem;

inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b = 0) {
    uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (a + 1)) ^ (0xc2b2ae3d27d4eb4fULL * (b + 1));
    return detail::splitmix64(s);
}

inline std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_samples_csv(const fs::path& path, const std::vector<std::vector<Real>>& samples) {
    std::string out;
    char buf[64];
    for (const auto& s : samples) {
        for (size_t j = 0; j < s.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.9g", double(s[j]));
            if (j) out += ',';
            out += buf;
        }
        out += '\n';
    }
    atomic_write_text(path, out);
}

inline void write_histogram_csv(const fs::path& path, const std::vector<std::vector<Real>>& samples) {
    // fixed 32x32 grid over [-3,3]^2; row = y bin (descending), col = x bin
    constexpr int bins = 32;
    constexpr double lo = -3.0, hi = 3.0;
    std::vector<int> grid(bins * bins, 0);
    for (const auto& s : samples) {
        const int bx = int(std::floor((double(s[0]) - lo) / (hi - lo) * bins));
        const int by = int(std::floor((double(s[1]) - lo) / (hi - lo) * bins));
        if (bx < 0 || bx >= bins || by < 0 || by >= bins) continue;
        grid[(bins - 1 - by) * bins + bx] += 1;
    }
    std::string out;
    for (int r = 0; r < bins; ++r) {
        for (int c = 0; c < bins; ++c) {
            if (c) out += ',';
            out += std::to_string(grid[r * bins + c]);
        }
        out += '\n';
    }
    atomic_write_text(path, out);
}

// --- run context shared by the sampling commands ---------------------------

struct SampleOptions {
    std::string ckpt_path;
    std::string data_path;
    std::string data_format = "auto";
    std::string out_dir;
    int n_samples = 16;
    int n_steps = 500;
    uint64_t seed = 1;
    int datum = -1;  // -1 = all rows
    bool histogram = false;
};

inline DatasetFormat resolve_format(const std::string& fmt, const fs::path& path) {
    if (fmt != "auto") return parse_dataset_format(fmt);
    if (fs::is_directory(path)) return DatasetFormat::pgm_dir;
    if (path.extension() == ".csv") return DatasetFormat::csv;
    return DatasetFormat::tensor_bin;
}

struct RunContext {
    Checkpoint<Real> ckpt;
    ScoreNet<Real> net;
    Dataset data;
    SampleOptions opts;
    std::string resolved_format;
    std::string ckpt_hash;
    std::string data_hash;
    std::string invocation_hash;

    static RunContext open(const SampleOptions& opts, const std::string& invocation) {
        RunContext ctx{.ckpt = load_checkpoint<Real>(opts.ckpt_path),
                       .net = {},
                       .data = {},
                       .opts = opts,
                       .resolved_format = {},
                       .ckpt_hash = {},
                       .data_hash = {},
                       .invocation_hash = fnv1a64_hex(invocation)};
        ctx.net = ScoreNet<Real>(ctx.ckpt.config.net, ctx.ckpt.params);
        const DatasetFormat f = resolve_format(opts.data_format, opts.data_path);
        ctx.resolved_format = f == DatasetFormat::csv        ? "csv"
                              : f == DatasetFormat::tensor_bin ? "tensor-bin"
                                                               : "pgm-dir";
        ctx.data = load_dataset(opts.data_path, f);
        if (ctx.data.d != ctx.ckpt.config.net.d)
            throw DataError("data dimension " + std::to_string(ctx.data.d) +
                            " does not match checkpoint net.d=" + std::to_string(ctx.ckpt.config.net.d));
        if (opts.datum >= 0 && opts.datum >= ctx.data.n)
            throw ConfigError("--datum " + std::to_string(opts.datum) + " out of range (n=" +
                              std::to_string(ctx.data.n) + ")");
        if (opts.n_samples < 1 || opts.n_steps < 1)
            throw ConfigError("--n-samples and --n-steps must be >= 1");
        ctx.ckpt_hash = file_fnv_hex(opts.ckpt_path);
        ctx.data_hash = (f == DatasetFormat::pgm_dir) ? "dir" : file_fnv_hex(opts.data_path);
        if (!opts.out_dir.empty()) fs::create_directories(opts.out_dir);
        return ctx;
    }

    std::vector<int64_t> selected_rows() const {
        std::vector<int64_t> rows;
        if (opts.datum >= 0)
            rows.push_back(opts.datum);
        else
            for (int64_t i = 0; i < data.n; ++i) rows.push_back(i);
        return rows;
    }

    std::vector<Real> row_as_real(int64_t i) const {
        auto r = data.row(i);
        std::vector<Real> out(r.size());
        for (size_t j = 0; j < r.size(); ++j) out[j] = Real(r[j]);
        return out;
    }
};

struct PanelSpec {
    std::string protocol;
    CompositeScore<Real> recipe;
    std::vector<int> component_indices;    // 1-based, aligned with recipe.terms
    std::vector<int64_t> datum_indices;    // per term; empty = every term from datum_index
    std::optional<double> alpha;
    int64_t datum_index;
    uint64_t seed;
    std::string out_name;  // without extension
};

inline void emit_panel(const RunContext& ctx, const PanelSpec& spec) {
    auto score_fn = recipe_score_fn(ctx.net, spec.recipe);
    Rng rng(spec.seed);
    auto samples = reverse_sample<Real>(ctx.ckpt.config.schedule, score_fn, ctx.opts.n_steps,
                                        ctx.opts.n_samples, ctx.ckpt.config.net.d, rng);
    const bool image = ctx.data.kind == DatasetKind::image;
    const fs::path out = fs::path(ctx.opts.out_dir) / (spec.out_name + (image ? ".pgm" : ".csv"));
    if (image) {
        std::vector<std::vector<double>> imgs;
        imgs.reserve(samples.size());
        for (const auto& s : samples) imgs.emplace_back(s.begin(), s.end());
        write_pgm_grid(out, imgs, ctx.data.image_height, ctx.data.image_width);
    } else {
        write_samples_csv(out, samples);
    }
    if (ctx.opts.histogram && !image) {
        if (ctx.data.d != 2) throw ConfigError("--histogram requires 2-d point data");
        write_histogram_csv(fs::path(ctx.opts.out_dir) / (spec.out_name + ".hist.csv"), samples);
    }

    KvFile m;
    m.set("protocol", spec.protocol);
    m.set("checkpoint", ctx.opts.ckpt_path);
    m.set("checkpoint.fnv64", ctx.ckpt_hash);
    m.set("data", ctx.opts.data_path);
    m.set("data.format", ctx.resolved_format);
    m.set("data.fnv64", ctx.data_hash);
    m.set("datum.index", std::to_string(spec.datum_index));
    m.set("seed", std::to_string(spec.seed));
    m.set("sampler.n_steps", std::to_string(ctx.opts.n_steps));
    m.set("sampler.n_samples", std::to_string(ctx.opts.n_samples));
    std::string idx_str, w_str, d_str;
    for (size_t i = 0; i < spec.recipe.terms.size(); ++i) {
        if (i) {
            idx_str += ',';
            w_str += ',';
            d_str += ',';
        }
        idx_str += std::to_string(spec.component_indices[i]);
        w_str += format_real(double(spec.recipe.terms[i].weight));
        d_str += std::to_string(spec.datum_indices.empty() ? spec.datum_index : spec.datum_indices[i]);
    }
    m.set("recipe.component_indices", idx_str);
    m.set("recipe.component_weights", w_str);
    m.set("recipe.datum_indices", d_str);
    m.set("recipe.uncond_weight", format_real(double(spec.recipe.uncond_weight)));
    if (spec.alpha) m.set("recipe.alpha", format_real(*spec.alpha));
    m.set("histogram", ctx.opts.histogram && !image ? "1" : "0");
    m.set("output", out.filename().string());
    m.set("config.fnv64", ctx.invocation_hash);
    atomic_write_text(fs::path(ctx.opts.out_dir) / (spec.out_name + ".manifest.txt"), m.serialize());
}

inline std::string datum_tag(int64_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "d%03lld", (long long)i);
    return buf;
}

// --- commands ---------------------------------------------------------------

inline int cmd_train(const std::string& config_path, std::ostream& log) {
    KvFile kv = KvFile::parse_file(config_path);
    std::set<std::string> known = {"data.path", "data.format", "output.dir"};
    for (const auto& [k, v] : train_config_to_kv(TrainConfig<Real>{})) known.insert(k);
    for (const auto& [k, v] : kv.entries())
        if (!known.count(k)) throw ConfigError(config_path + ": unknown key '" + k + "'");
    const TrainConfig<Real> cfg = train_config_from_kv<Real>(kv.entries());
    const std::string data_path = kv.get("data.path");
    const DatasetFormat fmt = resolve_format(kv.get_or("data.format", "auto"), data_path);
    const Dataset data = load_dataset(data_path, fmt);
    const fs::path out_dir = kv.get("output.dir");
    fs::create_directories(out_dir);
    const fs::path ckpt_path = out_dir / "checkpoint.scmp";

    log << "training: " << cfg.iterations << " iterations, batch " << cfg.batch_size << ", K="
        << cfg.net.K << ", " << data.n << "x" << data.d << " data\n";
    TrainResult<Real> result = train<Real>(data, cfg, ckpt_path);
    save_checkpoint(result.checkpoint, ckpt_path);
    save_loss_log(out_dir / "loss.csv", result.loss_log);

    KvFile m;
    m.set("protocol", "train");
    m.set("config", config_path);
    std::ifstream cf(config_path, std::ios::binary);
    std::string cfg_text((std::istreambuf_iterator<char>(cf)), std::istreambuf_iterator<char>());
    m.set("config.fnv64", fnv1a64_hex(cfg_text));
    m.set("data", data_path);
    if (fmt != DatasetFormat::pgm_dir) m.set("data.fnv64", file_fnv_hex(data_path));
    m.set("seed", std::to_string(cfg.seed));
    m.set("checkpoint", ckpt_path.string());
    m.set("checkpoint.fnv64", file_fnv_hex(ckpt_path));
    m.set("iterations", std::to_string(result.checkpoint.iteration));
    atomic_write_text(out_dir / "train.manifest.txt", m.serialize());
    if (!result.loss_log.empty())
        log << "final loss " << result.loss_log.back().loss << "\n";
    log << "checkpoint: " << ckpt_path.string() << "\n";
    return 0;
}

inline int cmd_reconstruct(const SampleOptions& opts, const std::string& invocation, std::ostream& log) {
    RunContext ctx = RunContext::open(opts, invocation);
    for (int64_t i : ctx.selected_rows()) {
        const LatentBundle<Real> bundle = ctx.net.encode(std::span<const Real>(ctx.row_as_real(i)));
        PanelSpec spec;
        spec.protocol = "reconstruct";
        spec.recipe = decomposition_recipe(bundle);
        for (int k = 1; k <= bundle.K(); ++k) spec.component_indices.push_back(k);
        spec.datum_index = i;
        spec.seed = derive_seed(opts.seed, uint64_t(i), 0);
        spec.out_name = "recon_" + datum_tag(i);
        emit_panel(ctx, spec);
        log << "wrote " << spec.out_name << " (" << opts.n_samples << " variants)\n";
    }
    return 0;
}

inline int cmd_components(const SampleOptions& opts, bool weight_one, const std::string& invocation,
                          std::ostream& log) {
    RunContext ctx = RunContext::open(opts, invocation);
    const int K = ctx.ckpt.config.net.K;
    for (int64_t i : ctx.selected_rows()) {
        const LatentBundle<Real> bundle = ctx.net.encode(std::span<const Real>(ctx.row_as_real(i)));
        for (int k = 1; k <= K; ++k) {
            PanelSpec spec;
            spec.protocol = "components";
            spec.recipe = single_component(bundle, k, weight_one);
            spec.component_indices = {k};
            spec.datum_index = i;
            spec.seed = derive_seed(opts.seed, uint64_t(i), uint64_t(k));
            spec.out_name = "comp_" + datum_tag(i) + "_k" + std::to_string(k);
            emit_panel(ctx, spec);
        }
        log << "wrote " << K << " component panels for datum " << i << "\n";
    }
    return 0;
}

inline std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        try {
            size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ConfigError(what + ": cannot parse '" + tok + "'");
        }
    }
    if (out.empty()) throw ConfigError(what + ": empty list");
    return out;
}

inline int cmd_manipulate(const SampleOptions& opts, const std::string& mode, int k,
                          const std::string& ks, const std::string& alphas_str,
                          const std::string& invocation, std::ostream& log) {
    const std::vector<double> alphas = parse_double_list(alphas_str, "--alphas");
    for (double a : alphas)
        if (!(a >= 0.0) || !(a <= 1.0)) throw std::domain_error("--alphas: alpha must be in [0, 1]");
    int k1 = 0, k2 = 0;
    const bool pair = mode == "pair";
    if (!pair && mode != "single") throw ConfigError("--mode must be single or pair");
    if (pair) {
        const auto pair_ks = parse_double_list(ks, "--ks");
        if (pair_ks.size() != 2) throw ConfigError("--ks: expected two component indices");
        k1 = int(pair_ks[0]);
        k2 = int(pair_ks[1]);
    }
    RunContext ctx = RunContext::open(opts, invocation);
    for (int64_t i : ctx.selected_rows()) {
        const LatentBundle<Real> bundle = ctx.net.encode(std::span<const Real>(ctx.row_as_real(i)));
        for (size_t ai = 0; ai < alphas.size(); ++ai) {
            const Real alpha = Real(alphas[ai]);
            PanelSpec spec;
            spec.protocol = pair ? "dilute-pair" : "dilute-single";
            spec.recipe = pair ? dilute_pair(bundle, k1, k2, alpha) : dilute_single(bundle, k, alpha);
            for (int kk = 1; kk <= bundle.K(); ++kk) spec.component_indices.push_back(kk);
            spec.alpha = alphas[ai];
            spec.datum_index = i;
            spec.seed = derive_seed(opts.seed, uint64_t(i), 1000 + ai);
            char abuf[16];
            std::snprintf(abuf, sizeof(abuf), "a%.2f", alphas[ai]);
            spec.out_name = "manip_" + datum_tag(i) + "_" +
                            (pair ? "k" + std::to_string(k1) + "-" + std::to_string(k2)
                                  : "k" + std::to_string(k)) +
                            "_" + abuf;
            emit_panel(ctx, spec);
        }
        log << "wrote " << alphas.size() << " dilution panels for datum " << i << "\n";
    }
    return 0;
}

inline int cmd_tune(const SampleOptions& opts, const std::string& grid_str,
                    const std::string& invocation, std::ostream& log) {
    std::vector<std::vector<double>> grid;
    std::istringstream is(grid_str);
    std::string row;
    while (std::getline(is, row, ';'))
        if (!row.empty()) grid.push_back(parse_double_list(row, "--weights"));
    if (grid.empty()) throw ConfigError("--weights: empty grid");
    RunContext ctx = RunContext::open(opts, invocation);
    const int K = ctx.ckpt.config.net.K;
    for (const auto& g : grid)
        if (int(g.size()) != K)
            throw ConfigError("--weights: row length " + std::to_string(g.size()) + " != K=" +
                              std::to_string(K));
    for (int64_t i : ctx.selected_rows()) {
        const LatentBundle<Real> bundle = ctx.net.encode(std::span<const Real>(ctx.row_as_real(i)));
        for (size_t gi = 0; gi < grid.size(); ++gi) {
            std::vector<Real> w(grid[gi].begin(), grid[gi].end());
            PanelSpec spec;
            spec.protocol = "tune";
            spec.recipe = tune_weights(bundle, std::span<const Real>(w));
            for (int kk = 1; kk <= K; ++kk) spec.component_indices.push_back(kk);
            spec.datum_index = i;
            spec.seed = derive_seed(opts.seed, uint64_t(i), 2000 + gi);
            spec.out_name = "tune_" + datum_tag(i) + "_g" + std::to_string(gi);
            emit_panel(ctx, spec);
        }
        log << "wrote " << grid.size() << " weight panels for datum " << i << "\n";
    }
    return 0;
}

// Cross-image mixing: component k's latent comes from its own datum. Takes
// exactly K datum indices.
inline int cmd_mix(const SampleOptions& opts, const std::string& datums_str,
                   const std::string& invocation, std::ostream& log) {
    RunContext ctx = RunContext::open(opts, invocation);
    const int K = ctx.ckpt.config.net.K;
    const auto datums_d = parse_double_list(datums_str, "--datums");
    if (int(datums_d.size()) != K)
        throw ConfigError("--datums: expected " + std::to_string(K) + " datum indices");
    std::vector<int64_t> datums;
    for (double d : datums_d) {
        const auto idx = int64_t(d);
        if (idx < 0 || idx >= ctx.data.n) throw ConfigError("--datums: index out of range");
        datums.push_back(idx);
    }
    PanelSpec spec;
    spec.protocol = "mix";
    spec.datum_index = datums[0];
    std::string tag;
    for (int k = 1; k <= K; ++k) {
        const LatentBundle<Real> bundle =
            ctx.net.encode(std::span<const Real>(ctx.row_as_real(datums[size_t(k - 1)])));
        spec.recipe.terms.push_back({Real(1) / Real(K), bundle.latents[size_t(k - 1)]});
        spec.component_indices.push_back(k);
        spec.datum_indices.push_back(datums[size_t(k - 1)]);
        tag += (k > 1 ? "-" : "") + std::to_string(datums[size_t(k - 1)]);
    }
    spec.seed = derive_seed(opts.seed, uint64_t(datums[0]), 4000);
    spec.out_name = "mix_d" + tag;
    emit_panel(ctx, spec);
    log << "wrote cross-image mix panel for datums " << datums_str << "\n";
    return 0;
}

inline int cmd_elbo(const SampleOptions& opts, int64_t n_mc, int n_time, const std::string& method_str,
                    const std::string& out_file, const std::string& invocation, std::ostream& log) {
    const DivergenceMethod method = divergence_method_from_string(method_str);
    RunContext ctx = RunContext::open(opts, invocation);
    KvFile report;
    report.set("n_mc", std::to_string(n_mc));
    report.set("n_time", std::to_string(n_time));
    report.set("method", method_str);
    double mean = 0.0;
    const auto rows = ctx.selected_rows();
    for (int64_t i : rows) {
        const std::vector<Real> x0 = ctx.row_as_real(i);
        const LatentBundle<Real> bundle = ctx.net.encode(std::span<const Real>(x0));
        Rng rng(derive_seed(opts.seed, uint64_t(i), 3000));
        const auto est = elbo<Real>(ctx.ckpt, x0, decomposition_recipe(bundle), n_mc, n_time, rng, method);
        report.set("datum." + std::to_string(i) + ".value", format_real(double(est.value)));
        report.set("datum." + std::to_string(i) + ".std_error", format_real(double(est.std_error)));
        mean += double(est.value);
        log << "datum " << i << ": elbo " << double(est.value) << " +- " << double(est.std_error) << "\n";
    }
    mean /= double(rows.size());
    report.set("dataset.mean", format_real(mean));
    log << "dataset mean: " << mean << "\n";
    if (!out_file.empty()) atomic_write_text(out_file, report.serialize());
    return 0;
}

inline int cmd_oracle_check(std::ostream& os) {
    const OracleReport report = run_oracle_suite();
    print_oracle_report(report, os);
    return report.all_pass() ? 0 : 5;
}

inline int cmd_replay(const std::string& manifest_path, const std::string& out_path, std::ostream& log) {
    const KvFile m = KvFile::parse_file(manifest_path);
    const fs::path mdir = fs::path(manifest_path).parent_path();
    auto resolve = [&](const std::string& p) -> fs::path {
        if (fs::exists(p)) return p;
        const fs::path alt = mdir / p;
        if (fs::exists(alt)) return alt;
        throw DataError("replay: cannot find '" + p + "'");
    };
    const fs::path ckpt_path = resolve(m.get("checkpoint"));
    if (file_fnv_hex(ckpt_path) != m.get("checkpoint.fnv64"))
        throw DataError("replay: checkpoint hash mismatch for '" + ckpt_path.string() + "'");
    const Checkpoint<Real> ckpt = load_checkpoint<Real>(ckpt_path);
    const ScoreNet<Real> net(ckpt.config.net, ckpt.params);
    const fs::path data_path = resolve(m.get("data"));
    const Dataset data = load_dataset(data_path, parse_dataset_format(m.get("data.format")));
    if (m.get("data.fnv64") != "dir" && file_fnv_hex(data_path) != m.get("data.fnv64"))
        throw DataError("replay: data hash mismatch for '" + data_path.string() + "'");
    const int64_t idx = std::stoll(m.get("datum.index"));
    if (idx < 0 || idx >= data.n) throw DataError("replay: datum index out of range");

    CompositeScore<Real> recipe;
    const auto indices = parse_double_list(m.get("recipe.component_indices"), "component_indices");
    const auto weights = parse_double_list(m.get("recipe.component_weights"), "component_weights");
    std::vector<double> datums(indices.size(), double(idx));
    if (const std::string* ds_str = m.find("recipe.datum_indices"))
        datums = parse_double_list(*ds_str, "datum_indices");
    if (indices.size() != weights.size() || indices.size() != datums.size())
        throw DataError("replay: recipe index/weight/datum length mismatch");
    auto encode_row = [&](int64_t row) {
        std::vector<Real> x(size_t(data.d));
        for (int64_t j = 0; j < data.d; ++j) x[size_t(j)] = Real(data.row(row)[size_t(j)]);
        return net.encode(std::span<const Real>(x));
    };
    std::map<int64_t, LatentBundle<Real>> bundles;
    for (size_t i = 0; i < indices.size(); ++i) {
        const int k = int(indices[i]);
        const int64_t row = int64_t(datums[i]);
        if (row < 0 || row >= data.n) throw DataError("replay: datum index out of range");
        auto it = bundles.find(row);
        if (it == bundles.end()) it = bundles.emplace(row, encode_row(row)).first;
        if (k < 1 || k > it->second.K()) throw DataError("replay: component index out of range");
        recipe.terms.push_back({Real(weights[i]), it->second.latents[size_t(k - 1)]});
    }
    recipe.uncond_weight = Real(std::stod(m.get("recipe.uncond_weight")));

    auto score_fn = recipe_score_fn(net, recipe);
    Rng rng(uint64_t(std::stoull(m.get("seed"))));
    const int n_steps = std::stoi(m.get("sampler.n_steps"));
    const int n_samples = std::stoi(m.get("sampler.n_samples"));
    auto samples = reverse_sample<Real>(ckpt.config.schedule, score_fn, n_steps, n_samples,
                                        ckpt.config.net.d, rng);
    fs::path out = out_path.empty() ? mdir / ("replay_" + m.get("output")) : fs::path(out_path);
    if (out.extension() == ".pgm") {
        std::vector<std::vector<double>> imgs;
        for (const auto& s : samples) imgs.emplace_back(s.begin(), s.end());
        write_pgm_grid(out, imgs, data.image_height, data.image_width);
    } else {
        write_samples_csv(out, samples);
    }
    if (m.get_or("histogram", "0") == "1")
        write_histogram_csv(out.string() + ".hist.csv", samples);
    log << "replayed " << m.get("output") << " -> " << out.string() << "\n";
    return 0;
}

}  // namespace scomp::cli
