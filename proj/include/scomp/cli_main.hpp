#pragma once

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scomp/cli.hpp"

namespace scomp::cli {

// Parses and dispatches one invocation. `args` excludes the program name.
// Returns the process exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"compositional score-model trainer and sampler"};
    app.require_subcommand(1);

    std::string config_path;
    auto* train_cmd = app.add_subcommand("train", "train a model from a key=value config file");
    train_cmd->add_option("--config", config_path, "config file")->required();

    SampleOptions opts;
    auto add_common = [&](CLI::App* cmd, bool needs_out = true) {
        cmd->add_option("--ckpt", opts.ckpt_path, "checkpoint file")->required();
        cmd->add_option("--data", opts.data_path, "input data")->required();
        cmd->add_option("--format", opts.data_format, "data format (csv|tensor-bin|pgm-dir|auto)");
        if (needs_out) cmd->add_option("--out", opts.out_dir, "output directory")->required();
        cmd->add_option("--n-samples", opts.n_samples, "samples per panel");
        cmd->add_option("--n-steps", opts.n_steps, "reverse-SDE steps");
        cmd->add_option("--seed", opts.seed, "master seed");
        cmd->add_option("--datum", opts.datum, "restrict to one data row");
        cmd->add_flag("--histogram", opts.histogram, "also dump a 2-d density histogram per panel");
    };

    auto* recon_cmd = app.add_subcommand("reconstruct", "sample the full decomposition per input");
    int variants = -1;
    add_common(recon_cmd);
    recon_cmd->add_option("--variants", variants, "alias for --n-samples");

    auto* comp_cmd = app.add_subcommand("components", "sample each component separately");
    std::string component_weight = "one";
    add_common(comp_cmd);
    comp_cmd->add_option("--component-weight", component_weight, "single-component weight (one|1overK)");

    auto* manip_cmd = app.add_subcommand("manipulate", "dilute components toward the unconditional score");
    std::string mode = "single", ks = "1,2", alphas = "1.0,0.7,0.5,0.3,0.1";
    int manip_k = 1;
    add_common(manip_cmd);
    manip_cmd->add_option("--mode", mode, "single|pair");
    manip_cmd->add_option("--k", manip_k, "component to dilute (single mode)");
    manip_cmd->add_option("--ks", ks, "two components to dilute (pair mode)");
    manip_cmd->add_option("--alphas", alphas, "comma-separated alpha sweep");

    auto* tune_cmd = app.add_subcommand("tune", "sweep per-component weights");
    std::string weights;
    add_common(tune_cmd);
    tune_cmd->add_option("--weights", weights, "grid rows 'w1,..,wK;w1,..,wK'")->required();

    auto* mix_cmd = app.add_subcommand("mix", "compose components taken from different inputs");
    std::string mix_datums;
    add_common(mix_cmd);
    mix_cmd->add_option("--datums", mix_datums, "K datum indices, one per component")->required();

    auto* elbo_cmd = app.add_subcommand("elbo", "per-datum likelihood lower bound");
    int64_t n_mc = 2000;
    int n_time = 20;
    std::string method = "exact-fd", report_file;
    add_common(elbo_cmd, /*needs_out=*/false);
    elbo_cmd->add_option("--n-mc", n_mc, "Monte Carlo samples");
    elbo_cmd->add_option("--n-time", n_time, "time strata");
    elbo_cmd->add_option("--method", method, "divergence method (exact-fd|hutchinson)");
    elbo_cmd->add_option("--out", report_file, "report file");

    auto* oracle_cmd = app.add_subcommand("oracle-check", "run the built-in oracle suite");

    auto* replay_cmd = app.add_subcommand("replay", "regenerate a panel from its manifest");
    std::string manifest_path, replay_out;
    replay_cmd->add_option("--manifest", manifest_path, "panel manifest")->required();
    replay_cmd->add_option("--out", replay_out, "output file");

    std::vector<const char*> argv;
    argv.push_back("scomp");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    std::string invocation;
    for (const auto& a : args) {
        invocation += a;
        invocation += '\n';
    }

    try {
        if (app.got_subcommand(train_cmd)) return cmd_train(config_path, out);
        if (app.got_subcommand(recon_cmd)) {
            if (variants > 0) opts.n_samples = variants;
            return cmd_reconstruct(opts, invocation, out);
        }
        if (app.got_subcommand(comp_cmd)) {
            if (component_weight != "one" && component_weight != "1overK")
                throw ConfigError("--component-weight must be one or 1overK");
            return cmd_components(opts, component_weight == "one", invocation, out);
        }
        if (app.got_subcommand(manip_cmd))
            return cmd_manipulate(opts, mode, manip_k, ks, alphas, invocation, out);
        if (app.got_subcommand(tune_cmd)) return cmd_tune(opts, weights, invocation, out);
        if (app.got_subcommand(mix_cmd)) return cmd_mix(opts, mix_datums, invocation, out);
        if (app.got_subcommand(elbo_cmd))
            return cmd_elbo(opts, n_mc, n_time, method, report_file, invocation, out);
        if (app.got_subcommand(oracle_cmd)) return cmd_oracle_check(out);
        if (app.got_subcommand(replay_cmd)) return cmd_replay(manifest_path, replay_out, out);
        err << "error: no subcommand\n";
        return 2;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace scomp::cli
