#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lff/error.hpp"
#include "lff/harness.hpp"

namespace {

int dispatch(CLI::App& app, const std::string& command, const std::string& config_path,
             long long seed_flag, double lr_flag, long long steps_flag,
             const std::string& data_dir, const std::string& ckpt_dir, const std::string& grid,
             const std::string& baseline, const std::string& latents_path,
             const std::string& scene_dir, long long clip_len_flag, const std::string& out_dir) {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();

    if (name == "selftest") {
        lff::ExperimentConfig cfg =
            config_path.empty() ? lff::default_config() : lff::load_config(config_path);
        lff::apply_env_seed(cfg);
        if (!out_dir.empty()) lff::write_run_json(out_dir, cfg, command);
        return lff::selftest_run(std::cout) == 0 ? 0 : 1;
    }

    lff::ExperimentConfig cfg =
        config_path.empty() ? lff::default_config() : lff::load_config(config_path);
    lff::apply_env_seed(cfg);
    // Not every option exists on every subcommand; count() would throw.
    auto passed = [&](const char* opt) {
        const CLI::Option* o = sub->get_option_no_throw(opt);
        return o != nullptr && o->count() > 0;
    };
    if (passed("--seed")) cfg.seed = static_cast<std::uint64_t>(seed_flag);
    if (passed("--lr")) cfg.lr = lr_flag;
    if (passed("--steps")) cfg.train_steps = steps_flag;
    if (passed("--baseline")) cfg.baseline = baseline;
    if (passed("--clip-len")) cfg.clip_len = clip_len_flag;
    lff::validate_config(cfg);

    if (name == "gen-data") {
        lff::cmd_gen_data(cfg, out_dir, command, std::cout);
    } else if (name == "train") {
        lff::cmd_train(cfg, data_dir, out_dir, command, std::cout);
    } else if (name == "sample") {
        lff::cmd_sample(cfg, ckpt_dir, out_dir, command, std::cout);
    } else if (name == "ablate") {
        lff::cmd_ablate(cfg, ckpt_dir, grid, out_dir, command, std::cout);
    } else if (name == "metrics") {
        lff::cmd_metrics(cfg, latents_path, scene_dir, out_dir, command, std::cout);
    } else {
        throw lff::ConfigError("unknown subcommand '" + name + "'");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::string command;
    for (int i = 0; i < argc; ++i) {
        if (i) command += ' ';
        command += argv[i];
    }

    CLI::App app{"synthetic audio-driven video flow: data generation, training, long-sequence "
                 "sampling, ablations and metrics"};
    app.require_subcommand(1);

    std::string config_path;
    long long seed_flag = 0;
    double lr_flag = 0.0;
    long long steps_flag = 0;
    std::string data_dir, ckpt_dir, baseline, latents_path, scene_dir, out_dir;
    std::string grid = "conditioning";
    long long clip_len_flag = 0;

    auto add_common = [&](CLI::App* sub, const std::string& default_out) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--seed", seed_flag, "override the run seed");
        out_dir = default_out;
        sub->add_option("--out", out_dir, "output directory");
    };

    CLI::App* gen = app.add_subcommand("gen-data", "write synthetic training scenes");
    add_common(gen, "data");

    CLI::App* train = app.add_subcommand("train", "train the model, write checkpoints + loss CSV");
    add_common(train, "train_out");
    train->add_option("--data", data_dir, "scene directory (default: generate in memory)");
    train->add_option("--lr", lr_flag, "override train.lr");
    train->add_option("--steps", steps_flag, "override train.steps");

    CLI::App* sample = app.add_subcommand("sample", "long rollout: latents, frames, drift report");
    add_common(sample, "sample_out");
    sample->add_option("--ckpt", ckpt_dir, "checkpoint directory")->required();
    sample->add_option("--baseline", baseline,
                       "sampling strategy: empty, motion_frame or plain_window");

    CLI::App* ablate = app.add_subcommand("ablate", "run an ablation grid, write comparison CSV");
    add_common(ablate, "ablate_out");
    ablate->add_option("--ckpt", ckpt_dir, "checkpoint directory (conditioning grid)");
    ablate->add_option("--grid", grid, "grid to run: conditioning or weights");

    CLI::App* metrics = app.add_subcommand("metrics", "recompute a drift report from artifacts");
    add_common(metrics, "metrics_out");
    metrics->add_option("--latents", latents_path, "latents TNSR file")->required();
    metrics->add_option("--scene", scene_dir, "scene directory (audio + masks)")->required();
    metrics->add_option("--clip-len", clip_len_flag, "override metrics.clip_len");

    CLI::App* selftest = app.add_subcommand("selftest", "run the built-in invariant checks");
    selftest->add_option("--config", config_path, "JSON config file");
    selftest->add_option("--out", out_dir, "optional directory for the run echo");

    // The default --out depends on the chosen subcommand, so reset it before
    // parsing and fill it in afterwards when the user did not pass one.
    out_dir.clear();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    if (out_dir.empty() && sub->get_name() != "selftest") {
        if (sub->get_name() == "gen-data") out_dir = "data";
        else if (sub->get_name() == "train") out_dir = "train_out";
        else if (sub->get_name() == "sample") out_dir = "sample_out";
        else if (sub->get_name() == "ablate") out_dir = "ablate_out";
        else out_dir = "metrics_out";
    }

    try {
        return dispatch(app, command, config_path, seed_flag, lr_flag, steps_flag, data_dir,
                        ckpt_dir, grid, baseline, latents_path, scene_dir, clip_len_flag,
                        out_dir);
    } catch (const lff::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
