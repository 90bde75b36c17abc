#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "splat/checkpoint.hpp"
#include "splat/config.hpp"
#include "splat/errors.hpp"
#include "splat/image.hpp"
#include "splat/loss.hpp"
#include "splat/raster.hpp"
#include "splat/sched.hpp"
#include "splat/trainer.hpp"

namespace {

using splat::ConfigError;

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw ConfigError("cannot write '" + path + "'");
}

std::vector<splat::Image> load_targets(const std::vector<std::string>& paths) {
    std::vector<splat::Image> targets;
    targets.reserve(paths.size());
    for (const std::string& p : paths) targets.push_back(splat::load_png(p));
    return targets;
}

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> target_paths;
    std::string out_dir = "out";
    uint64_t seed = 0;
    std::string variant;
    CLI::Option* seed_opt = nullptr;

    void add_config(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value config file (defaults when omitted)")
            ->check(CLI::ExistingFile);
    }
    void add_targets(CLI::App* cmd) {
        cmd->add_option("--target", target_paths, "target PNG (repeatable)")
            ->required()
            ->check(CLI::ExistingFile);
    }
    void add_seed(CLI::App* cmd) {
        seed_opt = cmd->add_option("--seed", seed, "RNG seed (overrides the config)");
    }

    splat::TrainConfig make_config() const {
        splat::TrainConfig cfg = splat::load_config(config_path);
        if (seed_opt != nullptr && seed_opt->count() > 0) cfg.seed = seed;
        if (!variant.empty()) splat::apply_variant(cfg, variant);
        cfg.validate();
        return cfg;
    }
};

void write_run_artifacts(const std::string& dir, const splat::TrainResult& result,
                         const std::vector<splat::Image>& targets,
                         const splat::TrainConfig& cfg) {
    std::filesystem::create_directories(dir);
    write_text(dir + "/metrics.json", result.metrics.to_json());
    write_text(dir + "/timing.json", result.metrics.timing_json());
    write_text(dir + "/events.csv", result.events.to_csv());
    write_text(dir + "/lineage.json", result.lineage.to_json());
    write_text(dir + "/schedule.json", result.schedule.to_json());
    for (size_t i = 0; i < targets.size(); ++i) {
        splat::RenderOutput render = splat::rasterize(result.model, targets[i].width,
                                                      targets[i].height, cfg.num_threads);
        splat::save_png(dir + "/render_" + std::to_string(i) + ".png", render.image);
    }
    splat::Checkpoint ckpt{result.model, result.opt, cfg.hash(), cfg.seed,
                           cfg.total_iterations};
    splat::save_checkpoint(dir + "/checkpoint.bin", ckpt);
}

int run(int argc, char** argv) {
    CLI::App app{"2D Gaussian-splat image fitting testbed"};
    app.require_subcommand(1);

    CommonArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "fit primitives to the targets");
    train_args.add_config(train_cmd);
    train_args.add_targets(train_cmd);
    train_cmd->add_option("--out-dir", train_args.out_dir, "output directory");
    train_args.add_seed(train_cmd);
    train_cmd
        ->add_option("--variant", train_args.variant,
                     "feature preset: baseline, g2l, c2f, g2l-c2f, prune, full")
        ->check(CLI::IsMember({"baseline", "g2l", "c2f", "g2l-c2f", "prune", "full"}));

    CommonArgs ablate_args;
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "run the six-variant feature matrix");
    ablate_args.add_config(ablate_cmd);
    ablate_args.add_targets(ablate_cmd);
    ablate_cmd->add_option("--out-dir", ablate_args.out_dir, "output directory");
    ablate_args.add_seed(ablate_cmd);

    CommonArgs sched_args;
    CLI::App* sched_cmd =
        app.add_subcommand("schedule", "print the resolution schedule JSON without training");
    sched_args.add_config(sched_cmd);
    sched_args.add_targets(sched_cmd);

    std::string ckpt_path;
    CommonArgs report_args;
    CLI::App* report_cmd =
        app.add_subcommand("report", "recompute metrics for a checkpoint against the targets");
    report_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")
        ->required()
        ->check(CLI::ExistingFile);
    report_args.add_targets(report_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (train_cmd->parsed()) {
        const splat::TrainConfig cfg = train_args.make_config();
        const std::vector<splat::Image> targets = load_targets(train_args.target_paths);
        const splat::TrainResult result = splat::train(targets, cfg, train_args.out_dir);
        write_run_artifacts(train_args.out_dir, result, targets, cfg);
        std::printf("PSNR %s dB, SSIM %.4f, %lld primitives -> %s\n",
                    std::isinf(result.metrics.psnr_db)
                        ? "+inf"
                        : std::to_string(result.metrics.psnr_db).c_str(),
                    result.metrics.ssim,
                    static_cast<long long>(result.metrics.n_primitives),
                    train_args.out_dir.c_str());
    } else if (ablate_cmd->parsed()) {
        const splat::TrainConfig base = ablate_args.make_config();
        const std::vector<splat::Image> targets = load_targets(ablate_args.target_paths);
        std::filesystem::create_directories(ablate_args.out_dir);
        const std::vector<splat::AblationRow> rows =
            splat::run_ablation(targets, base, ablate_args.out_dir);
        for (const splat::AblationRow& row : rows) {
            const std::string dir = ablate_args.out_dir + "/" + row.variant;
            std::filesystem::create_directories(dir);
            write_text(dir + "/metrics.json", row.metrics.to_json());
            write_text(dir + "/timing.json", row.metrics.timing_json());
        }
        const std::string csv = splat::ablation_csv(rows);
        write_text(ablate_args.out_dir + "/ablation.csv", csv);
        std::fputs(csv.c_str(), stdout);
    } else if (sched_cmd->parsed()) {
        const splat::TrainConfig cfg = sched_args.make_config();
        const std::vector<splat::Image> targets = load_targets(sched_args.target_paths);
        const splat::ResolutionSchedule schedule = splat::build_schedule(
            targets, cfg.max_scale_factor, cfg.densify_until, cfg.schedule_sample_cap);
        std::fputs(schedule.to_json().c_str(), stdout);
    } else if (report_cmd->parsed()) {
        const splat::Checkpoint ckpt = splat::load_checkpoint(ckpt_path);
        const std::vector<splat::Image> targets = load_targets(report_args.target_paths);
        double psnr_sum = 0.0;
        double ssim_sum = 0.0;
        for (const splat::Image& t : targets) {
            splat::RenderOutput render = splat::rasterize(ckpt.model, t.width, t.height);
            psnr_sum += splat::compute_psnr(render.image, t);
            ssim_sum += splat::compute_ssim(render.image, t);
        }
        const double psnr = psnr_sum / static_cast<double>(targets.size());
        nlohmann::json j{{"psnr_db", std::isinf(psnr) ? nlohmann::json("+inf")
                                                      : nlohmann::json(psnr)},
                         {"ssim", ssim_sum / static_cast<double>(targets.size())},
                         {"n_primitives", static_cast<int64_t>(ckpt.model.size())},
                         {"config_hash", ckpt.config_hash},
                         {"seed", ckpt.seed},
                         {"iteration", ckpt.iteration}};
        std::fputs((j.dump(2) + "\n").c_str(), stdout);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const splat::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const splat::NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    }
}
