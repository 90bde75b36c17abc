#include "splat/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "splat/checkpoint.hpp"
#include "splat/errors.hpp"
#include "splat/loss.hpp"
#include "splat/raster.hpp"
#include "splat/vec.hpp"

namespace splat {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// +inf has no JSON number representation, so it travels as a string.
json json_db(double v) {
    if (std::isinf(v)) return json(v > 0 ? "+inf" : "-inf");
    return json(v);
}

std::string format_db(double v) {
    if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

json category_json(const LineageReport::Category& c) {
    return json{{"count", c.count},
                {"mean_displacement", c.mean_displacement},
                {"extent_ratio", c.extent_ratio}};
}

// One pyramid level: the downscaled target and its precomputed loss context.
struct Level {
    Image target;
    LossContextT<float> ctx;
};

}  // namespace

GaussianModel init_model(const Image& target, int n0, uint64_t seed) {
    if (n0 < 1) throw ConfigError("init_model requires at least one primitive");
    if (target.channels != 3) throw ConfigError("init_model expects a 3-channel target");
    const int64_t pixels = static_cast<int64_t>(target.width) * target.height;
    if (n0 > pixels) {
        throw ConfigError("init_model: " + std::to_string(n0) + " primitives exceed the " +
                          std::to_string(pixels) + "-pixel target");
    }

    Rng rng(seed);
    // Partial Fisher-Yates over the pixel indices gives n0 distinct cells.
    std::vector<int64_t> cells(static_cast<size_t>(pixels));
    std::iota(cells.begin(), cells.end(), int64_t{0});
    GaussianModel model;
    model.primitives.resize(static_cast<size_t>(n0));
    for (int i = 0; i < n0; ++i) {
        const uint64_t j = i + rng.uniform_int(static_cast<uint64_t>(pixels) - i);
        std::swap(cells[static_cast<size_t>(i)], cells[j]);
        const int64_t cell = cells[static_cast<size_t>(i)];
        const int px = static_cast<int>(cell % target.width);
        const int py = static_cast<int>(cell / target.width);
        GaussianPrimitive& g = model.primitives[static_cast<size_t>(i)];
        g.position = {(px + 0.5f) / static_cast<float>(target.width),
                      (py + 0.5f) / static_cast<float>(target.height)};
        g.color = {target.at(px, py, 0), target.at(px, py, 1), target.at(px, py, 2)};
        g.opacity_logit = inverse_sigmoid(0.1f);
        g.lineage.origin_position = g.position;
    }
    for (GaussianPrimitive& g : model.primitives) g.depth = rng.uniform();

    // Isotropic footprint sized to the mean nearest-neighbor distance so the
    // initial set roughly covers the canvas. Quadratic scan — init counts
    // are small and this runs once.
    float mean_nn = 0.5f;
    if (n0 > 1) {
        double sum = 0.0;
        for (int i = 0; i < n0; ++i) {
            float best = std::numeric_limits<float>::infinity();
            const Vec2f pi = model.primitives[static_cast<size_t>(i)].position;
            for (int j = 0; j < n0; ++j) {
                if (j == i) continue;
                const float d = (model.primitives[static_cast<size_t>(j)].position - pi).norm();
                best = std::min(best, d);
            }
            sum += best;
        }
        mean_nn = static_cast<float>(sum / n0);
    }
    const float ls = std::log(std::max(mean_nn, 1e-6f));
    for (GaussianPrimitive& g : model.primitives) g.log_scale = {ls, ls};

    model.reset_accumulators();
    return model;
}

LineageReport lineage_report(const GaussianModel& model) {
    LineageReport rep;
    rep.scene_extent = model.scene_extent;
    double sums[3] = {0, 0, 0};
    int64_t counts[3] = {0, 0, 0};
    for (const GaussianPrimitive& g : model.primitives) {
        const int k = static_cast<int>(classify_lineage(g.lineage));
        sums[k] += lineage_displacement(g);
        counts[k] += 1;
    }
    LineageReport::Category* cats[3] = {&rep.split_dominant, &rep.clone_dominant, &rep.equal};
    static_assert(static_cast<int>(LineageCategory::SplitDominant) == 0 &&
                  static_cast<int>(LineageCategory::CloneDominant) == 1 &&
                  static_cast<int>(LineageCategory::Equal) == 2);
    for (int k = 0; k < 3; ++k) {
        cats[k]->count = counts[k];
        cats[k]->mean_displacement = counts[k] > 0 ? sums[k] / counts[k] : 0.0;
        cats[k]->extent_ratio =
            rep.scene_extent > 0 ? cats[k]->mean_displacement / rep.scene_extent : 0.0;
    }
    return rep;
}

std::string LineageReport::to_json() const {
    json j{{"split_dominant", category_json(split_dominant)},
           {"clone_dominant", category_json(clone_dominant)},
           {"equal", category_json(equal)},
           {"scene_extent", scene_extent}};
    return j.dump(2) + "\n";
}

std::string MetricsReport::to_json() const {
    json j{{"psnr_db", json_db(psnr_db)},
           {"ssim", ssim},
           {"n_primitives", n_primitives},
           {"iterations_global", iterations_global},
           {"iterations_local", iterations_local},
           {"iterations_per_scale", iterations_per_scale},
           {"config_hash", config_hash},
           {"seed", seed}};
    return j.dump(2) + "\n";
}

std::string MetricsReport::timing_json() const {
    json j{{"total_seconds", total_seconds}, {"densify_seconds", densify_seconds}};
    return j.dump(2) + "\n";
}

TrainResult train(const std::vector<Image>& targets, const TrainConfig& cfg,
                  const std::string& out_dir) {
    cfg.validate();
    if (targets.empty()) throw ConfigError("train requires at least one target image");
    for (const Image& t : targets) {
        if (t.channels != 3) throw ConfigError("train expects 3-channel targets");
        if (t.width < 1 || t.height < 1) throw ConfigError("train target has empty dimensions");
    }
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

    // The energy analysis feeds two independent switches: the rendering
    // resolution (coarse-to-fine) and the spread/refine phase boundary
    // (global-to-local). Either one alone still needs the schedule.
    const bool want_energy = (cfg.enable_c2f || cfg.enable_g2l) && cfg.densify_until > 0;
    ResolutionSchedule energy =
        want_energy
            ? build_schedule(targets, cfg.max_scale_factor, cfg.densify_until,
                             cfg.schedule_sample_cap)
            : single_resolution_schedule();
    const ResolutionSchedule trivial = single_resolution_schedule();
    const ResolutionSchedule& rsched = cfg.enable_c2f ? energy : trivial;
    const int phase_boundary = cfg.enable_g2l ? energy.phase_boundary : 0;

    // Target pyramid, built once; level r-1 matches rasterize at scale r.
    const int max_scale = rsched.max_scale();
    std::vector<std::vector<Level>> pyramids(targets.size());
    for (size_t i = 0; i < targets.size(); ++i) {
        for (int r = 1; r <= max_scale; ++r) {
            Image level = downscale(targets[i], r);
            LossContextT<float> ctx = make_loss_context(level);
            pyramids[i].push_back(Level{std::move(level), std::move(ctx)});
        }
    }

    GaussianModel model = init_model(targets[0], cfg.init_point_count, cfg.seed);
    OptimizerState opt;
    opt.resize(model.size());
    Rng densify_rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);

    TrainResult result;
    result.metrics.config_hash = cfg.hash();
    result.metrics.seed = cfg.seed;
    result.metrics.iterations_per_scale.assign(static_cast<size_t>(max_scale), 0);

    const Clock::time_point t_start = Clock::now();
    double densify_seconds = -1.0;
    int64_t expected_total = static_cast<int64_t>(model.size());

    int it = 0;
    try {
        for (it = 0; it < cfg.total_iterations; ++it) {
            if (it == cfg.densify_until) densify_seconds = seconds_since(t_start);

            const int scale = cfg.enable_c2f ? active_scale(it, rsched) : 1;
            result.metrics.iterations_per_scale[static_cast<size_t>(scale - 1)] += 1;
            const Level& lvl = pyramids[it % targets.size()][static_cast<size_t>(scale - 1)];

            RenderOutput render =
                rasterize(model, lvl.target.width, lvl.target.height, cfg.num_threads);
            LossResultT<float> loss =
                hybrid_loss(render.image, lvl.ctx, cfg.loss_lambda, cfg.num_threads);
            SplatGradients<float> grads =
                rasterize_backward(model, render, loss.grad, cfg.num_threads);

            const bool densifying = it < cfg.densify_until;
            if (densifying) accumulate(model, grads);

            LearningRates lr;
            lr.position = positional_lr(it, rsched, cfg) * model.scene_extent;
            lr.depth = cfg.lr_depth;
            lr.log_scale = cfg.lr_log_scale;
            lr.rotation = cfg.lr_rotation;
            lr.opacity_logit = cfg.lr_opacity;
            lr.color = cfg.lr_color;
            adam_step(model, grads, opt, lr, cfg.num_threads);

            const DensifyPhase phase =
                it < phase_boundary ? DensifyPhase::GlobalSpread : DensifyPhase::LocalRefine;
            DensifyCounts counts;
            int pruned = 0;
            bool densify_fired = false;
            bool reset_fired = false;
            if (densifying && it > 0 && it % cfg.densify_interval == 0) {
                densify_fired = true;
                counts = densify_step(model, phase, cfg, densify_rng, &opt);
                if (cfg.enable_prune) {
                    pruned += adaptive_prune(model, cfg.pruning_ratio, cfg.pruning_upper_limit,
                                             &opt);
                }
            }
            if (densifying && it > 0 && it % cfg.opacity_reset_interval == 0 &&
                !(cfg.suppress_reset_in_global && phase == DensifyPhase::GlobalSpread)) {
                reset_fired = true;
                pruned += opacity_reset(model, &opt);
            }
            if (densify_fired || reset_fired) {
                DensifyEvent ev;
                ev.iteration = it;
                ev.splits = counts.splits;
                ev.clones = counts.clones;
                ev.suppressed_clones = counts.suppressed_clones;
                ev.pruned = pruned;
                ev.total = static_cast<int64_t>(model.size());
                result.events.events.push_back(ev);
                expected_total += counts.splits + counts.clones - pruned;
                if (expected_total != ev.total) {
                    throw NumericError("event accounting mismatch at iteration " +
                                       std::to_string(it));
                }
                if (opt.prim_count() != model.size()) {
                    throw NumericError("optimizer rows out of sync at iteration " +
                                       std::to_string(it));
                }
            }

            if (!out_dir.empty() && cfg.snapshot_interval > 0 && it > 0 &&
                it % cfg.snapshot_interval == 0) {
                Checkpoint snap{model, opt, cfg.hash(), cfg.seed, it};
                save_checkpoint(out_dir + "/snapshot_" + std::to_string(it) + ".bin", snap);
                RenderOutput full =
                    rasterize(model, targets[0].width, targets[0].height, cfg.num_threads);
                save_png(out_dir + "/render_" + std::to_string(it) + ".png", full.image);
            }
        }
    } catch (const NumericError&) {
        if (!out_dir.empty()) {
            Checkpoint diag{model, opt, cfg.hash(), cfg.seed, it};
            save_checkpoint(out_dir + "/diagnostic.bin", diag);
        }
        throw;
    }

    result.metrics.total_seconds = seconds_since(t_start);
    result.metrics.densify_seconds =
        densify_seconds >= 0 ? densify_seconds : result.metrics.total_seconds;
    if (cfg.densify_until <= 0) result.metrics.densify_seconds = 0.0;

    result.metrics.n_primitives = static_cast<int64_t>(model.size());
    result.metrics.iterations_global = std::min(phase_boundary, cfg.total_iterations);
    result.metrics.iterations_local = cfg.total_iterations - result.metrics.iterations_global;

    double psnr_sum = 0.0;
    double ssim_sum = 0.0;
    for (const Image& t : targets) {
        RenderOutput render = rasterize(model, t.width, t.height, cfg.num_threads);
        psnr_sum += compute_psnr(render.image, t);
        ssim_sum += compute_ssim(render.image, t, cfg.num_threads);
    }
    result.metrics.psnr_db = psnr_sum / static_cast<double>(targets.size());
    result.metrics.ssim = ssim_sum / static_cast<double>(targets.size());

    result.lineage = lineage_report(model);
    result.schedule = energy;
    result.model = std::move(model);
    result.opt = std::move(opt);
    return result;
}

std::vector<AblationRow> run_ablation(const std::vector<Image>& targets, const TrainConfig& base,
                                      const std::string& out_dir) {
    static const char* kVariants[] = {"baseline", "g2l", "c2f", "g2l-c2f", "prune", "full"};
    std::vector<AblationRow> rows;
    rows.reserve(6);
    for (const char* variant : kVariants) {
        TrainConfig cfg = base;
        apply_variant(cfg, variant);
        const std::string variant_dir = out_dir.empty() ? "" : out_dir + "/" + variant;
        TrainResult r = train(targets, cfg, variant_dir);
        rows.push_back(AblationRow{variant, r.metrics});
    }
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::string csv = "variant,ssim,psnr_db,n_primitives,total_seconds,densify_seconds\n";
    char buf[256];
    for (const AblationRow& row : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.9g,%s,%lld,%.3f,%.3f\n", row.variant.c_str(),
                      row.metrics.ssim, format_db(row.metrics.psnr_db).c_str(),
                      static_cast<long long>(row.metrics.n_primitives),
                      row.metrics.total_seconds, row.metrics.densify_seconds);
        csv += buf;
    }
    return csv;
}

}  // namespace splat
