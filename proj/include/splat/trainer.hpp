#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splat/config.hpp"
#include "splat/densify.hpp"
#include "splat/image.hpp"
#include "splat/model.hpp"
#include "splat/optim.hpp"
#include "splat/sched.hpp"

namespace splat {

// Split/clone ancestry summary of a trained model: how far each category
// of primitive drifted from the origin of its chain.
struct LineageReport {
    struct Category {
        int64_t count = 0;
        double mean_displacement = 0.0;  // normalized canvas units
        double extent_ratio = 0.0;       // mean displacement / scene_extent
    };
    Category split_dominant;
    Category clone_dominant;
    Category equal;
    double scene_extent = 0.0;

    std::string to_json() const;
};

struct MetricsReport {
    double psnr_db = 0.0;  // +inf when the render matches the target exactly
    double ssim = 0.0;
    int64_t n_primitives = 0;
    int iterations_global = 0;             // iterations in the GlobalSpread phase
    int iterations_local = 0;
    std::vector<int64_t> iterations_per_scale;  // index 0 <-> scale 1
    uint64_t config_hash = 0;
    uint64_t seed = 0;
    double total_seconds = 0.0;
    double densify_seconds = 0.0;  // wall time of iterations before densify_until

    // Deterministic fields only — wall-clock numbers go to timing_json so
    // repeated runs stay byte-comparable.
    std::string to_json() const;
    std::string timing_json() const;
};

struct TrainResult {
    GaussianModel model;
    OptimizerState opt;
    MetricsReport metrics;
    DensifyEventLog events;
    LineageReport lineage;
    ResolutionSchedule schedule;  // energy-based schedule (trivial when unused)
};

// n0 primitives at distinct uniformly-sampled pixel locations, colored by
// the target pixel, isotropic scale from the mean nearest-neighbor
// distance, opacity 0.1, depth uniform. Throws ConfigError if n0 exceeds
// the pixel count or n0 < 1.
GaussianModel init_model(const Image& target, int n0, uint64_t seed);

// Full optimization loop over one or more targets (multi-image runs cycle
// round-robin). If out_dir is non-empty, a diagnostic checkpoint is
// written there before aborting on non-finite parameters, and periodic
// snapshots land there when config.snapshot_interval > 0.
TrainResult train(const std::vector<Image>& targets, const TrainConfig& cfg,
                  const std::string& out_dir = "");

LineageReport lineage_report(const GaussianModel& model);

struct AblationRow {
    std::string variant;
    MetricsReport metrics;
};

// Runs the six-variant matrix (baseline, g2l, c2f, g2l-c2f, prune, full)
// with a shared seed.
std::vector<AblationRow> run_ablation(const std::vector<Image>& targets,
                                      const TrainConfig& base, const std::string& out_dir = "");

// CSV with header variant,ssim,psnr_db,n_primitives,total_seconds,densify_seconds.
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace splat
