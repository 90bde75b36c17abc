#pragma once

#include <cstdint>
#include <string>

namespace splat {

// Every knob the trainer reads. Parsed from a key=value file; unknown keys
// are rejected so typos fail loudly instead of silently using defaults.
struct TrainConfig {
    // Loop structure
    int total_iterations = 30000;
    int densify_until = 25000;       // densification stops at this iteration
    int densify_interval = 100;
    int opacity_reset_interval = 3000;

    // Resolution schedule
    int max_scale_factor = 8;        // coarsest downscale factor K
    int schedule_sample_cap = 0;     // 0 = use every target image

    // Densification / pruning
    float grad_threshold = 2e-4f;
    float scale_threshold_fraction = 0.01f;
    float split_scale_divisor = 1.6f;
    float pruning_ratio = 0.03f;     // fraction p of primitives prunable per step
    float pruning_upper_limit = 0.05f;  // opacity ceiling tau_u for the threshold

    // Loss
    float loss_lambda = 0.2f;

    // Learning rates (position is additionally scaled by scene extent)
    float lr_position_init = 1.6e-4f;
    float lr_position_final = 1.6e-6f;
    float lr_depth = 1e-3f;
    float lr_log_scale = 5e-3f;
    float lr_rotation = 1e-3f;
    float lr_opacity = 5e-2f;
    float lr_color = 2.5e-3f;

    // Initialization
    int init_point_count = 1000;
    uint64_t seed = 0;

    // Feature switches (the CLI variants toggle these)
    bool enable_g2l = true;
    bool enable_c2f = true;
    bool enable_prune = true;
    bool suppress_reset_in_global = false;

    // Runtime
    int num_threads = 1;
    int snapshot_interval = 0;       // 0 = no periodic checkpoints

    // Throws ConfigError on out-of-range values.
    void validate() const;

    // Stable hash over the canonical serialization; stored in checkpoints
    // so a resume with a different config is detected.
    uint64_t hash() const;

    std::string serialize() const;
};

// Parses a key=value config file. Missing file or unknown/invalid keys
// throw ConfigError. An empty path returns the defaults.
TrainConfig load_config(const std::string& path);

// Applies one "variant" name (baseline, g2l, c2f, g2l-c2f, prune, full)
// to the feature switches. Throws ConfigError on unknown names.
void apply_variant(TrainConfig& cfg, const std::string& variant);

}  // namespace splat
