#pragma once

#include <cstdint>
#include <vector>

#include "splat/config.hpp"
#include "splat/model.hpp"
#include "splat/raster.hpp"
#include "splat/sched.hpp"

namespace splat {

inline constexpr float kAdamBeta1 = 0.9f;
inline constexpr float kAdamBeta2 = 0.999f;
inline constexpr float kAdamEpsilon = 1e-15f;

// Final learning rates handed to one step (the positional entry already
// includes the scene-extent scaling and decay).
struct LearningRates {
    float position = 0;
    float depth = 0;
    float log_scale = 0;
    float rotation = 0;
    float opacity_logit = 0;
    float color = 0;
};

struct AdamMoments {
    std::vector<float> m;
    std::vector<float> v;
};

// Bias-corrected adaptive moments, one row per primitive per attribute.
// Densification rebuilds the rows: surviving primitives keep theirs,
// children start from zero.
struct OptimizerState {
    AdamMoments position;      // 2 per primitive
    AdamMoments depth;         // 1
    AdamMoments log_scale;     // 2
    AdamMoments rotation;      // 1
    AdamMoments opacity_logit; // 1
    AdamMoments color;         // 3
    int64_t step_count = 0;

    void resize(size_t prim_count);
    size_t prim_count() const { return depth.m.size(); }
};

// One optimizer step over all primitives. Colors are projected back to
// [0,1] after the update. Throws NumericError on shape mismatch or
// non-finite gradients/parameters.
void adam_step(GaussianModel& model, const SplatGradients<float>& grads, OptimizerState& state,
               const LearningRates& lr, int num_threads = 1);

// Positional learning-rate policy: constant at lr_position_init while the
// schedule keeps training below full resolution, then log-linear decay to
// lr_position_final over the remaining iterations. Unscaled by
// scene_extent — the caller multiplies.
float positional_lr(int iteration, const ResolutionSchedule& schedule, const TrainConfig& cfg);

}  // namespace splat
