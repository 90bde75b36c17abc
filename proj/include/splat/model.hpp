#pragma once

#include <vector>

#include "splat/primitive.hpp"

namespace splat {

// Fixed working extent of the normalized canvas: 1.1 times the half
// diagonal of the unit square. Scale thresholds and the positional
// learning rate are expressed relative to this.
inline constexpr float kSceneExtent = 1.1f * 0.70710678118654752440f;

// The full primitive set plus the running positional-gradient statistics
// that drive densification decisions.
struct GaussianModel {
    std::vector<GaussianPrimitive> primitives;

    // Per-primitive accumulators, reset after every densification step.
    std::vector<float> grad_norm_sum;   // sum of ||dL/du|| over touched iterations
    std::vector<int32_t> grad_obs_count;  // number of iterations the primitive was touched

    float scene_extent = kSceneExtent;

    size_t size() const { return primitives.size(); }

    void reset_accumulators() {
        grad_norm_sum.assign(primitives.size(), 0.0f);
        grad_obs_count.assign(primitives.size(), 0);
    }
};

}  // namespace splat
