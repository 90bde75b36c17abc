#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splat/config.hpp"
#include "splat/model.hpp"
#include "splat/optim.hpp"
#include "splat/raster.hpp"
#include "splat/vec.hpp"

namespace splat {

// GlobalSpread suppresses clones so growth spreads spatially via splits;
// LocalRefine applies the plain split-or-clone rule.
enum class DensifyPhase { GlobalSpread, LocalRefine };

struct DensifyEvent {
    int iteration = 0;
    int splits = 0;
    int clones = 0;
    int suppressed_clones = 0;
    int pruned = 0;
    int64_t total = 0;  // primitive count after the step
};

struct DensifyEventLog {
    std::vector<DensifyEvent> events;

    int64_t total_splits() const;
    int64_t total_clones() const;

    // CSV with header iteration,splits,clones,suppressed_clones,pruned,total.
    std::string to_csv() const;
};

// Adds each touched primitive's positional-gradient norm to the model's
// running accumulators. Throws NumericError on length mismatch.
void accumulate(GaussianModel& model, const SplatGradients<float>& grads);

struct DensifyCounts {
    int splits = 0;
    int clones = 0;
    int suppressed_clones = 0;
};

// Applies the growth rule to every primitive whose average accumulated
// gradient norm exceeds grad_threshold: large primitives split into two
// children sampled from the parent density, small ones clone in place
// (suppressed during GlobalSpread). Accumulators reset afterwards; when
// `opt` is given its rows are rebuilt with children zero-initialized.
DensifyCounts densify_step(GaussianModel& model, DensifyPhase phase, const TrainConfig& cfg,
                           Rng& rng, OptimizerState* opt = nullptr);

// Clamps every opacity to at most 0.01 (through the logit) and removes
// primitives already strictly below 0.01. Opacity moments are zeroed so
// stale momentum does not immediately undo the clamp. Returns the number
// removed.
int opacity_reset(GaussianModel& model, OptimizerState* opt = nullptr);

// Order-statistic prune: tau = min(ascending_opacities[floor(N*p)], tau_u);
// removes primitives with opacity strictly below tau. Returns the number
// removed (always <= floor(N*p)).
int adaptive_prune(GaussianModel& model, float p, float tau_u, OptimizerState* opt = nullptr);

}  // namespace splat
