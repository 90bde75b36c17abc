#include "splat/optim.hpp"

#include <algorithm>
#include <cmath>

#include "splat/errors.hpp"

namespace splat {

void OptimizerState::resize(size_t prim_count) {
    auto init = [prim_count](AdamMoments& mo, size_t comps) {
        mo.m.assign(prim_count * comps, 0.0f);
        mo.v.assign(prim_count * comps, 0.0f);
    };
    init(position, 2);
    init(depth, 1);
    init(log_scale, 2);
    init(rotation, 1);
    init(opacity_logit, 1);
    init(color, 3);
}

namespace {

inline void adam_update(float& param, float grad, float& m, float& v, float lr, float inv_bc1,
                        float inv_bc2) {
    if (!std::isfinite(grad)) throw NumericError("optimizer: non-finite gradient");
    m = kAdamBeta1 * m + (1.0f - kAdamBeta1) * grad;
    v = kAdamBeta2 * v + (1.0f - kAdamBeta2) * grad * grad;
    const float m_hat = m * inv_bc1;
    const float v_hat = v * inv_bc2;
    param -= lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
    if (!std::isfinite(param)) throw NumericError("optimizer: parameter became non-finite");
}

}  // namespace

void adam_step(GaussianModel& model, const SplatGradients<float>& grads, OptimizerState& state,
               const LearningRates& lr, int num_threads) {
    const size_t n = model.size();
    if (grads.size() != n || state.prim_count() != n) {
        throw NumericError("optimizer: gradient/state size mismatch");
    }
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const float inv_bc1 = static_cast<float>(1.0 / (1.0 - std::pow(kAdamBeta1, t)));
    const float inv_bc2 = static_cast<float>(1.0 / (1.0 - std::pow(kAdamBeta2, t)));
    (void)num_threads;  // write-disjoint over primitives; serial is fine at this size
    for (size_t i = 0; i < n; ++i) {
        GaussianPrimitive& g = model.primitives[i];
        adam_update(g.position.x, grads.position[i].x, state.position.m[i * 2],
                    state.position.v[i * 2], lr.position, inv_bc1, inv_bc2);
        adam_update(g.position.y, grads.position[i].y, state.position.m[i * 2 + 1],
                    state.position.v[i * 2 + 1], lr.position, inv_bc1, inv_bc2);
        adam_update(g.depth, grads.depth[i], state.depth.m[i], state.depth.v[i], lr.depth, inv_bc1,
                    inv_bc2);
        adam_update(g.log_scale.x, grads.log_scale[i].x, state.log_scale.m[i * 2],
                    state.log_scale.v[i * 2], lr.log_scale, inv_bc1, inv_bc2);
        adam_update(g.log_scale.y, grads.log_scale[i].y, state.log_scale.m[i * 2 + 1],
                    state.log_scale.v[i * 2 + 1], lr.log_scale, inv_bc1, inv_bc2);
        adam_update(g.rotation, grads.rotation[i], state.rotation.m[i], state.rotation.v[i],
                    lr.rotation, inv_bc1, inv_bc2);
        adam_update(g.opacity_logit, grads.opacity_logit[i], state.opacity_logit.m[i],
                    state.opacity_logit.v[i], lr.opacity_logit, inv_bc1, inv_bc2);
        adam_update(g.color.x, grads.color[i].x, state.color.m[i * 3], state.color.v[i * 3],
                    lr.color, inv_bc1, inv_bc2);
        adam_update(g.color.y, grads.color[i].y, state.color.m[i * 3 + 1],
                    state.color.v[i * 3 + 1], lr.color, inv_bc1, inv_bc2);
        adam_update(g.color.z, grads.color[i].z, state.color.m[i * 3 + 2],
                    state.color.v[i * 3 + 2], lr.color, inv_bc1, inv_bc2);
        // Colors live in [0,1]; project back after the step.
        g.color.x = std::clamp(g.color.x, 0.0f, 1.0f);
        g.color.y = std::clamp(g.color.y, 0.0f, 1.0f);
        g.color.z = std::clamp(g.color.z, 0.0f, 1.0f);
    }
}

float positional_lr(int iteration, const ResolutionSchedule& schedule, const TrainConfig& cfg) {
    if (active_scale(iteration, schedule) > 1) return cfg.lr_position_init;
    // Full resolution starts at T_2 (0 when the schedule has one scale);
    // decay log-linearly from there to the end of training.
    const int t0 = schedule.max_scale() >= 2 ? schedule.t(2) : 0;
    const int total = cfg.total_iterations;
    if (t0 >= total) return cfg.lr_position_final;
    const double frac =
        std::clamp((static_cast<double>(iteration) - t0) / (static_cast<double>(total) - t0), 0.0,
                   1.0);
    const double ratio =
        static_cast<double>(cfg.lr_position_final) / static_cast<double>(cfg.lr_position_init);
    return static_cast<float>(cfg.lr_position_init * std::pow(ratio, frac));
}

}  // namespace splat
