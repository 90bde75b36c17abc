#include "splat/densify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <vector>

#include "splat/errors.hpp"

namespace splat {
namespace {

// Rebuilds optimizer rows after the primitive set changed. parent_of_new
// maps each new primitive to the old index whose moments it keeps, or -1
// for a fresh start (split children, clones).
void rebuild_optimizer(OptimizerState& opt, const std::vector<int32_t>& parent_of_new) {
    auto rebuild = [&parent_of_new](AdamMoments& mo, size_t comps) {
        std::vector<float> m(parent_of_new.size() * comps, 0.0f);
        std::vector<float> v(parent_of_new.size() * comps, 0.0f);
        for (size_t j = 0; j < parent_of_new.size(); ++j) {
            const int32_t p = parent_of_new[j];
            if (p < 0) continue;
            for (size_t k = 0; k < comps; ++k) {
                m[j * comps + k] = mo.m[p * comps + k];
                v[j * comps + k] = mo.v[p * comps + k];
            }
        }
        mo.m = std::move(m);
        mo.v = std::move(v);
    };
    rebuild(opt.position, 2);
    rebuild(opt.depth, 1);
    rebuild(opt.log_scale, 2);
    rebuild(opt.rotation, 1);
    rebuild(opt.opacity_logit, 1);
    rebuild(opt.color, 3);
}

// Drops primitives whose keep flag is false, compacting the accumulators
// and optimizer rows alongside. Returns the number removed.
int compact(GaussianModel& model, const std::vector<uint8_t>& keep, OptimizerState* opt) {
    const size_t n = model.size();
    std::vector<GaussianPrimitive> prims;
    std::vector<float> sums;
    std::vector<int32_t> counts;
    std::vector<int32_t> parent_of_new;
    prims.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        if (!keep[i]) continue;
        prims.push_back(model.primitives[i]);
        sums.push_back(model.grad_norm_sum[i]);
        counts.push_back(model.grad_obs_count[i]);
        parent_of_new.push_back(static_cast<int32_t>(i));
    }
    const int removed = static_cast<int>(n - prims.size());
    model.primitives = std::move(prims);
    model.grad_norm_sum = std::move(sums);
    model.grad_obs_count = std::move(counts);
    if (opt) rebuild_optimizer(*opt, parent_of_new);
    return removed;
}

// Smallest logit whose sigmoid lands at or above the target opacity, so
// clamping is idempotent under float rounding.
float logit_at_or_above(float target) {
    float l = inverse_sigmoid(target);
    while (sigmoid(l) < target) l = std::nextafter(l, std::numeric_limits<float>::infinity());
    return l;
}

// Sample from the parent's own density: position = mean + L*z with L the
// Cholesky factor of the covariance and z standard normal.
Vec2f sample_from(const GaussianPrimitive& parent, Rng& rng) {
    const SymMat2<float> cov = parent.covariance();
    const float l11 = std::sqrt(std::max(cov.a, 0.0f));
    const float l21 = l11 > 0.0f ? cov.b / l11 : 0.0f;
    const float l22 = std::sqrt(std::max(cov.c - l21 * l21, 0.0f));
    const float z1 = static_cast<float>(rng.normal());
    const float z2 = static_cast<float>(rng.normal());
    return {parent.position.x + l11 * z1, parent.position.y + l21 * z1 + l22 * z2};
}

}  // namespace

void accumulate(GaussianModel& model, const SplatGradients<float>& grads) {
    const size_t n = model.size();
    if (grads.size() != n || model.grad_norm_sum.size() != n ||
        model.grad_obs_count.size() != n) {
        throw NumericError("accumulate: gradient/accumulator size mismatch");
    }
    for (size_t i = 0; i < n; ++i) {
        if (!grads.touched[i]) continue;
        model.grad_norm_sum[i] += grads.position[i].norm();
        model.grad_obs_count[i] += 1;
    }
}

DensifyCounts densify_step(GaussianModel& model, DensifyPhase phase, const TrainConfig& cfg,
                           Rng& rng, OptimizerState* opt) {
    DensifyCounts counts;
    const size_t n = model.size();
    if (n == 0) return counts;
    const float scale_limit = cfg.scale_threshold_fraction * model.scene_extent;
    const float log_shrink = std::log(cfg.split_scale_divisor);

    std::vector<GaussianPrimitive> prims;
    std::vector<int32_t> parent_of_new;
    prims.reserve(n + n / 4);
    parent_of_new.reserve(n + n / 4);
    for (size_t i = 0; i < n; ++i) {
        const GaussianPrimitive& g = model.primitives[i];
        const float avg = model.grad_obs_count[i] > 0
                              ? model.grad_norm_sum[i] / static_cast<float>(model.grad_obs_count[i])
                              : 0.0f;
        if (!(avg > cfg.grad_threshold)) {
            prims.push_back(g);
            parent_of_new.push_back(static_cast<int32_t>(i));
            continue;
        }
        const Vec2f s = g.scale();
        if (std::max(s.x, s.y) > scale_limit) {
            // Split: two children drawn from the parent's density, scales
            // shrunk, ancestry carried forward.
            for (int child = 0; child < 2; ++child) {
                GaussianPrimitive c = g;
                c.position = sample_from(g, rng);
                c.log_scale.x -= log_shrink;
                c.log_scale.y -= log_shrink;
                c.lineage.split_count = g.lineage.split_count + 1;
                prims.push_back(c);
                parent_of_new.push_back(-1);
            }
            counts.splits += 1;
        } else if (phase == DensifyPhase::GlobalSpread) {
            prims.push_back(g);
            parent_of_new.push_back(static_cast<int32_t>(i));
            counts.suppressed_clones += 1;
        } else {
            prims.push_back(g);
            parent_of_new.push_back(static_cast<int32_t>(i));
            GaussianPrimitive c = g;
            c.lineage.clone_count = g.lineage.clone_count + 1;
            prims.push_back(c);
            parent_of_new.push_back(-1);
            counts.clones += 1;
        }
    }
    model.primitives = std::move(prims);
    model.reset_accumulators();
    if (opt) rebuild_optimizer(*opt, parent_of_new);
    return counts;
}

int opacity_reset(GaussianModel& model, OptimizerState* opt) {
    static const float kResetLogit = logit_at_or_above(0.01f);
    const size_t n = model.size();
    std::vector<uint8_t> keep(n, 1);
    for (size_t i = 0; i < n; ++i) {
        if (model.primitives[i].opacity() < 0.01f) keep[i] = 0;
    }
    const int removed = compact(model, keep, opt);
    for (GaussianPrimitive& g : model.primitives) {
        if (g.opacity() > 0.01f) g.opacity_logit = kResetLogit;
    }
    if (opt) {
        // Stale momentum would immediately push opacities back up.
        std::fill(opt->opacity_logit.m.begin(), opt->opacity_logit.m.end(), 0.0f);
        std::fill(opt->opacity_logit.v.begin(), opt->opacity_logit.v.end(), 0.0f);
    }
    return removed;
}

int adaptive_prune(GaussianModel& model, float p, float tau_u, OptimizerState* opt) {
    const size_t n = model.size();
    if (n == 0) return 0;
    if (!(p > 0.0f && p < 1.0f)) throw ConfigError("adaptive_prune: ratio must be in (0,1)");
    std::vector<float> opacities(n);
    for (size_t i = 0; i < n; ++i) opacities[i] = model.primitives[i].opacity();
    // floor(N*p), computed exactly: a float ratio times an integer of this
    // size fits a double without rounding, so the order-statistic index is
    // the true floor for the stored ratio.
    const size_t k = static_cast<size_t>(static_cast<double>(n) * static_cast<double>(p));
    std::vector<float> sorted = opacities;
    std::nth_element(sorted.begin(), sorted.begin() + k, sorted.end());
    const float tau = std::min(sorted[k], tau_u);
    std::vector<uint8_t> keep(n, 1);
    for (size_t i = 0; i < n; ++i) {
        if (opacities[i] < tau) keep[i] = 0;
    }
    return compact(model, keep, opt);
}

int64_t DensifyEventLog::total_splits() const {
    int64_t sum = 0;
    for (const DensifyEvent& e : events) sum += e.splits;
    return sum;
}

int64_t DensifyEventLog::total_clones() const {
    int64_t sum = 0;
    for (const DensifyEvent& e : events) sum += e.clones;
    return sum;
}

std::string DensifyEventLog::to_csv() const {
    std::ostringstream out;
    out << "iteration,splits,clones,suppressed_clones,pruned,total\n";
    for (const DensifyEvent& e : events) {
        out << e.iteration << ',' << e.splits << ',' << e.clones << ',' << e.suppressed_clones
            << ',' << e.pruned << ',' << e.total << '\n';
    }
    return out.str();
}

}  // namespace splat
