#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "splat/config.hpp"
#include "splat/errors.hpp"
#include "splat/model.hpp"
#include "splat/optim.hpp"
#include "splat/raster.hpp"
#include "splat/sched.hpp"

using namespace splat;

namespace {

GaussianModel two_prim_model() {
    GaussianModel model;
    model.primitives.resize(2);
    for (size_t i = 0; i < 2; ++i) {
        GaussianPrimitive& g = model.primitives[i];
        g.position = {0.3f + 0.4f * static_cast<float>(i), 0.5f};
        g.depth = 0.25f + 0.5f * static_cast<float>(i);
        g.log_scale = {-2.0f, -2.5f};
        g.rotation = 0.3f;
        g.opacity_logit = 0.1f;
        g.color = {0.5f, 0.5f, 0.5f};
    }
    model.reset_accumulators();
    return model;
}

SplatGradients<float> zero_grads(size_t n) {
    SplatGradients<float> g;
    g.resize(n);
    return g;
}

LearningRates distinct_rates() {
    LearningRates lr;
    lr.position = 0.010f;
    lr.depth = 0.002f;
    lr.log_scale = 0.003f;
    lr.rotation = 0.004f;
    lr.opacity_logit = 0.005f;
    lr.color = 0.006f;
    return lr;
}

// Hand-built two-scale schedule: coarse until 400, full res until 1000.
ResolutionSchedule two_scale_schedule() {
    ResolutionSchedule s;
    s.scales = {1, 2};
    s.energy_ratio = {1.0, 0.4};
    s.mean_energy = {100.0, 40.0};
    s.end_iteration = {1000, 400};
    s.phase_boundary = 400;
    return s;
}

}  // namespace

TEST_CASE("zero gradients leave every parameter bitwise unchanged") {
    GaussianModel model = two_prim_model();
    const GaussianModel before = model;
    OptimizerState opt;
    opt.resize(model.size());
    adam_step(model, zero_grads(model.size()), opt, distinct_rates());

    CHECK(opt.step_count == 1);
    for (size_t i = 0; i < model.size(); ++i) {
        const GaussianPrimitive& a = model.primitives[i];
        const GaussianPrimitive& b = before.primitives[i];
        CHECK(a.position.x == b.position.x);
        CHECK(a.position.y == b.position.y);
        CHECK(a.depth == b.depth);
        CHECK(a.log_scale.x == b.log_scale.x);
        CHECK(a.log_scale.y == b.log_scale.y);
        CHECK(a.rotation == b.rotation);
        CHECK(a.opacity_logit == b.opacity_logit);
        CHECK(a.color.x == b.color.x);
    }
}

TEST_CASE("first step moves each attribute by its own rate") {
    GaussianModel model = two_prim_model();
    const GaussianModel before = model;
    OptimizerState opt;
    opt.resize(model.size());
    SplatGradients<float> grads = zero_grads(model.size());
    for (size_t i = 0; i < model.size(); ++i) {
        grads.position[i] = {1.0f, -1.0f};
        grads.depth[i] = 1.0f;
        grads.log_scale[i] = {1.0f, 1.0f};
        grads.rotation[i] = -1.0f;
        grads.opacity_logit[i] = 1.0f;
        grads.color[i] = {1.0f, -1.0f, 1.0f};
        grads.touched[i] = 1;
    }
    const LearningRates lr = distinct_rates();
    adam_step(model, grads, opt, lr);

    // Bias-corrected first step is lr * g / (|g| + eps): one rate-sized
    // move against the gradient sign for unit gradients.
    for (size_t i = 0; i < model.size(); ++i) {
        const GaussianPrimitive& a = model.primitives[i];
        const GaussianPrimitive& b = before.primitives[i];
        CHECK(a.position.x ==
              doctest::Approx(b.position.x - lr.position).epsilon(1e-5));
        CHECK(a.position.y ==
              doctest::Approx(b.position.y + lr.position).epsilon(1e-5));
        CHECK(a.depth == doctest::Approx(b.depth - lr.depth).epsilon(1e-5));
        CHECK(a.log_scale.x ==
              doctest::Approx(b.log_scale.x - lr.log_scale).epsilon(1e-5));
        CHECK(a.rotation == doctest::Approx(b.rotation + lr.rotation).epsilon(1e-5));
        CHECK(a.opacity_logit ==
              doctest::Approx(b.opacity_logit - lr.opacity_logit).epsilon(1e-5));
        CHECK(a.color.x == doctest::Approx(b.color.x - lr.color).epsilon(1e-5));
        CHECK(a.color.y == doctest::Approx(b.color.y + lr.color).epsilon(1e-5));
    }

    // First-step moments: m = (1-beta1) g, v = (1-beta2) g^2.
    CHECK(opt.position.m[0] == doctest::Approx(0.1f).epsilon(1e-5));
    CHECK(opt.position.m[1] == doctest::Approx(-0.1f).epsilon(1e-5));
    CHECK(opt.position.v[0] == doctest::Approx(0.001f).epsilon(1e-3));
    CHECK(opt.rotation.m[0] == doctest::Approx(-0.1f).epsilon(1e-5));

    adam_step(model, grads, opt, lr);
    CHECK(opt.step_count == 2);
}

TEST_CASE("identical primitives with identical gradients stay identical") {
    GaussianModel model = two_prim_model();
    model.primitives[1] = model.primitives[0];
    OptimizerState opt;
    opt.resize(2);
    SplatGradients<float> grads = zero_grads(2);
    for (size_t i = 0; i < 2; ++i) {
        grads.position[i] = {0.37f, -0.11f};
        grads.log_scale[i] = {0.05f, -0.02f};
        grads.opacity_logit[i] = 0.9f;
        grads.color[i] = {0.2f, -0.3f, 0.15f};
    }
    for (int step = 0; step < 5; ++step) adam_step(model, grads, opt, distinct_rates());
    const GaussianPrimitive& a = model.primitives[0];
    const GaussianPrimitive& b = model.primitives[1];
    CHECK(a.position.x == b.position.x);
    CHECK(a.position.y == b.position.y);
    CHECK(a.log_scale.x == b.log_scale.x);
    CHECK(a.opacity_logit == b.opacity_logit);
    CHECK(a.color.y == b.color.y);
}

TEST_CASE("colors are projected back into the unit cube") {
    GaussianModel model = two_prim_model();
    model.primitives[0].color = {0.02f, 0.98f, 0.5f};
    OptimizerState opt;
    opt.resize(model.size());
    SplatGradients<float> grads = zero_grads(model.size());
    grads.color[0] = {1.0f, -1.0f, 0.0f};  // pushes red below 0, green above 1
    LearningRates lr;
    lr.color = 0.5f;
    adam_step(model, grads, opt, lr);
    CHECK(model.primitives[0].color.x == 0.0f);
    CHECK(model.primitives[0].color.y == 1.0f);
    CHECK(model.primitives[0].color.z == 0.5f);
}

TEST_CASE("optimizer input validation") {
    GaussianModel model = two_prim_model();
    OptimizerState opt;
    opt.resize(model.size());

    SplatGradients<float> wrong = zero_grads(3);
    CHECK_THROWS_AS(adam_step(model, wrong, opt, distinct_rates()), NumericError);

    OptimizerState small;
    small.resize(1);
    CHECK_THROWS_AS(adam_step(model, zero_grads(2), small, distinct_rates()), NumericError);

    SplatGradients<float> nan_grads = zero_grads(2);
    nan_grads.rotation[1] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(adam_step(model, nan_grads, opt, distinct_rates()), NumericError);

    // A parameter driven out of float range is caught immediately.
    GaussianModel blown = two_prim_model();
    OptimizerState opt2;
    opt2.resize(blown.size());
    SplatGradients<float> ones = zero_grads(blown.size());
    for (size_t i = 0; i < blown.size(); ++i) ones.depth[i] = 1.0f;
    LearningRates huge;
    huge.depth = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(adam_step(blown, ones, opt2, huge), NumericError);
}

TEST_CASE("positional rate holds during coarse scales then decays log-linearly") {
    TrainConfig cfg;
    cfg.total_iterations = 1000;
    cfg.lr_position_init = 1.6e-4f;
    cfg.lr_position_final = 1.6e-6f;
    const ResolutionSchedule sched = two_scale_schedule();

    CHECK(positional_lr(0, sched, cfg) == cfg.lr_position_init);
    CHECK(positional_lr(399, sched, cfg) == cfg.lr_position_init);
    // First full-resolution iteration still gets the full initial rate.
    CHECK(positional_lr(400, sched, cfg) == doctest::Approx(cfg.lr_position_init));
    // Log-linear decay: halfway through the remaining span lands on the
    // geometric mean of the endpoints.
    CHECK(positional_lr(700, sched, cfg) == doctest::Approx(1.6e-5f).epsilon(1e-5));
    CHECK(positional_lr(1000, sched, cfg) ==
          doctest::Approx(cfg.lr_position_final).epsilon(1e-5));

    float prev = std::numeric_limits<float>::infinity();
    for (int it = 0; it <= 1000; it += 10) {
        const float lr = positional_lr(it, sched, cfg);
        CHECK(lr <= prev);
        prev = lr;
    }

    // Without a coarse phase the decay spans the whole run.
    const ResolutionSchedule flat = single_resolution_schedule();
    CHECK(positional_lr(0, flat, cfg) == doctest::Approx(cfg.lr_position_init));
    CHECK(positional_lr(500, flat, cfg) == doctest::Approx(1.6e-5f).epsilon(1e-5));
    CHECK(positional_lr(1000, flat, cfg) ==
          doctest::Approx(cfg.lr_position_final).epsilon(1e-5));
}
