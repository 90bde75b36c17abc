#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "oracles.hpp"
#include "splat/errors.hpp"
#include "splat/raster.hpp"
#include "splat/sched.hpp"

using namespace splat;
namespace st = splat::testing;

namespace {

// A primitive whose activated opacity is exactly 1 (the logit saturates the
// float sigmoid), centered on the middle of an odd-sized canvas.
Splat<float> opaque_center_prim(Vec3f color, float depth) {
    Splat<float> g;
    g.position = {0.5f, 0.5f};
    g.depth = depth;
    g.log_scale = {std::log(0.25f), std::log(0.25f)};
    g.rotation = 0.0f;
    g.opacity_logit = 40.0f;
    g.color = color;
    return g;
}

}  // namespace

TEST_CASE("empty scene renders black with full transmittance") {
    const RenderOutput out = rasterize(std::vector<Splat<float>>{}, 9, 7);
    for (float v : out.image.data) CHECK(v == 0.0f);
    for (float v : out.transmittance.data) CHECK(v == 1.0f);
}

TEST_CASE("a saturated primitive at a pixel center reproduces its color exactly") {
    // 9x9 canvas: pixel (4,4) has center (0.5, 0.5), the primitive's mean,
    // where the density is exactly 1 and sigma = alpha = 1.
    const Splat<float> g = opaque_center_prim({0.2f, 0.7f, 0.4f}, 0.5f);
    const RenderOutput out = rasterize<float>({g}, 9, 9);
    CHECK(out.image.at(4, 4, 0) == 0.2f);
    CHECK(out.image.at(4, 4, 1) == 0.7f);
    CHECK(out.image.at(4, 4, 2) == 0.4f);
    CHECK(out.transmittance.at(4, 4, 0) == 0.0f);
}

TEST_CASE("half-opaque front over opaque back blends 50/50 exactly") {
    Splat<float> front = opaque_center_prim({1.0f, 0.0f, 0.0f}, 0.1f);
    front.opacity_logit = 0.0f;  // sigmoid(0) = 0.5 exactly
    const Splat<float> back = opaque_center_prim({0.0f, 0.0f, 1.0f}, 0.9f);
    const RenderOutput out = rasterize<float>({front, back}, 9, 9);
    CHECK(out.image.at(4, 4, 0) == 0.5f);
    CHECK(out.image.at(4, 4, 1) == 0.0f);
    CHECK(out.image.at(4, 4, 2) == 0.5f);
    // Storage order must not matter: depth sorts them.
    const RenderOutput swapped = rasterize<float>({back, front}, 9, 9);
    CHECK(swapped.image.data == out.image.data);
}

TEST_CASE("tiled renderer matches the naive per-pixel reference bitwise") {
    Rng rng(2024);
    for (int s = 0; s < 50; ++s) {
        const std::vector<Splat<float>> prims = st::random_float_scene(rng);
        const int w = 17 + static_cast<int>(rng.uniform_int(40));
        const int h = 17 + static_cast<int>(rng.uniform_int(40));
        const RenderOutput out = rasterize(prims, w, h);
        Image ref_trans;
        const Image ref = st::reference_render(prims, w, h, &ref_trans);
        REQUIRE(out.image.data == ref.data);
        REQUIRE(out.transmittance.data == ref_trans.data);
    }
}

TEST_CASE("multithreaded render is bitwise identical to single-threaded") {
    Rng rng(55);
    const std::vector<Splat<float>> prims = st::random_float_scene(rng, 40);
    const RenderOutput one = rasterize(prims, 101, 67, 1);
    const RenderOutput four = rasterize(prims, 101, 67, 4);
    CHECK(one.image.data == four.image.data);
    CHECK(one.transmittance.data == four.transmittance.data);
    const Image grad(101, 67, 3);  // zeros: gradients must still merge identically
    Image grad2 = grad;
    for (size_t i = 0; i < grad2.data.size(); ++i) grad2.data[i] = 0.001f * (i % 13) - 0.006f;
    const SplatGradients<float> g1 = rasterize_backward(prims, one, grad2, 1);
    const SplatGradients<float> g4 = rasterize_backward(prims, four, grad2, 4);
    CHECK(g1.position == g4.position);
    CHECK(g1.log_scale == g4.log_scale);
    CHECK(g1.rotation == g4.rotation);
    CHECK(g1.opacity_logit == g4.opacity_logit);
    CHECK(g1.color == g4.color);
}

TEST_CASE("per-fragment records stay within physical ranges") {
    Rng rng(99);
    for (int s = 0; s < 20; ++s) {
        const std::vector<Splat<float>> prims = st::random_float_scene(rng);
        const RenderOutput out = rasterize(prims, 33, 29);
        for (int y = 0; y < 29; ++y) {
            for (int x = 0; x < 33; ++x) {
                const auto frags = out.pixel_fragments(x, y);
                double weight = 0.0;
                for (const Fragment<float>* f = frags.begin; f != frags.end; ++f) {
                    CHECK(f->sigma > 0.0f);
                    CHECK(f->sigma < 1.0f);
                    CHECK(f->transmittance >= 0.0f);
                    CHECK(f->transmittance <= 1.0f);
                    weight += static_cast<double>(f->sigma) * f->transmittance;
                }
                const double final_t = out.transmittance.at(x, y, 0);
                CHECK(final_t >= 0.0);
                CHECK(final_t <= 1.0);
                // The fragment weights telescope to 1 - final transmittance.
                CHECK(weight == doctest::Approx(1.0 - final_t).epsilon(1e-4));
            }
        }
    }
}

TEST_CASE("rendering at a coarser scale approximates the downscaled full render") {
    Rng rng(31);
    const std::vector<Splat<float>> prims = st::random_float_scene(rng, 25);
    const RenderOutput full = rasterize(prims, 64, 64);
    for (int r : {2, 4}) {
        const RenderOutput coarse = rasterize(prims, 64 / r, 64 / r);
        const Image reduced = downscale(full.image, r);
        REQUIRE(reduced.width == coarse.image.width);
        REQUIRE(reduced.height == coarse.image.height);
        double l1 = 0.0;
        for (size_t i = 0; i < reduced.data.size(); ++i) {
            l1 += std::abs(static_cast<double>(reduced.data[i]) - coarse.image.data[i]);
        }
        l1 /= static_cast<double>(reduced.data.size());
        CHECK(l1 < 0.02);
    }
}

TEST_CASE("rasterize rejects bad dimensions and non-finite parameters") {
    CHECK_THROWS_AS(rasterize(std::vector<Splat<float>>{}, 0, 8), ConfigError);
    Splat<float> g = opaque_center_prim({1, 1, 1}, 0.5f);
    g.position.x = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(rasterize<float>({g}, 8, 8), NumericError);
}

TEST_CASE("backward rejects mismatched gradient shapes") {
    const Splat<float> g = opaque_center_prim({1, 0, 0}, 0.5f);
    const RenderOutput out = rasterize<float>({g}, 9, 9);
    const Image wrong(8, 9, 3);
    CHECK_THROWS_AS(rasterize_backward({g}, out, wrong), NumericError);
}

TEST_CASE("color gradient equals the accumulated per-pixel weight") {
    Rng rng(7);
    for (int s = 0; s < 10; ++s) {
        std::vector<Splat<float>> prims = {st::random_float_scene(rng, 1)[0]};
        const RenderOutput out = rasterize(prims, 21, 21);
        Image grad(21, 21, 3);
        for (int y = 0; y < 21; ++y)
            for (int x = 0; x < 21; ++x) grad.at(x, y, 0) = 1.0f;
        const SplatGradients<float> g = rasterize_backward(prims, out, grad);
        double weight = 0.0;
        for (int y = 0; y < 21; ++y) {
            for (int x = 0; x < 21; ++x) {
                const auto frags = out.pixel_fragments(x, y);
                for (const Fragment<float>* f = frags.begin; f != frags.end; ++f) {
                    weight += static_cast<double>(f->sigma) * f->transmittance;
                }
            }
        }
        CHECK(g.color[0].x == doctest::Approx(weight).epsilon(1e-4));
        CHECK(g.color[0].y == 0.0f);
        CHECK(g.color[0].z == 0.0f);
        // Depth ordering is not differentiated.
        CHECK(g.depth[0] == 0.0f);
    }
}

TEST_CASE("untouched primitives report zero gradients and no touch flag") {
    Splat<float> visible = opaque_center_prim({1, 0, 0}, 0.2f);
    Splat<float> offscreen = visible;
    offscreen.position = {5.0f, 5.0f};
    offscreen.depth = 0.7f;
    const std::vector<Splat<float>> prims = {visible, offscreen};
    const RenderOutput out = rasterize(prims, 9, 9);
    Image grad(9, 9, 3);
    for (float& v : grad.data) v = 0.5f;
    const SplatGradients<float> g = rasterize_backward(prims, out, grad);
    CHECK(g.touched[0] == 1);
    CHECK(g.touched[1] == 0);
    CHECK(g.position[1] == Vec2f{});
    CHECK(g.color[1] == Vec3f{});
}

TEST_CASE("analytic gradients match central finite differences (spot check)") {
    Rng rng(404);
    for (int s = 0; s < 8; ++s) {
        const st::FdScene scene = st::random_fd_scene(rng);
        const st::FdReport rep = st::fd_gradcheck(scene);
        CHECK(rep.max_rel <= 1e-3);
        CHECK(rep.checked == static_cast<int>(scene.prims.size()) * 10);
    }
}

TEST_CASE("saturated-opacity fragments keep the backward pass finite") {
    // sigma == 1 makes (1 - sigma) == 0; the suffix weight S is exactly zero
    // there, and the gradient must come out finite.
    const Splat<float> front = opaque_center_prim({0.9f, 0.1f, 0.3f}, 0.1f);
    const Splat<float> back = opaque_center_prim({0.2f, 0.8f, 0.5f}, 0.9f);
    const std::vector<Splat<float>> prims = {front, back};
    const RenderOutput out = rasterize(prims, 9, 9);
    Image grad(9, 9, 3);
    for (float& v : grad.data) v = 0.25f;
    const SplatGradients<float> g = rasterize_backward(prims, out, grad);
    for (size_t i = 0; i < prims.size(); ++i) {
        CHECK(std::isfinite(g.position[i].x));
        CHECK(std::isfinite(g.position[i].y));
        CHECK(std::isfinite(g.opacity_logit[i]));
        CHECK(std::isfinite(g.log_scale[i].x));
        CHECK(std::isfinite(g.rotation[i]));
    }
}
