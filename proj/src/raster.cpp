#include "splat/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "splat/errors.hpp"
#include "splat/fastmath.hpp"
#include "splat/parallel.hpp"

namespace splat {
namespace {

// Per-primitive quantities fixed for one render: inverse covariance,
// activated opacity, the conservative pixel bounds of the 3-sigma
// ellipse, and the factors the backward chain rule reuses.
template <class T>
struct ScenePrim {
    Vec2<T> pos;
    T inv_a, inv_b, inv_c;
    T alpha;
    Vec3<T> color;
    T depth;
    int x0, y0, x1, y1;  // inclusive pixel bounds; x0 > x1 when culled
    T ct, st, var_x, var_y;
};

template <class T>
bool all_finite(const Splat<T>& g) {
    return std::isfinite(g.position.x) && std::isfinite(g.position.y) &&
           std::isfinite(g.depth) && std::isfinite(g.log_scale.x) &&
           std::isfinite(g.log_scale.y) && std::isfinite(g.rotation) &&
           std::isfinite(g.opacity_logit) && std::isfinite(g.color.x) &&
           std::isfinite(g.color.y) && std::isfinite(g.color.z);
}

template <class T, class S>
std::vector<ScenePrim<T>> build_scene(const std::vector<S>& prims, int width, int height) {
    std::vector<ScenePrim<T>> scene(prims.size());
    for (size_t i = 0; i < prims.size(); ++i) {
        const Splat<T>& g = prims[i];
        if (!all_finite(g)) throw NumericError("rasterize: non-finite primitive parameters");
        ScenePrim<T>& p = scene[i];
        p.pos = g.position;
        p.depth = g.depth;
        p.alpha = g.opacity();
        p.color = g.color;
        const T sx = std::exp(g.log_scale.x);
        const T sy = std::exp(g.log_scale.y);
        p.var_x = sx * sx;
        p.var_y = sy * sy;
        p.ct = std::cos(g.rotation);
        p.st = std::sin(g.rotation);
        const T a = p.ct * p.ct * p.var_x + p.st * p.st * p.var_y;
        const T b = p.ct * p.st * (p.var_x - p.var_y);
        const T c = p.st * p.st * p.var_x + p.ct * p.ct * p.var_y;
        const T det = a * c - b * b;
        p.x0 = p.y0 = 0;
        p.x1 = p.y1 = -1;  // culled until proven visible
        if (!(det > T(0)) || !std::isfinite(det) || p.alpha <= T(0)) continue;
        const T inv_det = T(1) / det;
        p.inv_a = c * inv_det;
        p.inv_b = -b * inv_det;
        p.inv_c = a * inv_det;
        if (!std::isfinite(p.inv_a + p.inv_b + p.inv_c)) {
            p.x1 = p.y1 = -1;
            continue;
        }
        // The q <= 9 test inside the loop is what actually bounds the
        // contribution; the bounds only need to contain the q <= 9 set as
        // evaluated in T, so a few ulps of headroom over the exact
        // 3-sigma extent covers every rounding in the chain.
        const T ext_pad = T(1) + T(8) * std::numeric_limits<T>::epsilon();
        const T ext_x = T(3) * std::sqrt(a) * ext_pad;
        const T ext_y = T(3) * std::sqrt(c) * ext_pad;
        const T w = static_cast<T>(width);
        const T h = static_cast<T>(height);
        const int x0 = static_cast<int>(std::floor((p.pos.x - ext_x) * w - T(0.5)));
        const int x1 = static_cast<int>(std::ceil((p.pos.x + ext_x) * w - T(0.5)));
        const int y0 = static_cast<int>(std::floor((p.pos.y - ext_y) * h - T(0.5)));
        const int y1 = static_cast<int>(std::ceil((p.pos.y + ext_y) * h - T(0.5)));
        if (x1 < 0 || y1 < 0 || x0 >= width || y0 >= height) continue;
        p.x0 = std::max(x0, 0);
        p.y0 = std::max(y0, 0);
        p.x1 = std::min(x1, width - 1);
        p.y1 = std::min(y1, height - 1);
    }
    return scene;
}

template <class T>
void bin_and_sort(const std::vector<ScenePrim<T>>& scene, RenderOutputT<T>& out) {
    for (size_t i = 0; i < scene.size(); ++i) {
        const ScenePrim<T>& p = scene[i];
        if (p.x1 < p.x0 || p.y1 < p.y0) continue;
        const int tx0 = p.x0 / kTileSize;
        const int tx1 = p.x1 / kTileSize;
        const int ty0 = p.y0 / kTileSize;
        const int ty1 = p.y1 / kTileSize;
        for (int ty = ty0; ty <= ty1; ++ty) {
            for (int tx = tx0; tx <= tx1; ++tx) {
                out.tiles[static_cast<size_t>(ty) * out.tiles_x + tx].prim_ids.push_back(
                    static_cast<int32_t>(i));
            }
        }
    }
    // Depth sort per tile, ties broken by primitive index so the order is
    // a deterministic function of the scene alone.
    for (auto& tile : out.tiles) {
        std::sort(tile.prim_ids.begin(), tile.prim_ids.end(), [&scene](int32_t l, int32_t r) {
            if (scene[l].depth != scene[r].depth) return scene[l].depth < scene[r].depth;
            return l < r;
        });
    }
}

// Depth-ordered per-tile copies of the primitive fields the pixel loop
// reads. Most walk steps fail the bounds test, so the bounds live in their
// own small lane that streams through L1; the payload is only touched by
// fragments that actually land.
struct TileBounds {
    int x0, x1, y0, y1;
};

template <class T>
struct TilePayload {
    T px, py, inv_a, inv_b, inv_c, alpha;
    Vec3<T> color;
};

template <class T>
void forward_tile(const std::vector<ScenePrim<T>>& scene, RenderOutputT<T>& out, int tile_index) {
    TileFragments<T>& tf = out.tiles[tile_index];
    const int width = out.image.width;
    const int height = out.image.height;
    const int tx = tile_index % out.tiles_x;
    const int ty = tile_index / out.tiles_x;
    const int px0 = tx * kTileSize;
    const int py0 = ty * kTileSize;
    const int tw = std::min(kTileSize, width - px0);
    const int th = std::min(kTileSize, height - py0);
    tf.offsets.assign(static_cast<size_t>(tw) * th + 1, 0);
    tf.fragments.clear();
    const size_t n_ids = tf.prim_ids.size();
    std::vector<TileBounds> bounds(n_ids);
    std::vector<TilePayload<T>> pay(n_ids);
    for (size_t s = 0; s < n_ids; ++s) {
        const ScenePrim<T>& p = scene[tf.prim_ids[s]];
        bounds[s] = {p.x0, p.x1, p.y0, p.y1};
        pay[s] = {p.pos.x, p.pos.y, p.inv_a, p.inv_b, p.inv_c, p.alpha, p.color};
    }
    const T inv_w = T(1) / static_cast<T>(width);
    const T inv_h = T(1) / static_cast<T>(height);
    for (int ly = 0; ly < th; ++ly) {
        const int py = py0 + ly;
        const T cy = (static_cast<T>(py) + T(0.5)) * inv_h;
        for (int lx = 0; lx < tw; ++lx) {
            const int px = px0 + lx;
            const T cx = (static_cast<T>(px) + T(0.5)) * inv_w;
            T trans = T(1);
            T cr = T(0), cg = T(0), cb = T(0);
            for (size_t s = 0; s < n_ids; ++s) {
                const TileBounds& b = bounds[s];
                if (px < b.x0 || px > b.x1 || py < b.y0 || py > b.y1) continue;
                const TilePayload<T>& p = pay[s];
                const T dx = cx - p.px;
                const T dy = cy - p.py;
                const T q = p.inv_a * dx * dx + T(2) * p.inv_b * dx * dy + p.inv_c * dy * dy;
                if (!(q <= T(kMaxFootprintQ))) continue;
                const T sigma = p.alpha * exp_eval(q * T(-0.5));
                if (!(sigma > T(0))) continue;
                tf.fragments.push_back({static_cast<uint32_t>(s), sigma, trans});
                const T w = sigma * trans;
                cr += p.color.x * w;
                cg += p.color.y * w;
                cb += p.color.z * w;
                trans *= T(1) - sigma;
                if (trans < T(kTransmittanceFloor)) break;
            }
            out.image.at(px, py, 0) = cr;
            out.image.at(px, py, 1) = cg;
            out.image.at(px, py, 2) = cb;
            out.transmittance.at(px, py, 0) = trans;
            tf.offsets[static_cast<size_t>(ly) * tw + lx + 1] =
                static_cast<uint32_t>(tf.fragments.size());
        }
    }
}

template <class T>
RenderOutputT<T> rasterize_scene(const std::vector<ScenePrim<T>>& scene, int width, int height,
                                 int num_threads) {
    if (width < 1 || height < 1) throw ConfigError("rasterize: image dimensions must be >= 1");
    RenderOutputT<T> out;
    out.image = ImageT<T>(width, height, 3);
    out.transmittance = ImageT<T>(width, height, 1);
    out.tiles_x = (width + kTileSize - 1) / kTileSize;
    out.tiles_y = (height + kTileSize - 1) / kTileSize;
    out.tiles.resize(static_cast<size_t>(out.tiles_x) * out.tiles_y);
    bin_and_sort(scene, out);
    parallel_for(0, out.tiles_x * out.tiles_y, num_threads, [&](int lo, int hi) {
        for (int t = lo; t < hi; ++t) forward_tile(scene, out, t);
    });
    return out;
}

// Per-tile gradient scratch, slot-major. Nine components per slot:
// pos.x, pos.y, log_scale.x, log_scale.y, rotation, opacity_logit, rgb.
inline constexpr int kGradComps = 9;

template <class T>
void backward_tile(const std::vector<ScenePrim<T>>& scene, const RenderOutputT<T>& render,
                   const ImageT<T>& grad_image, int tile_index, std::vector<T>& local,
                   std::vector<uint8_t>& touched) {
    const TileFragments<T>& tf = render.tiles[tile_index];
    local.assign(tf.prim_ids.size() * kGradComps, T(0));
    touched.assign(tf.prim_ids.size(), 0);
    if (tf.fragments.empty()) return;
    const int width = render.image.width;
    const int height = render.image.height;
    const int tx = tile_index % render.tiles_x;
    const int ty = tile_index / render.tiles_x;
    const int px0 = tx * kTileSize;
    const int py0 = ty * kTileSize;
    const int tw = std::min(kTileSize, width - px0);
    const int th = std::min(kTileSize, height - py0);
    const T inv_w = T(1) / static_cast<T>(width);
    const T inv_h = T(1) / static_cast<T>(height);
    for (int ly = 0; ly < th; ++ly) {
        const int py = py0 + ly;
        const T cy = (static_cast<T>(py) + T(0.5)) * inv_h;
        for (int lx = 0; lx < tw; ++lx) {
            const int px = px0 + lx;
            const size_t lp = static_cast<size_t>(ly) * tw + lx;
            const uint32_t fbegin = tf.offsets[lp];
            const uint32_t fend = tf.offsets[lp + 1];
            if (fbegin == fend) continue;
            const T g0 = grad_image.at(px, py, 0);
            const T g1 = grad_image.at(px, py, 1);
            const T g2 = grad_image.at(px, py, 2);
            if (g0 == T(0) && g1 == T(0) && g2 == T(0)) {
                for (uint32_t fi = fbegin; fi < fend; ++fi) {
                    touched[tf.fragments[fi].slot] = 1;
                }
                continue;
            }
            const T cx = (static_cast<T>(px) + T(0.5)) * inv_w;
            // Back-to-front: S carries the loss-weighted contribution of
            // everything behind the current fragment, which is exactly
            // what compositing removes when sigma grows.
            T S = T(0);
            for (uint32_t fi = fend; fi-- > fbegin;) {
                const Fragment<T>& f = tf.fragments[fi];
                const ScenePrim<T>& p = scene[tf.prim_ids[f.slot]];
                touched[f.slot] = 1;
                T* L = local.data() + static_cast<size_t>(f.slot) * kGradComps;
                const T gc = g0 * p.color.x + g1 * p.color.y + g2 * p.color.z;
                const T w = f.sigma * f.transmittance;
                L[6] += g0 * w;
                L[7] += g1 * w;
                L[8] += g2 * w;
                // S == 0 exactly whenever sigma saturated (nothing behind
                // was composited), so the division is always safe.
                const T dL_dsigma =
                    gc * f.transmittance - (S != T(0) ? S / (T(1) - f.sigma) : T(0));
                L[5] += dL_dsigma * f.sigma * (T(1) - p.alpha);
                const T dL_dq = dL_dsigma * f.sigma * T(-0.5);
                const T dx = cx - p.pos.x;
                const T dy = cy - p.pos.y;
                const T mdx = p.inv_a * dx + p.inv_b * dy;
                const T mdy = p.inv_b * dx + p.inv_c * dy;
                L[0] += dL_dq * T(-2) * mdx;
                L[1] += dL_dq * T(-2) * mdy;
                // dL/dSigma = dL_dq * -(Sigma^{-1} d)(Sigma^{-1} d)^T,
                // contracted against dSigma/dparam for each of log_scale
                // and rotation.
                const T a11 = -dL_dq * mdx * mdx;
                const T a12 = -dL_dq * mdx * mdy;
                const T a22 = -dL_dq * mdy * mdy;
                L[2] += T(2) * p.var_x *
                        (a11 * p.ct * p.ct + T(2) * a12 * p.ct * p.st + a22 * p.st * p.st);
                L[3] += T(2) * p.var_y *
                        (a11 * p.st * p.st - T(2) * a12 * p.ct * p.st + a22 * p.ct * p.ct);
                const T b_cov = p.ct * p.st * (p.var_x - p.var_y);
                const T db_dtheta = (p.ct * p.ct - p.st * p.st) * (p.var_x - p.var_y);
                L[4] += a11 * T(-2) * b_cov + T(2) * a12 * db_dtheta + a22 * T(2) * b_cov;
                S += gc * w;
            }
        }
    }
}

template <class T>
SplatGradients<T> rasterize_backward_scene(const std::vector<ScenePrim<T>>& scene,
                                           const RenderOutputT<T>& render,
                                           const ImageT<T>& grad_image, int num_threads) {
    if (!grad_image.same_shape(render.image) || grad_image.channels != 3) {
        throw NumericError("rasterize_backward: gradient shape mismatch");
    }
    const int n_tiles = render.tiles_x * render.tiles_y;
    if (static_cast<size_t>(n_tiles) != render.tiles.size()) {
        throw NumericError("rasterize_backward: corrupt render output");
    }
    for (const TileFragments<T>& tf : render.tiles) {
        for (int32_t id : tf.prim_ids) {
            if (id < 0 || static_cast<size_t>(id) >= scene.size()) {
                throw NumericError("rasterize_backward: render does not match the primitive set");
            }
        }
    }
    SplatGradients<T> grads;
    grads.resize(scene.size());
    std::vector<std::vector<T>> tile_grads(n_tiles);
    std::vector<std::vector<uint8_t>> tile_touched(n_tiles);
    parallel_for(0, n_tiles, num_threads, [&](int lo, int hi) {
        for (int t = lo; t < hi; ++t) {
            backward_tile(scene, render, grad_image, t, tile_grads[t], tile_touched[t]);
        }
    });
    // Serial merge in tile order: the reduction order is fixed, so the
    // result is bitwise independent of the thread count.
    for (int t = 0; t < n_tiles; ++t) {
        const TileFragments<T>& tf = render.tiles[t];
        const std::vector<T>& local = tile_grads[t];
        for (size_t s = 0; s < tf.prim_ids.size(); ++s) {
            if (!tile_touched[t][s]) continue;
            const int32_t i = tf.prim_ids[s];
            const T* L = local.data() + s * kGradComps;
            grads.position[i].x += L[0];
            grads.position[i].y += L[1];
            grads.log_scale[i].x += L[2];
            grads.log_scale[i].y += L[3];
            grads.rotation[i] += L[4];
            grads.opacity_logit[i] += L[5];
            grads.color[i].x += L[6];
            grads.color[i].y += L[7];
            grads.color[i].z += L[8];
            grads.touched[i] = 1;
        }
    }
    return grads;
}

}  // namespace

template <class T>
RenderOutputT<T> rasterize(const std::vector<Splat<T>>& prims, int width, int height,
                           int num_threads) {
    return rasterize_scene(build_scene<T>(prims, width, height), width, height, num_threads);
}

RenderOutput rasterize(const GaussianModel& model, int width, int height, int num_threads) {
    return rasterize_scene(build_scene<float>(model.primitives, width, height), width, height,
                           num_threads);
}

template <class T>
SplatGradients<T> rasterize_backward(const std::vector<Splat<T>>& prims,
                                     const RenderOutputT<T>& render, const ImageT<T>& grad_image,
                                     int num_threads) {
    return rasterize_backward_scene(build_scene<T>(prims, render.image.width, render.image.height),
                                    render, grad_image, num_threads);
}

SplatGradients<float> rasterize_backward(const GaussianModel& model, const RenderOutput& render,
                                         const Image& grad_image, int num_threads) {
    return rasterize_backward_scene(
        build_scene<float>(model.primitives, render.image.width, render.image.height), render,
        grad_image, num_threads);
}

template RenderOutputT<float> rasterize(const std::vector<Splat<float>>&, int, int, int);
template RenderOutputT<double> rasterize(const std::vector<Splat<double>>&, int, int, int);
template SplatGradients<float> rasterize_backward(const std::vector<Splat<float>>&,
                                                  const RenderOutputT<float>&,
                                                  const ImageT<float>&, int);
template SplatGradients<double> rasterize_backward(const std::vector<Splat<double>>&,
                                                   const RenderOutputT<double>&,
                                                   const ImageT<double>&, int);

}  // namespace splat
