#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "splat/image.hpp"
#include "splat/model.hpp"
#include "splat/primitive.hpp"

namespace splat {

// Tile edge in pixels for the bucketed traversal.
inline constexpr int kTileSize = 16;

// Primitives contribute inside a 3-standard-deviation ellipse:
// d^T Sigma^{-1} d <= 9.
inline constexpr double kMaxFootprintQ = 9.0;

// Compositing for a pixel stops once transmittance drops below this.
inline constexpr double kTransmittanceFloor = 1e-4;

// One composited contribution at a pixel. `slot` indexes the owning
// tile's prim_ids list (depth order); `transmittance` is the value
// *before* this contribution was blended.
template <class T>
struct Fragment {
    uint32_t slot;
    T sigma;
    T transmittance;
};

// Per-tile render record: the depth-sorted overlap list plus a CSR layout
// of fragments over the tile's pixels (row-major within the tile).
template <class T>
struct TileFragments {
    std::vector<int32_t> prim_ids;
    std::vector<uint32_t> offsets;  // size = tile pixel count + 1
    std::vector<Fragment<T>> fragments;
};

template <class T>
struct RenderOutputT {
    ImageT<T> image;          // H x W x 3 composited color
    ImageT<T> transmittance;  // H x W x 1 final transmittance per pixel
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<TileFragments<T>> tiles;  // row-major tile grid

    // Fragment range for a global pixel (test/diagnostic access).
    struct PixelFragments {
        const TileFragments<T>* tile;
        const Fragment<T>* begin;
        const Fragment<T>* end;
    };
    PixelFragments pixel_fragments(int x, int y) const {
        const int tx = x / kTileSize;
        const int ty = y / kTileSize;
        const TileFragments<T>& t = tiles[static_cast<size_t>(ty) * tiles_x + tx];
        const int tile_w = std::min(kTileSize, image.width - tx * kTileSize);
        const int local = (y - ty * kTileSize) * tile_w + (x - tx * kTileSize);
        return {&t, t.fragments.data() + t.offsets[local],
                t.fragments.data() + t.offsets[local + 1]};
    }
};

using RenderOutput = RenderOutputT<float>;

// Structure-of-arrays gradient block returned by the backward pass. The
// depth array stays zero: compositing order is not differentiated.
template <class T>
struct SplatGradients {
    std::vector<Vec2<T>> position;
    std::vector<T> depth;
    std::vector<Vec2<T>> log_scale;
    std::vector<T> rotation;
    std::vector<T> opacity_logit;
    std::vector<Vec3<T>> color;
    std::vector<uint8_t> touched;  // produced at least one fragment

    void resize(size_t n) {
        position.assign(n, Vec2<T>{});
        depth.assign(n, T(0));
        log_scale.assign(n, Vec2<T>{});
        rotation.assign(n, T(0));
        opacity_logit.assign(n, T(0));
        color.assign(n, Vec3<T>{});
        touched.assign(n, 0);
    }
    size_t size() const { return position.size(); }
};

// Front-to-back alpha compositing of depth-sorted anisotropic Gaussians
// over a black background. Throws NumericError on non-finite parameters.
template <class T>
RenderOutputT<T> rasterize(const std::vector<Splat<T>>& prims, int width, int height,
                           int num_threads = 1);
RenderOutput rasterize(const GaussianModel& model, int width, int height,
                       int num_threads = 1);

// Analytic adjoint of rasterize. `render` must come from the same
// primitive set at the same resolution; throws NumericError on a shape
// mismatch. Gradients of primitives that contributed nowhere are zero.
template <class T>
SplatGradients<T> rasterize_backward(const std::vector<Splat<T>>& prims,
                                     const RenderOutputT<T>& render,
                                     const ImageT<T>& grad_image, int num_threads = 1);
SplatGradients<float> rasterize_backward(const GaussianModel& model,
                                         const RenderOutput& render,
                                         const Image& grad_image, int num_threads = 1);

}  // namespace splat
