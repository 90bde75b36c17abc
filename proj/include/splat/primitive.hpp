#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "splat/vec.hpp"

namespace splat {

// Symmetric 2x2 matrix [[a, b], [b, c]].
template <class T>
struct SymMat2 {
    T a = T(0);
    T b = T(0);
    T c = T(0);

    T det() const { return a * c - b * b; }

    SymMat2 inverse() const {
        const T d = det();
        const T inv = T(1) / d;
        return SymMat2{c * inv, -b * inv, a * inv};
    }

    Vec2<T> mul(const Vec2<T>& v) const {
        return Vec2<T>{a * v.x + b * v.y, b * v.x + c * v.y};
    }
};

// Covariance from rotation angle and per-axis standard deviations:
// Sigma = R(theta) * diag(sx^2, sy^2) * R(theta)^T.
template <class T>
SymMat2<T> covariance_from(T theta, T sx, T sy) {
    const T ct = std::cos(theta);
    const T st = std::sin(theta);
    const T vx = sx * sx;
    const T vy = sy * sy;
    return SymMat2<T>{
        ct * ct * vx + st * st * vy,
        ct * st * (vx - vy),
        st * st * vx + ct * ct * vy,
    };
}

// One anisotropic 2D Gaussian. Positions live in a normalized [0,1]^2
// canvas; depth only orders compositing. Scales are stored in log space
// and opacity as a logit so gradient steps stay unconstrained.
template <class T>
struct Splat {
    Vec2<T> position;
    T depth = T(0);
    Vec2<T> log_scale;
    T rotation = T(0);
    T opacity_logit = T(0);
    Vec3<T> color;

    Vec2<T> scale() const { return {std::exp(log_scale.x), std::exp(log_scale.y)}; }
    T opacity() const { return sigmoid(opacity_logit); }
    SymMat2<T> covariance() const {
        const Vec2<T> s = scale();
        return covariance_from(rotation, s.x, s.y);
    }
};

// Densification history carried by each primitive: where its ancestral
// chain started and how many splits/clones led to it.
struct LineageRecord {
    Vec2f origin_position;
    int32_t split_count = 0;
    int32_t clone_count = 0;
};

struct GaussianPrimitive : Splat<float> {
    LineageRecord lineage;
};

// Primitives with equal split and clone counts (including untouched ones,
// 0 == 0) fall in the Equal bucket.
enum class LineageCategory { SplitDominant, CloneDominant, Equal };

inline LineageCategory classify_lineage(const LineageRecord& lin) {
    if (lin.split_count > lin.clone_count) return LineageCategory::SplitDominant;
    if (lin.clone_count > lin.split_count) return LineageCategory::CloneDominant;
    return LineageCategory::Equal;
}

// Distance from a primitive's current position to the origin of its chain.
inline float lineage_displacement(const GaussianPrimitive& g) {
    return (g.position - g.lineage.origin_position).norm();
}

}  // namespace splat
