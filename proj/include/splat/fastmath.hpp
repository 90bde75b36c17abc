#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

namespace splat {

// exp(x) for x <= ~0.5, accurate to a few float ulp (checked against
// std::exp in tests). The compositing inner loop evaluates exp(-q/2) per
// fragment; libm's expf is several times slower and this path dominates
// training time. Cody-Waite reduction x = n*ln2 + r, degree-7 polynomial
// on |r| <= ln2/2, scale by 2^n through the exponent bits.
inline float fast_expf(float x) {
    if (x < -87.0f) return 0.0f;  // below float range
    const float n_f = std::floor(x * 1.44269504f + 0.5f);
    float r = x - n_f * 0.693359375f;  // ln2 high bits
    r -= n_f * -2.12194440e-4f;        // ln2 low correction
    float p = 1.0f / 5040.0f;
    p = p * r + 1.0f / 720.0f;
    p = p * r + 1.0f / 120.0f;
    p = p * r + 1.0f / 24.0f;
    p = p * r + 1.0f / 6.0f;
    p = p * r + 0.5f;
    p = p * r + 1.0f;
    p = p * r + 1.0f;
    const auto bits = static_cast<uint32_t>(127 + static_cast<int>(n_f)) << 23;
    return std::bit_cast<float>(bits) * p;
}

// Precision dispatch: the double instantiation of the render kernels (used
// by the finite-difference checks) takes the fully-accurate route.
template <class T>
inline T exp_eval(T x) {
    return std::exp(x);
}
template <>
inline float exp_eval<float>(float x) {
    return fast_expf(x);
}

}  // namespace splat
