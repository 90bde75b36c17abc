#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace splat {

template <class T>
struct Vec2 {
    T x{};
    T y{};

    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    Vec2& operator*=(T s) { x *= s; y *= s; return *this; }

    friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend Vec2 operator*(Vec2 a, T s) { return a *= s; }
    friend Vec2 operator*(T s, Vec2 a) { return a *= s; }
    friend bool operator==(const Vec2&, const Vec2&) = default;

    T dot(const Vec2& o) const { return x * o.x + y * o.y; }
    T norm() const { return std::sqrt(x * x + y * y); }
};

template <class T>
struct Vec3 {
    T x{};
    T y{};
    T z{};

    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator*=(T s) { x *= s; y *= s; z *= s; return *this; }
    friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
    friend Vec3 operator*(Vec3 a, T s) { return a *= s; }
    friend bool operator==(const Vec3&, const Vec3&) = default;

    T dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
};

using Vec2f = Vec2<float>;
using Vec2d = Vec2<double>;
using Vec3f = Vec3<float>;
using Vec3d = Vec3<double>;

template <class T>
inline T sigmoid(T x) {
    if (x >= T(0)) {
        return T(1) / (T(1) + std::exp(-x));
    }
    T e = std::exp(x);
    return e / (T(1) + e);
}

template <class T>
inline T inverse_sigmoid(T y) {
    return std::log(y / (T(1) - y));
}

// Deterministic RNG with hand-rolled distributions so that frozen test values
// do not depend on the standard library's unspecified distribution algorithms.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    uint64_t uniform_int(uint64_t n) {
        uint64_t bound = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = engine_();
        } while (v >= bound);
        return v % n;
    }

    // standard normal via Box-Muller; consumes two uniforms per call
    double normal() {
        double u1 = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace splat
