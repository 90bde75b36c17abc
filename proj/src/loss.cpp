#include "splat/loss.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "splat/errors.hpp"
#include "splat/parallel.hpp"

namespace splat {
namespace {

template <class T>
std::array<T, kSsimWindow> ssim_window() {
    std::array<T, kSsimWindow> w{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - (kSsimWindow - 1) / 2;
        const double v = std::exp(-(d * d) / (2.0 * kSsimSigma * kSsimSigma));
        w[i] = static_cast<T>(v);
        sum += v;
    }
    for (auto& v : w) v = static_cast<T>(static_cast<double>(v) / sum);
    return w;
}

// Zero-padded "same" convolution with the separable SSIM window. The
// kernel is symmetric, so this is also its own adjoint — the backward
// pass reuses it directly.
template <class T>
void conv_same(const std::vector<T>& in, int width, int height, std::vector<T>& tmp,
               std::vector<T>& out, int num_threads) {
    const std::array<T, kSsimWindow> w = ssim_window<T>();
    constexpr int half = kSsimWindow / 2;
    tmp.assign(in.size(), T(0));
    out.assign(in.size(), T(0));
    parallel_for(0, height, num_threads, [&](int y_lo, int y_hi) {
        for (int y = y_lo; y < y_hi; ++y) {
            T* trow = tmp.data() + static_cast<size_t>(y) * width;
            const T* irow = in.data() + static_cast<size_t>(y) * width;
            for (int k = 0; k < kSsimWindow; ++k) {
                const int off = k - half;
                const int x_lo = std::max(0, -off);
                const int x_hi = std::min(width, width - off);
                const T wk = w[k];
                for (int x = x_lo; x < x_hi; ++x) trow[x] += wk * irow[x + off];
            }
        }
    });
    parallel_for(0, height, num_threads, [&](int y_lo, int y_hi) {
        for (int y = y_lo; y < y_hi; ++y) {
            T* orow = out.data() + static_cast<size_t>(y) * width;
            for (int k = 0; k < kSsimWindow; ++k) {
                const int sy = y + k - half;
                if (sy < 0 || sy >= height) continue;
                const T* trow = tmp.data() + static_cast<size_t>(sy) * width;
                const T wk = w[k];
                for (int x = 0; x < width; ++x) orow[x] += wk * trow[x];
            }
        }
    });
}

template <class T>
std::vector<T> extract_plane(const ImageT<T>& image, int c) {
    std::vector<T> plane(image.pixel_count());
    const int ch = image.channels;
    for (size_t p = 0; p < plane.size(); ++p) plane[p] = image.data[p * ch + c];
    return plane;
}

// Shared forward/backward core. Accumulates the SSIM map mean and, when
// grad is non-null, the SSIM term's gradient into the planar buffer.
template <class T>
double ssim_channel(const std::vector<T>& x, const LossContextT<T>& ctx, int c, int num_threads,
                    std::vector<T>* grad_out) {
    const int width = ctx.width;
    const int height = ctx.height;
    const size_t n = x.size();
    const std::vector<T>& y = ctx.target[c];
    const std::vector<T>& mu_y = ctx.mu_target[c];
    const std::vector<T>& syy_raw = ctx.raw_var_target[c];

    std::vector<T> tmp, mu_x, sxx_raw, sxy_raw, prod(n);
    conv_same(x, width, height, tmp, mu_x, num_threads);
    for (size_t i = 0; i < n; ++i) prod[i] = x[i] * x[i];
    conv_same(prod, width, height, tmp, sxx_raw, num_threads);
    for (size_t i = 0; i < n; ++i) prod[i] = x[i] * y[i];
    conv_same(prod, width, height, tmp, sxy_raw, num_threads);

    const T c1 = static_cast<T>(kSsimC1);
    const T c2 = static_cast<T>(kSsimC2);
    double ssim_sum = 0.0;
    std::vector<T> g_mu, g_sxx, g_sxy;
    if (grad_out) {
        g_mu.resize(n);
        g_sxx.resize(n);
        g_sxy.resize(n);
    }
    for (size_t i = 0; i < n; ++i) {
        const T mx = mu_x[i];
        const T my = mu_y[i];
        const T A = T(2) * mx * my + c1;
        const T B = T(2) * (sxy_raw[i] - mx * my) + c2;
        const T C = mx * mx + my * my + c1;
        const T D = (sxx_raw[i] - mx * mx) + (syy_raw[i] - my * my) + c2;
        const T inv_cd = T(1) / (C * D);
        ssim_sum += static_cast<double>(A * B * inv_cd);
        if (grad_out) {
            g_mu[i] = T(2) * my * (B - A) * inv_cd +
                      T(2) * mx * (A * B * inv_cd) * (T(1) / D - T(1) / C);
            g_sxx[i] = -A * B * inv_cd / D;
            g_sxy[i] = T(2) * A * inv_cd;
        }
    }
    if (grad_out) {
        std::vector<T> c_mu, c_sxx, c_sxy;
        conv_same(g_mu, width, height, tmp, c_mu, num_threads);
        conv_same(g_sxx, width, height, tmp, c_sxx, num_threads);
        conv_same(g_sxy, width, height, tmp, c_sxy, num_threads);
        grad_out->resize(n);
        for (size_t i = 0; i < n; ++i) {
            (*grad_out)[i] = c_mu[i] + T(2) * x[i] * c_sxx[i] + y[i] * c_sxy[i];
        }
    }
    return ssim_sum;
}

}  // namespace

template <class T>
LossContextT<T> make_loss_context(const ImageT<T>& target) {
    LossContextT<T> ctx;
    ctx.width = target.width;
    ctx.height = target.height;
    ctx.channels = target.channels;
    ctx.target.resize(target.channels);
    ctx.mu_target.resize(target.channels);
    ctx.raw_var_target.resize(target.channels);
    std::vector<T> tmp, sq(target.pixel_count());
    for (int c = 0; c < target.channels; ++c) {
        ctx.target[c] = extract_plane(target, c);
        conv_same(ctx.target[c], ctx.width, ctx.height, tmp, ctx.mu_target[c], 1);
        for (size_t i = 0; i < sq.size(); ++i) sq[i] = ctx.target[c][i] * ctx.target[c][i];
        conv_same(sq, ctx.width, ctx.height, tmp, ctx.raw_var_target[c], 1);
    }
    return ctx;
}

template <class T>
LossResultT<T> hybrid_loss(const ImageT<T>& rendered, const LossContextT<T>& ctx, T lambda,
                           int num_threads) {
    if (rendered.width != ctx.width || rendered.height != ctx.height ||
        rendered.channels != ctx.channels) {
        throw NumericError("hybrid_loss: rendered/target shape mismatch");
    }
    if (!(lambda >= T(0) && lambda <= T(1))) {
        throw ConfigError("hybrid_loss: lambda must be in [0,1]");
    }
    const size_t total = rendered.value_count();
    const T inv_total = T(1) / static_cast<T>(total);
    LossResultT<T> result;
    result.grad = ImageT<T>(ctx.width, ctx.height, ctx.channels);

    double l1_sum = 0.0;
    double ssim_sum = 0.0;
    std::vector<T> ssim_grad;
    const T l1_weight = (T(1) - lambda) * inv_total;
    const T ssim_weight = -lambda * T(0.5) * inv_total;
    for (int c = 0; c < ctx.channels; ++c) {
        const std::vector<T> x = extract_plane(rendered, c);
        const std::vector<T>& y = ctx.target[c];
        ssim_sum += ssim_channel(x, ctx, c, num_threads, &ssim_grad);
        for (size_t i = 0; i < x.size(); ++i) {
            const T diff = x[i] - y[i];
            l1_sum += std::abs(static_cast<double>(diff));
            const T sign = diff > T(0) ? T(1) : (diff < T(0) ? T(-1) : T(0));
            result.grad.data[i * ctx.channels + c] = l1_weight * sign + ssim_weight * ssim_grad[i];
        }
    }
    result.l1 = static_cast<T>(l1_sum / static_cast<double>(total));
    result.ssim = static_cast<T>(ssim_sum / static_cast<double>(total));
    result.loss =
        (T(1) - lambda) * result.l1 + lambda * (T(1) - result.ssim) * T(0.5);
    return result;
}

template <class T>
T compute_ssim(const ImageT<T>& a, const ImageT<T>& b, int num_threads) {
    if (!a.same_shape(b)) throw NumericError("compute_ssim: shape mismatch");
    const LossContextT<T> ctx = make_loss_context(b);
    double ssim_sum = 0.0;
    for (int c = 0; c < ctx.channels; ++c) {
        ssim_sum += ssim_channel<T>(extract_plane(a, c), ctx, c, num_threads, nullptr);
    }
    return static_cast<T>(ssim_sum / static_cast<double>(a.value_count()));
}

template <class T>
T compute_psnr(const ImageT<T>& a, const ImageT<T>& b) {
    if (!a.same_shape(b)) throw NumericError("compute_psnr: shape mismatch");
    double mse = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse == 0.0) return std::numeric_limits<T>::infinity();
    return static_cast<T>(10.0 * std::log10(1.0 / mse));
}

template LossContextT<float> make_loss_context(const ImageT<float>&);
template LossContextT<double> make_loss_context(const ImageT<double>&);
template LossResultT<float> hybrid_loss(const ImageT<float>&, const LossContextT<float>&, float,
                                        int);
template LossResultT<double> hybrid_loss(const ImageT<double>&, const LossContextT<double>&,
                                         double, int);
template float compute_ssim(const ImageT<float>&, const ImageT<float>&, int);
template double compute_ssim(const ImageT<double>&, const ImageT<double>&, int);
template float compute_psnr(const ImageT<float>&, const ImageT<float>&);
template double compute_psnr(const ImageT<double>&, const ImageT<double>&);

}  // namespace splat
