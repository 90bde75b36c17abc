#pragma once

#include <vector>

#include "splat/image.hpp"

namespace splat {

// 11x11 Gaussian window with sigma = 1.5 and the usual stabilizers on
// [0,1] intensities.
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// Precomputed target-side SSIM statistics for one fixed target image.
// Filtering the target every iteration is pure waste; the trainer builds
// one context per pyramid level and reuses it. Planes are channel-major
// W*H buffers (planar layout keeps the window convolutions vectorizable).
template <class T>
struct LossContextT {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::vector<T>> target;             // per-channel plane
    std::vector<std::vector<T>> mu_target;          // windowed mean
    std::vector<std::vector<T>> raw_var_target;     // windowed mean of target^2
};

using LossContext = LossContextT<float>;

template <class T>
LossContextT<T> make_loss_context(const ImageT<T>& target);

template <class T>
struct LossResultT {
    T loss = T(0);
    T l1 = T(0);
    T ssim = T(0);
    ImageT<T> grad;  // dLoss/dRendered, same shape as the input
};

// (1-lambda)*L1 + lambda*(1-SSIM)/2 plus its gradient with respect to the
// rendered image. Throws NumericError on shape mismatch.
template <class T>
LossResultT<T> hybrid_loss(const ImageT<T>& rendered, const LossContextT<T>& ctx, T lambda,
                           int num_threads = 1);

// Standalone metrics (no gradient).
template <class T>
T compute_ssim(const ImageT<T>& a, const ImageT<T>& b, int num_threads = 1);

// 10*log10(1/MSE); +infinity for identical images.
template <class T>
T compute_psnr(const ImageT<T>& a, const ImageT<T>& b);

}  // namespace splat
