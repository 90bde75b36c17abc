#pragma once

#include <string>
#include <vector>

#include "splat/image.hpp"

namespace splat {

// Iteration budget per resolution scale. Scale r trains on the interval
// [end_iteration[r+1], end_iteration[r]) — coarse scales first.
struct ResolutionSchedule {
    std::vector<int> scales;             // 1..K
    std::vector<double> energy_ratio;    // dataset-mean E_r / E_1 per scale
    std::vector<double> mean_energy;     // dataset-mean raw E_r (for the report)
    std::vector<int> end_iteration;      // T_r per scale, index 0 <-> r=1
    int phase_boundary = 0;              // T_2, or 0 when K == 1

    int t(int r) const { return end_iteration[static_cast<size_t>(r) - 1]; }
    int max_scale() const { return static_cast<int>(scales.size()); }

    std::string to_json() const;
};

// Elementwise magnitude of the unnormalized forward 2D DFT of a
// single-channel image. Throws NumericError on non-finite pixels.
ImageD energy_spectrum(const ImageD& gray);

// Rec. 601 luminance (0.299 R + 0.587 G + 0.114 B). Single-channel images
// pass through unchanged.
template <class T>
ImageT<double> luminance(const ImageT<T>& image);

// Box-prefilter reduction to ceil(H/r) x ceil(W/r); edge blocks average
// the pixels that exist. r = 1 is the identity. Throws ConfigError on
// r < 1.
template <class T>
ImageT<T> downscale(const ImageT<T>& image, int r);

// E_r = ||energy_spectrum(downscale(luminance(image), r))||_1 * r^2.
double energy_density(const ImageD& gray, int r);

// Mean-of-ratios schedule over the image set: per image compute E_r/E_1,
// average, then T_r = round(ratio * t_densify) clamped so the sequence is
// non-increasing in r. sample_cap > 0 limits how many images are analyzed.
ResolutionSchedule build_schedule(const std::vector<Image>& images, int k, int t_densify,
                                  int sample_cap = 0);

// Trivial schedule: every scale's budget is 0, so training runs entirely
// at full resolution (used when the coarse-to-fine switch is off).
ResolutionSchedule single_resolution_schedule();

// The unique r with T_{r+1} <= iteration < T_r (T_{K+1} = 0); iterations
// at or past T_1 return 1.
int active_scale(int iteration, const ResolutionSchedule& schedule);

}  // namespace splat
