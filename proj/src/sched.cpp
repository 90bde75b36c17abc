#include "splat/sched.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "splat/errors.hpp"

namespace splat {

ImageD energy_spectrum(const ImageD& gray) {
    if (gray.channels != 1) throw ConfigError("energy_spectrum expects a single-channel image");
    if (gray.width < 1 || gray.height < 1) throw ConfigError("energy_spectrum: empty image");
    for (double v : gray.data) {
        if (!std::isfinite(v)) throw NumericError("energy_spectrum: non-finite pixel");
    }
    const int h = gray.height;
    const int w = gray.width;
    const size_t n = gray.pixel_count();
    fftw_complex* in = fftw_alloc_complex(n);
    fftw_complex* out = fftw_alloc_complex(n);
    fftw_plan plan = fftw_plan_dft_2d(h, w, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    for (size_t i = 0; i < n; ++i) {
        in[i][0] = gray.data[i];
        in[i][1] = 0.0;
    }
    fftw_execute(plan);
    ImageD mag(w, h, 1);
    for (size_t i = 0; i < n; ++i) {
        mag.data[i] = std::sqrt(out[i][0] * out[i][0] + out[i][1] * out[i][1]);
    }
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
    return mag;
}

template <class T>
ImageT<double> luminance(const ImageT<T>& image) {
    if (image.channels == 1) return image.template cast<double>();
    if (image.channels != 3) throw ConfigError("luminance expects 1- or 3-channel images");
    ImageD gray(image.width, image.height, 1);
    for (size_t p = 0; p < image.pixel_count(); ++p) {
        const double r = image.data[p * 3 + 0];
        const double g = image.data[p * 3 + 1];
        const double b = image.data[p * 3 + 2];
        gray.data[p] = 0.299 * r + 0.587 * g + 0.114 * b;
    }
    return gray;
}

template ImageT<double> luminance(const ImageT<float>&);
template ImageT<double> luminance(const ImageT<double>&);

template <class T>
ImageT<T> downscale(const ImageT<T>& image, int r) {
    if (r < 1) throw ConfigError("downscale: factor must be >= 1");
    if (r == 1) return image;
    const int oh = (image.height + r - 1) / r;
    const int ow = (image.width + r - 1) / r;
    ImageT<T> out(ow, oh, image.channels);
    for (int oy = 0; oy < oh; ++oy) {
        const int y0 = oy * r;
        const int y1 = std::min(y0 + r, image.height);
        for (int ox = 0; ox < ow; ++ox) {
            const int x0 = ox * r;
            const int x1 = std::min(x0 + r, image.width);
            const T inv_count = T(1) / static_cast<T>((y1 - y0) * (x1 - x0));
            for (int c = 0; c < image.channels; ++c) {
                T sum = T(0);
                for (int y = y0; y < y1; ++y) {
                    for (int x = x0; x < x1; ++x) {
                        sum += image.at(x, y, c);
                    }
                }
                out.at(ox, oy, c) = sum * inv_count;
            }
        }
    }
    return out;
}

template ImageT<float> downscale(const ImageT<float>&, int);
template ImageT<double> downscale(const ImageT<double>&, int);

double energy_density(const ImageD& gray, int r) {
    const ImageD mag = energy_spectrum(downscale(gray, r));
    double sum = 0.0;
    for (double v : mag.data) sum += v;
    return sum * static_cast<double>(r) * static_cast<double>(r);
}

ResolutionSchedule build_schedule(const std::vector<Image>& images, int k, int t_densify,
                                  int sample_cap) {
    if (images.empty()) throw ConfigError("build_schedule: empty image set");
    if (k < 1) throw ConfigError("build_schedule: max scale must be >= 1");
    if (t_densify < 1) throw ConfigError("build_schedule: densification span must be >= 1");
    for (const Image& img : images) {
        if (img.channels != images.front().channels) {
            throw ConfigError("build_schedule: images have mismatched channel counts");
        }
    }
    const size_t count =
        sample_cap > 0 ? std::min(images.size(), static_cast<size_t>(sample_cap)) : images.size();

    std::vector<double> ratio_sum(static_cast<size_t>(k), 0.0);
    std::vector<double> energy_sum(static_cast<size_t>(k), 0.0);
    for (size_t i = 0; i < count; ++i) {
        const ImageD gray = luminance(images[i]);
        std::vector<double> e(static_cast<size_t>(k));
        for (int r = 1; r <= k; ++r) {
            e[r - 1] = energy_density(gray, r);
        }
        const double e1 = e[0];
        for (int r = 1; r <= k; ++r) {
            // A zero-energy (all-black) image is constant, and a constant
            // image keeps its full energy budget at every scale.
            ratio_sum[r - 1] += e1 > 0.0 ? e[r - 1] / e1 : 1.0;
            energy_sum[r - 1] += e[r - 1];
        }
    }

    ResolutionSchedule sched;
    sched.scales.resize(static_cast<size_t>(k));
    sched.energy_ratio.resize(static_cast<size_t>(k));
    sched.mean_energy.resize(static_cast<size_t>(k));
    sched.end_iteration.resize(static_cast<size_t>(k));
    int prev = t_densify;
    for (int r = 1; r <= k; ++r) {
        const double ratio = ratio_sum[r - 1] / static_cast<double>(count);
        int t = static_cast<int>(std::llround(ratio * static_cast<double>(t_densify)));
        t = std::min(t, prev);  // keep the schedule coarse-to-fine
        sched.scales[r - 1] = r;
        sched.energy_ratio[r - 1] = ratio;
        sched.mean_energy[r - 1] = energy_sum[r - 1] / static_cast<double>(count);
        sched.end_iteration[r - 1] = t;
        prev = t;
    }
    sched.phase_boundary = k >= 2 ? sched.end_iteration[1] : 0;
    return sched;
}

ResolutionSchedule single_resolution_schedule() {
    ResolutionSchedule sched;
    sched.scales = {1};
    sched.energy_ratio = {1.0};
    sched.mean_energy = {0.0};
    sched.end_iteration = {0};
    sched.phase_boundary = 0;
    return sched;
}

int active_scale(int iteration, const ResolutionSchedule& schedule) {
    // Scale r owns [T_{r+1}, T_r); the first match scanning from the
    // coarsest end is the unique one. Anything at or past T_1 is full
    // resolution.
    for (int r = schedule.max_scale(); r >= 1; --r) {
        if (iteration < schedule.t(r)) return r;
    }
    return 1;
}

std::string ResolutionSchedule::to_json() const {
    nlohmann::json j;
    j["scales"] = scales;
    j["energy_ratio"] = energy_ratio;
    j["mean_energy"] = mean_energy;
    j["end_iteration"] = end_iteration;
    j["phase_boundary"] = phase_boundary;
    return j.dump(2) + "\n";
}

}  // namespace splat
