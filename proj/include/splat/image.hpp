#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace splat {

// Dense row-major interleaved image, values nominally in [0, 1].
template <class T>
struct ImageT {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<T> data;

    ImageT() = default;
    ImageT(int w, int h, int c) : width(w), height(h), channels(c), data(static_cast<size_t>(w) * h * c, T(0)) {}

    T& at(int x, int y, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    const T& at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
    size_t value_count() const { return data.size(); }

    bool same_shape(const ImageT& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }

    template <class U>
    ImageT<U> cast() const {
        ImageT<U> out;
        out.width = width;
        out.height = height;
        out.channels = channels;
        out.data.assign(data.begin(), data.end());
        return out;
    }
};

using Image = ImageT<float>;
using ImageD = ImageT<double>;

// 8-bit RGB PNG I/O. Grayscale and paletted inputs are expanded to RGB;
// alpha channels are dropped.
Image load_png(const std::string& path);
void save_png(const std::string& path, const Image& image);

}  // namespace splat
