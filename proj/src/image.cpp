#include "splat/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "splat/errors.hpp"

namespace splat {

Image load_png(const std::string& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str())) {
        throw ConfigError("cannot read PNG '" + path + "': " + png.message);
    }
    png.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> bytes(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, bytes.data(), 0, nullptr)) {
        png_image_free(&png);
        throw ConfigError("cannot decode PNG '" + path + "': " + png.message);
    }
    Image out(static_cast<int>(png.width), static_cast<int>(png.height), 3);
    for (size_t i = 0; i < bytes.size(); ++i) {
        out.data[i] = static_cast<float>(bytes[i]) / 255.0f;
    }
    return out;
}

void save_png(const std::string& path, const Image& image) {
    if (image.channels != 3 || image.width < 1 || image.height < 1) {
        throw ConfigError("save_png expects a non-empty 3-channel image");
    }
    std::vector<unsigned char> bytes(image.data.size());
    for (size_t i = 0; i < bytes.size(); ++i) {
        const float v = std::clamp(image.data[i], 0.0f, 1.0f);
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
        throw ConfigError("cannot write PNG '" + path + "': " + png.message);
    }
}

}  // namespace splat
