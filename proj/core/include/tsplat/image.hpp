#pragma once

#include "tsplat/mixture.hpp"

#include <filesystem>
#include <vector>

namespace tsplat {

/// Row-major interleaved RGB image with double channels.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width + x) * 3 + c;
    }
    double& at(int x, int y, int c) { return data[index(x, y, c)]; }
    double at(int x, int y, int c) const { return data[index(x, y, c)]; }
    Vec3 pixel(int x, int y) const {
        const auto i = index(x, y, 0);
        return Vec3(data[i], data[i + 1], data[i + 2]);
    }
    void set_pixel(int x, int y, const Vec3& rgb) {
        const auto i = index(x, y, 0);
        data[i] = rgb.x();
        data[i + 1] = rgb.y();
        data[i + 2] = rgb.z();
    }
    bool same_shape(const Image& other) const {
        return width == other.width && height == other.height;
    }
};

/// Binary P6, maxval 255. Throws std::runtime_error on malformed input.
Image read_ppm(const std::filesystem::path& path);

/// Writes P6 with values clamped to [0,1] and rounded to the nearest of 256 levels.
void write_ppm(const std::filesystem::path& path, const Image& image);

}  // namespace tsplat
