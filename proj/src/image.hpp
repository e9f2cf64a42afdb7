#pragma once

#include <string>
#include <vector>

#include "errors.hpp"

namespace dna {

// Dense real image, [channel, height, width] row-major, values nominally in
// [0, 1] (the additive noise model can push them slightly outside).
struct Image {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data; // channels * height * width

    Image() = default;
    Image(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w) {
        if (c < 1 || h < 1 || w < 1)
            throw ConfigError("image dimensions must be positive, got " +
                              shape_string(c, h, w));
        data.assign(static_cast<std::size_t>(c) * h * w, fill);
    }

    std::size_t size() const { return data.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }

    double& at(int c, int i, int j) {
        return data[(static_cast<std::size_t>(c) * height + i) * width + j];
    }
    double at(int c, int i, int j) const {
        return data[(static_cast<std::size_t>(c) * height + i) * width + j];
    }

    bool same_shape(const Image& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    static std::string shape_string(int c, int h, int w) {
        return std::to_string(c) + "x" + std::to_string(h) + "x" +
               std::to_string(w);
    }
    std::string shape_string() const {
        return shape_string(channels, height, width);
    }
};

inline void require_same_shape(const Image& a, const Image& b,
                               const char* where) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(where) + ": shape mismatch " +
                             a.shape_string() + " vs " + b.shape_string());
}

} // namespace dna
