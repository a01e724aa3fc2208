#pragma once

#include <cstddef>
#include <vector>

#include "ddcl/errors.hpp"

namespace ddcl {

// HWC float image, values in [0,1], 1 or 3 channels.
struct Image {
    std::size_t height = 0, width = 0, channels = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(std::size_t h, std::size_t w, std::size_t c, float fill = 0.0f)
        : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

    float& at(std::size_t y, std::size_t x, std::size_t c) {
        return pixels[(y * width + x) * channels + c];
    }
    float at(std::size_t y, std::size_t x, std::size_t c) const {
        return pixels[(y * width + x) * channels + c];
    }

    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
    bool operator==(const Image& o) const {
        return same_shape(o) && pixels == o.pixels;
    }

    // Image invariants: finite pixels, H and W at least 8, 1 or 3 channels.
    void validate(const char* what) const;
};

// Bilinear read at fractional (fy, fx); zero outside bounds.
float sample_bilinear(const Image& img, double fy, double fx, std::size_t c);

// Bilinear resize to (out_h, out_w); identity when sizes match.
Image resize_bilinear(const Image& src, std::size_t out_h, std::size_t out_w);

// Per-pixel luma (0.299, 0.587, 0.114); returns a single value per pixel.
float luma(const Image& img, std::size_t y, std::size_t x);

void clamp01(Image& img);

} // namespace ddcl
