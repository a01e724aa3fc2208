#include "ddcl/image.hpp"

#include <cmath>
#include <string>

namespace ddcl {

void Image::validate(const char* what) const {
    if (channels != 1 && channels != 3)
        throw InvalidInput(std::string(what) + ": channels must be 1 or 3");
    if (height < 8 || width < 8)
        throw InvalidInput(std::string(what) + ": image must be at least 8x8, got " +
                           std::to_string(height) + "x" + std::to_string(width));
    if (pixels.size() != height * width * channels)
        throw InvalidInput(std::string(what) + ": pixel buffer size mismatch");
    for (float v : pixels)
        if (!std::isfinite(v)) throw InvalidInput(std::string(what) + ": non-finite pixel");
}

float sample_bilinear(const Image& img, double fy, double fx, std::size_t c) {
    const long y0 = static_cast<long>(std::floor(fy));
    const long x0 = static_cast<long>(std::floor(fx));
    const double wy = fy - static_cast<double>(y0);
    const double wx = fx - static_cast<double>(x0);
    auto pix = [&](long y, long x) -> double {
        if (y < 0 || x < 0 || y >= static_cast<long>(img.height) ||
            x >= static_cast<long>(img.width))
            return 0.0;
        return img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c);
    };
    const double v = (1.0 - wy) * ((1.0 - wx) * pix(y0, x0) + wx * pix(y0, x0 + 1)) +
                     wy * ((1.0 - wx) * pix(y0 + 1, x0) + wx * pix(y0 + 1, x0 + 1));
    return static_cast<float>(v);
}

Image resize_bilinear(const Image& src, std::size_t out_h, std::size_t out_w) {
    if (out_h == src.height && out_w == src.width) return src;
    Image out(out_h, out_w, src.channels);
    const double sy = static_cast<double>(src.height) / static_cast<double>(out_h);
    const double sx = static_cast<double>(src.width) / static_cast<double>(out_w);
    for (std::size_t y = 0; y < out_h; ++y) {
        const double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
        for (std::size_t x = 0; x < out_w; ++x) {
            const double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
            for (std::size_t c = 0; c < src.channels; ++c)
                out.at(y, x, c) = sample_bilinear(src, fy, fx, c);
        }
    }
    return out;
}

float luma(const Image& img, std::size_t y, std::size_t x) {
    if (img.channels == 1) return img.at(y, x, 0);
    return 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) + 0.114f * img.at(y, x, 2);
}

void clamp01(Image& img) {
    for (float& v : img.pixels) v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
}

} // namespace ddcl
