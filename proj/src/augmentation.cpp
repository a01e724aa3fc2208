#include "ddcl/augmentation.hpp"

#include <algorithm>
#include <cmath>

#include "ddcl/threadpool.hpp"

namespace ddcl::aug {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        total += k[i + radius];
    }
    for (double& v : k) v /= total;
    return k;
}

// Separable smoothing of a scalar field with replicate borders.
void smooth_field(std::vector<double>& f, std::size_t h, std::size_t w, double sigma) {
    const auto k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size() / 2);
    std::vector<double> tmp(f.size());
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                long xx = std::clamp<long>(static_cast<long>(x) + t, 0, static_cast<long>(w) - 1);
                acc += k[t + radius] * f[y * w + xx];
            }
            tmp[y * w + x] = acc;
        }
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                long yy = std::clamp<long>(static_cast<long>(y) + t, 0, static_cast<long>(h) - 1);
                acc += k[t + radius] * tmp[yy * w + x];
            }
            f[y * w + x] = acc;
        }
}

void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
    const float mx = std::max({r, g, b});
    const float mn = std::min({r, g, b});
    const float d = mx - mn;
    v = mx;
    s = mx <= 0.0f ? 0.0f : d / mx;
    if (d <= 0.0f) {
        h = 0.0f;
        return;
    }
    if (mx == r)
        h = (g - b) / d + (g < b ? 6.0f : 0.0f);
    else if (mx == g)
        h = (b - r) / d + 2.0f;
    else
        h = (r - g) / d + 4.0f;
    h /= 6.0f;
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
    if (s <= 0.0f) {
        r = g = b = v;
        return;
    }
    h = h - std::floor(h);
    const float hh = h * 6.0f;
    const int i = static_cast<int>(hh) % 6;
    const float f = hh - std::floor(hh);
    const float p = v * (1.0f - s);
    const float q = v * (1.0f - s * f);
    const float t = v * (1.0f - s * (1.0f - f));
    switch (i) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

} // namespace

AugStrategy AugStrategy::baug(std::size_t out_h, std::size_t out_w) {
    AugStrategy s;
    s.name = "BAug";
    s.out_h = out_h;
    s.out_w = out_w;
    return s;
}

AugStrategy AugStrategy::caug(std::size_t out_h, std::size_t out_w) {
    AugStrategy s = baug(out_h, out_w);
    s.name = "CAug";
    s.rotation_prob = 1.0;
    s.rotation_deg = 90.0;
    return s;
}

AugStrategy AugStrategy::caug_plus(std::size_t out_h, std::size_t out_w) {
    AugStrategy s = caug(out_h, out_w);
    s.name = "CAugPlus";
    s.use_elastic = true;
    s.elastic_alpha = 100.0;
    s.elastic_sigma = 5.0;
    return s;
}

AugStrategy AugStrategy::identity(std::size_t out_h, std::size_t out_w) {
    AugStrategy s;
    s.name = "identity";
    s.out_h = out_h;
    s.out_w = out_w;
    s.crop_scale_lo = s.crop_scale_hi = 1.0;
    s.crop_ratio_lo = s.crop_ratio_hi = 1.0;
    s.flip_prob = s.jitter_prob = s.grayscale_prob = s.blur_prob = s.rotation_prob = 0.0;
    return s;
}

AugStrategy AugStrategy::by_name(const std::string& name, std::size_t out_h, std::size_t out_w) {
    if (name == "BAug") return baug(out_h, out_w);
    if (name == "CAug") return caug(out_h, out_w);
    if (name == "CAugPlus" || name == "CAug+") return caug_plus(out_h, out_w);
    if (name == "identity") return identity(out_h, out_w);
    throw InvalidInput("unknown augmentation strategy '" + name + "'");
}

std::string DistortionSuite::name() const {
    switch (kind) {
        case SuiteKind::identity: return "Identity";
        case SuiteKind::cj: return "CJ";
        case SuiteKind::cj_flip: return "CJ+Flip";
        case SuiteKind::cj_90: return "CJ+90°";
        case SuiteKind::cj_90_et: return "CJ+90°+ET";
    }
    return "?";
}

std::string DistortionSuite::id() const {
    switch (kind) {
        case SuiteKind::identity: return "identity";
        case SuiteKind::cj: return "cj";
        case SuiteKind::cj_flip: return "cj_flip";
        case SuiteKind::cj_90: return "cj_90";
        case SuiteKind::cj_90_et: return "cj_90_et";
    }
    return "?";
}

DistortionSuite DistortionSuite::by_id(const std::string& id, std::uint64_t seed_base) {
    for (SuiteKind k : {SuiteKind::identity, SuiteKind::cj, SuiteKind::cj_flip,
                        SuiteKind::cj_90, SuiteKind::cj_90_et}) {
        DistortionSuite s{k, seed_base};
        if (s.id() == id) return s;
    }
    throw InvalidInput("unknown distortion suite '" + id + "'");
}

std::vector<DistortionSuite> DistortionSuite::robustness_set(std::uint64_t seed_base) {
    return {{SuiteKind::cj, seed_base},
            {SuiteKind::cj_flip, seed_base},
            {SuiteKind::cj_90, seed_base},
            {SuiteKind::cj_90_et, seed_base}};
}

Image rotate(const Image& x, double theta_deg) {
    if (theta_deg < -180.0 || theta_deg > 180.0)
        throw InvalidInput("rotate: angle must lie in [-180, 180]");
    if (theta_deg == 0.0) return x;
    const double th = theta_deg * kPi / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    const double cy = (static_cast<double>(x.height) - 1.0) / 2.0;
    const double cx = (static_cast<double>(x.width) - 1.0) / 2.0;
    Image out(x.height, x.width, x.channels);
    for (std::size_t y = 0; y < x.height; ++y)
        for (std::size_t xx = 0; xx < x.width; ++xx) {
            // inverse map: rotate the destination offset by -theta
            const double dy = static_cast<double>(y) - cy;
            const double dx = static_cast<double>(xx) - cx;
            const double sx = cx + c * dx + s * dy;
            const double sy = cy - s * dx + c * dy;
            for (std::size_t ch = 0; ch < x.channels; ++ch)
                out.at(y, xx, ch) = sample_bilinear(x, sy, sx, ch);
        }
    clamp01(out);
    return out;
}

Image elastic_transform(const Image& x, double alpha, double sigma, Rng& rng) {
    if (alpha < 0.0) throw InvalidInput("elastic_transform: alpha must be >= 0");
    if (sigma <= 0.0) throw InvalidInput("elastic_transform: sigma must be > 0");
    if (alpha == 0.0) return x;  // bit-exact identity

    const std::size_t h = x.height, w = x.width;
    std::vector<double> dx(h * w), dy(h * w);
    for (auto& v : dx) v = rng.uniform(-1.0, 1.0);
    for (auto& v : dy) v = rng.uniform(-1.0, 1.0);
    smooth_field(dx, h, w, sigma);
    smooth_field(dy, h, w, sigma);

    // Normalize by the max Euclidean magnitude so |displacement| <= alpha.
    double max_mag = 0.0;
    for (std::size_t i = 0; i < h * w; ++i)
        max_mag = std::max(max_mag, std::sqrt(dx[i] * dx[i] + dy[i] * dy[i]));
    const double scale = max_mag > 1e-12 ? alpha / max_mag : 0.0;

    Image out(h, w, x.channels);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t xx = 0; xx < w; ++xx) {
            const double fy = static_cast<double>(y) + dy[y * w + xx] * scale;
            const double fx = static_cast<double>(xx) + dx[y * w + xx] * scale;
            for (std::size_t ch = 0; ch < x.channels; ++ch)
                out.at(y, xx, ch) = sample_bilinear(x, fy, fx, ch);
        }
    clamp01(out);
    return out;
}

Image color_jitter(const Image& x, Rng& rng, double brightness, double contrast,
                   double saturation, double hue) {
    const double fb = rng.uniform(std::max(0.0, 1.0 - brightness), 1.0 + brightness);
    const double fc = rng.uniform(std::max(0.0, 1.0 - contrast), 1.0 + contrast);
    const double fs = rng.uniform(std::max(0.0, 1.0 - saturation), 1.0 + saturation);
    const double fh = rng.uniform(-hue, hue);

    Image out = x;
    for (float& v : out.pixels) v = static_cast<float>(v * fb);
    clamp01(out);

    double mean_gray = 0.0;
    for (std::size_t y = 0; y < out.height; ++y)
        for (std::size_t xx = 0; xx < out.width; ++xx) mean_gray += luma(out, y, xx);
    mean_gray /= static_cast<double>(out.height * out.width);
    for (float& v : out.pixels)
        v = static_cast<float>(mean_gray + fc * (v - mean_gray));
    clamp01(out);

    if (out.channels == 3) {
        for (std::size_t y = 0; y < out.height; ++y)
            for (std::size_t xx = 0; xx < out.width; ++xx) {
                const float g = luma(out, y, xx);
                for (std::size_t ch = 0; ch < 3; ++ch)
                    out.at(y, xx, ch) = static_cast<float>(g + fs * (out.at(y, xx, ch) - g));
            }
        clamp01(out);
        if (fh != 0.0) {
            for (std::size_t y = 0; y < out.height; ++y)
                for (std::size_t xx = 0; xx < out.width; ++xx) {
                    float h, s, v;
                    rgb_to_hsv(out.at(y, xx, 0), out.at(y, xx, 1), out.at(y, xx, 2), h, s, v);
                    h += static_cast<float>(fh);
                    hsv_to_rgb(h, s, v, out.at(y, xx, 0), out.at(y, xx, 1), out.at(y, xx, 2));
                }
            clamp01(out);
        }
    }
    return out;
}

Image random_resized_crop(const Image& x, Rng& rng, std::size_t out_h, std::size_t out_w,
                          double scale_lo, double scale_hi, double ratio_lo, double ratio_hi) {
    const double area = static_cast<double>(x.height * x.width);
    std::size_t ch = 0, cw = 0, cy = 0, cx = 0;
    bool found = false;
    for (int attempt = 0; attempt < 10 && !found; ++attempt) {
        const double target = area * rng.uniform(scale_lo, scale_hi);
        const double log_ratio = rng.uniform(std::log(ratio_lo), std::log(ratio_hi));
        const double ratio = std::exp(log_ratio);
        const auto w = static_cast<long>(std::lround(std::sqrt(target * ratio)));
        const auto h = static_cast<long>(std::lround(std::sqrt(target / ratio)));
        if (w > 0 && h > 0 && w <= static_cast<long>(x.width) &&
            h <= static_cast<long>(x.height)) {
            ch = static_cast<std::size_t>(h);
            cw = static_cast<std::size_t>(w);
            cy = rng.uniform_int(x.height - ch + 1);
            cx = rng.uniform_int(x.width - cw + 1);
            found = true;
        }
    }
    if (!found) {
        // center-crop fallback
        const std::size_t side = std::min(x.height, x.width);
        ch = cw = side;
        cy = (x.height - side) / 2;
        cx = (x.width - side) / 2;
    }
    if (ch == x.height && cw == x.width && out_h == x.height && out_w == x.width) return x;
    Image crop(ch, cw, x.channels);
    for (std::size_t y = 0; y < ch; ++y)
        for (std::size_t xx = 0; xx < cw; ++xx)
            for (std::size_t c = 0; c < x.channels; ++c)
                crop.at(y, xx, c) = x.at(cy + y, cx + xx, c);
    return resize_bilinear(crop, out_h, out_w);
}

Image horizontal_flip(const Image& x) {
    Image out(x.height, x.width, x.channels);
    for (std::size_t y = 0; y < x.height; ++y)
        for (std::size_t xx = 0; xx < x.width; ++xx)
            for (std::size_t c = 0; c < x.channels; ++c)
                out.at(y, xx, c) = x.at(y, x.width - 1 - xx, c);
    return out;
}

Image to_grayscale(const Image& x) {
    Image out(x.height, x.width, x.channels);
    for (std::size_t y = 0; y < x.height; ++y)
        for (std::size_t xx = 0; xx < x.width; ++xx) {
            const float g = luma(x, y, xx);
            for (std::size_t c = 0; c < x.channels; ++c) out.at(y, xx, c) = g;
        }
    return out;
}

Image gaussian_blur(const Image& x, double sigma) {
    if (sigma <= 0.0) return x;
    const auto k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size() / 2);
    Image tmp(x.height, x.width, x.channels), out(x.height, x.width, x.channels);
    for (std::size_t y = 0; y < x.height; ++y)
        for (std::size_t xx = 0; xx < x.width; ++xx)
            for (std::size_t c = 0; c < x.channels; ++c) {
                double acc = 0.0;
                for (int t = -radius; t <= radius; ++t) {
                    long sx = std::clamp<long>(static_cast<long>(xx) + t, 0,
                                               static_cast<long>(x.width) - 1);
                    acc += k[t + radius] * x.at(y, static_cast<std::size_t>(sx), c);
                }
                tmp.at(y, xx, c) = static_cast<float>(acc);
            }
    for (std::size_t y = 0; y < x.height; ++y)
        for (std::size_t xx = 0; xx < x.width; ++xx)
            for (std::size_t c = 0; c < x.channels; ++c) {
                double acc = 0.0;
                for (int t = -radius; t <= radius; ++t) {
                    long sy = std::clamp<long>(static_cast<long>(y) + t, 0,
                                               static_cast<long>(x.height) - 1);
                    acc += k[t + radius] * tmp.at(static_cast<std::size_t>(sy), xx, c);
                }
                out.at(y, xx, c) = static_cast<float>(acc);
            }
    clamp01(out);
    return out;
}

Image apply_strategy(const Image& x, const AugStrategy& s, const RngStream& stream) {
    x.validate("apply_strategy");

    Rng crop_rng = stream.rng("crop");
    Image img = random_resized_crop(x, crop_rng, s.out_h, s.out_w, s.crop_scale_lo,
                                    s.crop_scale_hi, s.crop_ratio_lo, s.crop_ratio_hi);

    Rng flip_rng = stream.rng("flip");
    if (s.flip_prob > 0.0 && flip_rng.bernoulli(s.flip_prob)) img = horizontal_flip(img);

    Rng jitter_rng = stream.rng("jitter");
    if (s.jitter_prob > 0.0 && jitter_rng.bernoulli(s.jitter_prob))
        img = color_jitter(img, jitter_rng, s.jitter_brightness, s.jitter_contrast,
                           s.jitter_saturation, s.jitter_hue);

    Rng gray_rng = stream.rng("gray");
    if (s.grayscale_prob > 0.0 && gray_rng.bernoulli(s.grayscale_prob)) img = to_grayscale(img);

    if (s.use_blur) {
        Rng blur_rng = stream.rng("blur");
        if (s.blur_prob > 0.0 && blur_rng.bernoulli(s.blur_prob))
            img = gaussian_blur(img, blur_rng.uniform(s.blur_sigma_lo, s.blur_sigma_hi));
    }

    Rng rot_rng = stream.rng("rot");
    if (s.rotation_prob > 0.0 && rot_rng.bernoulli(s.rotation_prob))
        img = rotate(img, rot_rng.uniform(-s.rotation_deg, s.rotation_deg));

    if (s.use_elastic) {
        Rng el_rng = stream.rng("elastic");
        img = elastic_transform(img, s.elastic_alpha, s.elastic_sigma, el_rng);
    }
    return img;
}

ViewPair make_view_pair(const Image& x, const AugStrategy& s, const RngStream& stream) {
    ViewPair vp;
    vp.provenance1 = stream;
    vp.provenance1.view = 0;
    vp.provenance2 = stream;
    vp.provenance2.view = 1;
    vp.v1 = apply_strategy(x, s, vp.provenance1);
    vp.v2 = apply_strategy(x, s, vp.provenance2);
    return vp;
}

std::vector<ViewPair> make_view_pairs(const std::vector<const Image*>& xs,
                                      const std::vector<std::uint64_t>& sample_ids,
                                      const AugStrategy& s, std::uint64_t seed,
                                      std::uint64_t epoch) {
    if (xs.size() != sample_ids.size())
        throw ShapeError("make_view_pairs: images and sample_ids length mismatch");
    std::vector<ViewPair> out(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) {
        RngStream stream{seed, sample_ids[i], 0, epoch};
        out[i] = make_view_pair(*xs[i], s, stream);
    });
    return out;
}

Image apply_suite(const Image& x, const DistortionSuite& suite, std::uint64_t sample_id) {
    if (suite.kind == SuiteKind::identity) return x;
    x.validate("apply_suite");
    RngStream stream{suite.seed_base, sample_id, 0, 0};

    Rng jitter_rng = stream.rng("suite_cj");
    Image img = color_jitter(x, jitter_rng, 0.4, 0.4, 0.4, 0.1);

    if (suite.kind == SuiteKind::cj_flip) {
        Rng flip_rng = stream.rng("suite_flip");
        if (flip_rng.bernoulli(0.5)) img = horizontal_flip(img);
    }
    if (suite.kind == SuiteKind::cj_90 || suite.kind == SuiteKind::cj_90_et) {
        Rng rot_rng = stream.rng("suite_rot");
        img = rotate(img, rot_rng.uniform(-90.0, 90.0));
    }
    if (suite.kind == SuiteKind::cj_90_et) {
        Rng el_rng = stream.rng("suite_elastic");
        img = elastic_transform(img, 100.0, 5.0, el_rng);
    }
    return img;
}

} // namespace ddcl::aug
