#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddcl/image.hpp"
#include "ddcl/rng.hpp"

namespace ddcl::aug {

// Training-time view-generation strategy. The three named strategies nest:
// CAug = BAug + random rotation in [-90, 90]; CAugPlus = CAug + elastic
// (alpha=100, sigma=5). Every parameter is configurable; the factories below
// encode the named presets. Blur participates only when use_blur is set
// (reserved for ImageNet-like inputs).
struct AugStrategy {
    std::string name = "BAug";
    std::size_t out_h = 64, out_w = 64;  // crop target size

    double crop_scale_lo = 0.2, crop_scale_hi = 1.0;
    double crop_ratio_lo = 3.0 / 4.0, crop_ratio_hi = 4.0 / 3.0;
    double flip_prob = 0.5;
    double jitter_prob = 0.8;
    double jitter_brightness = 0.4, jitter_contrast = 0.4;
    double jitter_saturation = 0.4, jitter_hue = 0.1;
    double grayscale_prob = 0.2;
    bool use_blur = false;
    double blur_prob = 0.5, blur_sigma_lo = 0.1, blur_sigma_hi = 2.0;
    double rotation_prob = 0.0;   // CAug and up: 1.0
    double rotation_deg = 90.0;   // angle drawn from U(-rotation_deg, +rotation_deg)
    bool use_elastic = false;     // CAugPlus
    double elastic_alpha = 100.0, elastic_sigma = 5.0;

    static AugStrategy baug(std::size_t out_h, std::size_t out_w);
    static AugStrategy caug(std::size_t out_h, std::size_t out_w);
    static AugStrategy caug_plus(std::size_t out_h, std::size_t out_w);
    // Everything off, crop spans the whole image: output == input bit-exactly.
    static AugStrategy identity(std::size_t out_h, std::size_t out_w);

    static AugStrategy by_name(const std::string& name, std::size_t out_h, std::size_t out_w);
};

// Fixed distortion suites for robustness evaluation. Per-sample seeds make
// every method/part see identical distorted inputs.
enum class SuiteKind { identity, cj, cj_flip, cj_90, cj_90_et };

struct DistortionSuite {
    SuiteKind kind = SuiteKind::identity;
    std::uint64_t seed_base = 0;

    std::string name() const;       // table header form: CJ, CJ+Flip, ...
    std::string id() const;         // flag form: identity, cj, cj_flip, ...
    static DistortionSuite by_id(const std::string& id, std::uint64_t seed_base);
    static std::vector<DistortionSuite> robustness_set(std::uint64_t seed_base);  // cj..cj_90_et
};

// ---- individual transforms, each deterministic given its rng ----

Image rotate(const Image& x, double theta_deg);
Image elastic_transform(const Image& x, double alpha, double sigma, Rng& rng);
Image color_jitter(const Image& x, Rng& rng, double brightness, double contrast,
                   double saturation, double hue);
Image random_resized_crop(const Image& x, Rng& rng, std::size_t out_h, std::size_t out_w,
                          double scale_lo, double scale_hi, double ratio_lo, double ratio_hi);
Image horizontal_flip(const Image& x);
Image to_grayscale(const Image& x);
Image gaussian_blur(const Image& x, double sigma);

// One stochastic view: crop -> flip -> jitter -> grayscale -> (blur) ->
// rotation -> (elastic); each stage draws from its own derived stream.
Image apply_strategy(const Image& x, const AugStrategy& s, const RngStream& stream);

struct ViewPair {
    Image v1, v2;
    RngStream provenance1, provenance2;
};

ViewPair make_view_pair(const Image& x, const AugStrategy& s, const RngStream& stream);

// Batch form used by the trainer and the determinism tests: output slot i
// depends only on (seed, sample_ids[i], epoch), never on worker scheduling.
std::vector<ViewPair> make_view_pairs(const std::vector<const Image*>& xs,
                                      const std::vector<std::uint64_t>& sample_ids,
                                      const AugStrategy& s, std::uint64_t seed,
                                      std::uint64_t epoch);

// Evaluation-time distortion; Identity returns x unchanged (bit-exact).
Image apply_suite(const Image& x, const DistortionSuite& suite, std::uint64_t sample_id);

} // namespace ddcl::aug
