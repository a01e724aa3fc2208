#include "doctest.h"

#include <cmath>

#include "ddcl/augmentation.hpp"
#include "ddcl/threadpool.hpp"

using namespace ddcl;
namespace a = ddcl::aug;

namespace {

Image smooth_image(std::size_t n = 64) {
    Image img(n, n, 3);
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) {
            const float fy = static_cast<float>(y) / n, fx = static_cast<float>(x) / n;
            img.at(y, x, 0) = 0.5f + 0.4f * std::sin(3.0f * fy) * std::cos(2.0f * fx);
            img.at(y, x, 1) = 0.3f + 0.3f * fx;
            img.at(y, x, 2) = 0.6f - 0.2f * fy;
        }
    return img;
}

Image random_image(Rng& rng, std::size_t n = 32) {
    Image img(n, n, 3);
    for (auto& v : img.pixels) v = static_cast<float>(rng.uniform());
    return img;
}

bool in_unit_range(const Image& img) {
    for (float v : img.pixels)
        if (v < 0.0f || v > 1.0f) return false;
    return true;
}

} // namespace

TEST_CASE("identity strategy reproduces the input bit-exactly") {
    Image x = smooth_image();
    auto s = a::AugStrategy::identity(64, 64);
    RngStream stream{123, 5, 0, 2};
    CHECK(a::apply_strategy(x, s, stream) == x);
}

TEST_CASE("view pairs replay bit-exactly for a fixed stream") {
    Image x = smooth_image();
    auto s = a::AugStrategy::caug(64, 64);
    RngStream stream{99, 11, 0, 3};
    a::ViewPair p1 = a::make_view_pair(x, s, stream);
    a::ViewPair p2 = a::make_view_pair(x, s, stream);
    CHECK(p1.v1 == p2.v1);
    CHECK(p1.v2 == p2.v2);
    CHECK_FALSE(p1.v1 == p1.v2);  // the two views are independent draws

    RngStream other = stream;
    other.epoch = 4;
    CHECK_FALSE(a::make_view_pair(x, s, other).v1 == p1.v1);
}

TEST_CASE("strategy presets nest: CAug = BAug + rotation") {
    Image x = smooth_image();
    RngStream stream{7, 1, 0, 0};
    auto baug = a::AugStrategy::baug(64, 64);
    auto caug = a::AugStrategy::caug(64, 64);

    // per-transform streams are isolated: disabling the rotation makes the
    // CAug pipeline reproduce BAug exactly
    auto caug_norot = caug;
    caug_norot.rotation_prob = 0.0;
    CHECK(a::apply_strategy(x, caug_norot, stream) == a::apply_strategy(x, baug, stream));

    // with rotation on, CAug equals BAug followed by the drawn rotation
    Image base = a::apply_strategy(x, baug, stream);
    Rng rot_rng = stream.rng("rot");
    REQUIRE(rot_rng.bernoulli(1.0));
    const double theta = rot_rng.uniform(-90.0, 90.0);
    CHECK(a::apply_strategy(x, caug, stream) == a::rotate(base, theta));

    auto plus = a::AugStrategy::caug_plus(64, 64);
    CHECK(plus.rotation_prob == 1.0);
    CHECK(plus.use_elastic);
    CHECK(plus.elastic_alpha == 100.0);
    CHECK(plus.elastic_sigma == 5.0);
}

TEST_CASE("rotate") {
    Image x = smooth_image();
    SUBCASE("zero angle is the identity") { CHECK(a::rotate(x, 0.0) == x); }
    SUBCASE("rotation composed with its inverse is close to the identity") {
        Image twice = a::rotate(a::rotate(x, 90.0), -90.0);
        double err = 0.0;
        // interior only; corners leave the frame under rotation
        for (std::size_t y = 16; y < 48; ++y)
            for (std::size_t xx = 16; xx < 48; ++xx)
                for (std::size_t c = 0; c < 3; ++c)
                    err += std::fabs(twice.at(y, xx, c) - x.at(y, xx, c));
        err /= 32.0 * 32.0 * 3.0;
        CHECK(err <= 2e-2);
    }
    SUBCASE("point tracking at 90 degrees") {
        Image pt(65, 65, 1);
        pt.at(32, 52, 0) = 1.0f;  // 20 px right of center
        Image rot = a::rotate(pt, 90.0);
        // y-down convention: content at angle 0 moves to +y (below center)
        CHECK(rot.at(52, 32, 0) == doctest::Approx(1.0f).epsilon(1e-4));
        CHECK(rot.at(32, 52, 0) == doctest::Approx(0.0f).epsilon(1e-4));
    }
    SUBCASE("angle domain enforced") { CHECK_THROWS_AS(a::rotate(x, 181.0), InvalidInput); }
}

TEST_CASE("elastic_transform") {
    Image x = smooth_image();
    SUBCASE("alpha 0 is a bit-exact identity") {
        Rng rng(5);
        CHECK(a::elastic_transform(x, 0.0, 5.0, rng) == x);
    }
    SUBCASE("deterministic under an equal rng") {
        Rng r1(77), r2(77);
        CHECK(a::elastic_transform(x, 30.0, 4.0, r1) == a::elastic_transform(x, 30.0, 4.0, r2));
    }
    SUBCASE("displacement stays within alpha pixels") {
        // constant image: any pixel deeper than alpha+1 from the border can
        // only sample inside the frame, so it keeps the constant exactly
        Image flat(64, 64, 1, 0.625f);
        const double alpha = 6.0;
        Rng rng(13);
        Image warped = a::elastic_transform(flat, alpha, 3.0, rng);
        const std::size_t margin = static_cast<std::size_t>(alpha) + 1;
        for (std::size_t y = margin; y < 64 - margin; ++y)
            for (std::size_t xx = margin; xx < 64 - margin; ++xx)
                CHECK(warped.at(y, xx, 0) == 0.625f);
    }
    SUBCASE("parameter domain") {
        Rng rng(1);
        CHECK_THROWS_AS(a::elastic_transform(x, -1.0, 5.0, rng), InvalidInput);
        CHECK_THROWS_AS(a::elastic_transform(x, 1.0, 0.0, rng), InvalidInput);
    }
}

TEST_CASE("pixel transforms") {
    Image x = smooth_image();
    SUBCASE("flip twice is the identity") {
        CHECK(a::horizontal_flip(a::horizontal_flip(x)) == x);
    }
    SUBCASE("grayscale output has equal channels") {
        Image g = a::to_grayscale(x);
        for (std::size_t y = 0; y < g.height; ++y)
            for (std::size_t xx = 0; xx < g.width; ++xx) {
                CHECK(g.at(y, xx, 0) == g.at(y, xx, 1));
                CHECK(g.at(y, xx, 1) == g.at(y, xx, 2));
            }
    }
    SUBCASE("color jitter preserves gray images' channel equality") {
        Image g = a::to_grayscale(x);
        Rng rng(3);
        Image j = a::color_jitter(g, rng, 0.4, 0.4, 0.4, 0.1);
        for (std::size_t i = 0; i < j.pixels.size(); i += 3) {
            CHECK(j.pixels[i] == doctest::Approx(j.pixels[i + 1]).epsilon(1e-6));
            CHECK(j.pixels[i + 1] == doctest::Approx(j.pixels[i + 2]).epsilon(1e-6));
        }
    }
    SUBCASE("blur keeps range and is deterministic") {
        Image b = a::gaussian_blur(x, 1.3);
        CHECK(in_unit_range(b));
        CHECK(b == a::gaussian_blur(x, 1.3));
    }
}

TEST_CASE("random_resized_crop") {
    Image x = smooth_image();
    SUBCASE("full-image crop at matching size is the identity") {
        Rng rng(4);
        CHECK(a::random_resized_crop(x, rng, 64, 64, 1.0, 1.0, 1.0, 1.0) == x);
    }
    SUBCASE("output geometry always matches the target") {
        Rng rng(8);
        for (int t = 0; t < 50; ++t) {
            Image out = a::random_resized_crop(x, rng, 48, 40, 0.2, 1.0, 0.75, 4.0 / 3.0);
            CHECK(out.height == 48);
            CHECK(out.width == 40);
            CHECK(in_unit_range(out));
        }
    }
    SUBCASE("impossible draws fall back to a center crop") {
        Rng rng(2);
        // ratio forces windows wider than the image: all 10 attempts fail
        Image out = a::random_resized_crop(x, rng, 32, 32, 1.0, 1.0, 50.0, 60.0);
        CHECK(out.height == 32);
        CHECK(out.width == 32);
    }
}

TEST_CASE("pipeline outputs stay in [0,1]") {
    Rng rng(2024);
    auto s = a::AugStrategy::caug_plus(32, 32);
    s.use_blur = true;
    for (int t = 0; t < 10; ++t) {
        Image x = random_image(rng);
        RngStream stream{55, static_cast<std::uint64_t>(t), 0, 1};
        CHECK(in_unit_range(a::apply_strategy(x, s, stream)));
    }
}

TEST_CASE("batch generation is independent of worker count") {
    Rng rng(31);
    std::vector<Image> imgs;
    std::vector<const Image*> ptrs;
    std::vector<std::uint64_t> ids;
    for (int i = 0; i < 12; ++i) imgs.push_back(random_image(rng, 32));
    for (int i = 0; i < 12; ++i) {
        ptrs.push_back(&imgs[i]);
        ids.push_back(100 + i);
    }
    auto s = a::AugStrategy::caug(32, 32);
    set_worker_count(1);
    auto seq = a::make_view_pairs(ptrs, ids, s, 4242, 7);
    set_worker_count(4);
    auto par = a::make_view_pairs(ptrs, ids, s, 4242, 7);
    set_worker_count(0);
    REQUIRE(seq.size() == par.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
        CHECK(seq[i].v1 == par[i].v1);
        CHECK(seq[i].v2 == par[i].v2);
    }
}

TEST_CASE("distortion suites") {
    Image x = smooth_image();
    SUBCASE("identity suite returns the input object unchanged") {
        a::DistortionSuite id{a::SuiteKind::identity, 12};
        CHECK(a::apply_suite(x, id, 3) == x);
    }
    SUBCASE("suites replay deterministically per sample") {
        for (auto kind : {a::SuiteKind::cj, a::SuiteKind::cj_flip, a::SuiteKind::cj_90,
                          a::SuiteKind::cj_90_et}) {
            a::DistortionSuite s{kind, 555};
            Image d1 = a::apply_suite(x, s, 9);
            Image d2 = a::apply_suite(x, s, 9);
            CHECK(d1 == d2);
            CHECK_FALSE(d1 == x);
            CHECK(in_unit_range(d1));
            // a different sample draws different parameters
            CHECK_FALSE(a::apply_suite(x, s, 10) == d1);
        }
    }
    SUBCASE("robustness_set set carries the robustness column order") {
        auto suites = a::DistortionSuite::robustness_set(1);
        REQUIRE(suites.size() == 4);
        CHECK(suites[0].name() == "CJ");
        CHECK(suites[1].name() == "CJ+Flip");
        CHECK(suites[2].name() == "CJ+90°");
        CHECK(suites[3].name() == "CJ+90°+ET");
        CHECK(a::DistortionSuite::by_id("cj_90", 1).kind == a::SuiteKind::cj_90);
        CHECK_THROWS_AS(a::DistortionSuite::by_id("bogus", 1), InvalidInput);
    }
}
