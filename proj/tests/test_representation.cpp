#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ddcl/representation.hpp"
#include "ddcl/rng.hpp"

using namespace ddcl;
namespace r = ddcl::repr;

namespace {

std::vector<float> random_vec(Rng& rng, std::size_t n) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-3.0, 3.0));
    return v;
}

} // namespace

TEST_CASE("dir_len follows the floor rule") {
    CHECK(r::dir_len(4, 0.5) == 2);
    CHECK(r::dir_len(512, 0.8) == 409);  // floor(409.6)
    CHECK(r::dir_len(64, 0.8) == 51);
    CHECK_THROWS_AS(r::dir_len(10, 0.05), InvalidRatio);  // d_I = 0
    SUBCASE("monotone nondecreasing in DR") {
        for (std::size_t d : {7u, 64u, 513u}) {
            std::size_t prev = 0;
            for (double dr = 0.2; dr < 0.86; dr += 0.05) {
                const std::size_t cur = r::dir_len(d, dr);
                CHECK(cur >= prev);
                prev = cur;
            }
        }
    }
}

TEST_CASE("split and concat round trip bit-exactly") {
    std::vector<float> y{1.0f, 2.0f, 3.0f, 4.0f};
    auto view = r::split(y, 0.5);
    CHECK(view.dir.size() == 2);
    CHECK(view.dir[0] == 1.0f);
    CHECK(view.dvr[0] == 3.0f);
    CHECK(r::concat(view.dir, view.dvr) == y);

    Rng rng(17);
    for (double dr : {0.2, 0.4, 0.6, 0.8}) {
        for (std::size_t d : {5u, 64u, 1000u, 8192u}) {
            auto vec = random_vec(rng, d);
            auto sp = r::split(vec, dr);
            CHECK(r::concat(sp.dir, sp.dvr) == vec);
        }
    }
    CHECK_THROWS_AS(r::concat(std::span<const float>(y).subspan(0, 4),
                              std::span<const float>(y).subspan(4)),
                    InvalidRatio);
}

TEST_CASE("batch column splits agree with the vector form") {
    Rng rng(5);
    MatF y(3, 10);
    for (auto& v : y.storage()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    MatF yi = r::split_dir(y, 0.8);
    MatF yv = r::split_dvr(y, 0.8);
    CHECK(yi.cols() == 8);
    CHECK(yv.cols() == 2);
    MatF back = r::concat_cols(yi, yv);
    CHECK(back.storage() == y.storage());
}

TEST_CASE("bank stores, saves and reloads records") {
    Rng rng(9);
    r::Bank bank(6, 0.5);
    auto a = random_vec(rng, 6), b = random_vec(rng, 6);
    bank.put(1, 0, a);
    bank.put(2, 3, b);
    CHECK(bank.get(1, 0) == a);
    CHECK_THROWS_AS(bank.get(7, 0), LookupError);
    CHECK_THROWS_AS(bank.put(3, 0, random_vec(rng, 5)), ShapeError);

    const std::string path = "bank_test.ddclrepr";
    bank.save(path);
    r::Bank loaded = r::Bank::load(path);
    CHECK(loaded.dim() == 6);
    CHECK(loaded.dr() == 0.5);
    CHECK(loaded.get(1, 0) == a);
    CHECK(loaded.get(2, 3) == b);

    SUBCASE("file header matches the documented layout") {
        std::ifstream is(path, std::ios::binary);
        char magic[8];
        is.read(magic, 8);
        CHECK(std::string(magic, 8) == "DDCLREPR");
    }
    SUBCASE("truncated file reports an offset") {
        std::ifstream is(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        std::ofstream os("bank_trunc.ddclrepr", std::ios::binary);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 7));
        os.close();
        CHECK_THROWS_AS(r::Bank::load("bank_trunc.ddclrepr"), IoError);
        std::remove("bank_trunc.ddclrepr");
    }
    std::remove(path.c_str());
}

TEST_CASE("compose_brick") {
    Rng rng(21);
    r::Bank bank(10, 0.8);  // d_I = 8
    auto a = random_vec(rng, 10), b = random_vec(rng, 10);
    bank.put(1, 0, a);
    bank.put(2, 2, b);

    SUBCASE("identity brick is a no-op") {
        r::BrickSpec spec;
        spec.dir_instance = 1;
        spec.dir_view = 0;
        spec.dvr_instance = 1;
        spec.dvr_view = 0;
        CHECK(r::compose_brick(spec, bank) == a);
    }
    SUBCASE("zero brick zeroes only the DVR block") {
        r::BrickSpec spec;
        spec.dir_instance = 1;
        spec.dvr_zero = true;
        auto out = r::compose_brick(spec, bank);
        for (std::size_t j = 0; j < 8; ++j) CHECK(out[j] == a[j]);
        for (std::size_t j = 8; j < 10; ++j) CHECK(out[j] == 0.0f);
    }
    SUBCASE("cross-instance brick mixes blocks componentwise") {
        r::BrickSpec spec;
        spec.dir_instance = 1;
        spec.dir_view = 0;
        spec.dvr_instance = 2;
        spec.dvr_view = 2;
        auto out = r::compose_brick(spec, bank);
        for (std::size_t j = 0; j < 8; ++j) CHECK(out[j] == a[j]);
        for (std::size_t j = 8; j < 10; ++j) CHECK(out[j] == b[j]);
    }
    SUBCASE("missing reference raises a lookup error") {
        r::BrickSpec spec;
        spec.dir_instance = 99;
        CHECK_THROWS_AS(r::compose_brick(spec, bank), LookupError);
    }
}
