#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace ddcl {

// Cross-platform deterministic RNG. std::<random> distributions are
// implementation-defined, so every draw here is hand-rolled; replay must be
// byte-exact across compilers and worker counts.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Order-sensitive 64-bit fold used to derive independent streams from a seed
// plus structured identifiers (sample index, view, epoch, transform tag...).
inline std::uint64_t fold_u64(std::uint64_t acc, std::uint64_t v) {
    std::uint64_t s = acc ^ (v + 0x9e3779b97f4a7c15ULL + (acc << 6) + (acc >> 2));
    return splitmix64(s);
}

inline std::uint64_t fold_str(std::uint64_t acc, std::string_view tag) {
    for (unsigned char c : tag) acc = fold_u64(acc, c);
    return fold_u64(acc, 0x5aULL ^ tag.size());
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x3243f6a8885a308dULL) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    // xoshiro256++
    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n), n > 0
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller, one value per call (the sine twin is discarded so replay
    // never depends on call pairing).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    const std::uint64_t* state() const { return s_; }
    void set_state(const std::uint64_t* w) { for (int i = 0; i < 4; ++i) s_[i] = w[i]; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4] = {};
};

// Stream identifier for augmentation draws: the same (seed, stream) always
// produces identical transform parameters regardless of scheduling.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t sample = 0;
    std::uint32_t view = 0;
    std::uint64_t epoch = 0;

    std::uint64_t derive(std::string_view tag) const {
        std::uint64_t h = fold_u64(seed, 0xddc1ULL);
        h = fold_u64(h, sample);
        h = fold_u64(h, view);
        h = fold_u64(h, epoch);
        return fold_str(h, tag);
    }

    Rng rng(std::string_view tag) const { return Rng(derive(tag)); }
};

} // namespace ddcl
