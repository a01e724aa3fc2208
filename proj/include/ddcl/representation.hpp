#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ddcl/errors.hpp"
#include "ddcl/mat.hpp"

namespace ddcl::repr {

// DIR block length for a d-dimensional representation under disentangling
// ratio dr: floor(dr * d). Throws InvalidRatio when the split would leave
// either block empty.
std::size_t dir_len(std::size_t d, double dr);

struct SplitView {
    std::span<const float> dir, dvr;
};

// Slice semantics: DIR is the first dir_len components, DVR the rest.
SplitView split(std::span<const float> y, double dr);
std::vector<float> concat(std::span<const float> y_dir, std::span<const float> y_dvr);

// Batch (rows = samples) column slices.
MatF split_dir(const MatF& y, double dr);
MatF split_dvr(const MatF& y, double dr);
MatF concat_cols(const MatF& dir, const MatF& dvr);

// ---- representation bank ----

inline constexpr std::uint32_t kZeroView = 0xffffffffu;

struct BrickSpec {
    std::uint64_t dir_instance = 0;
    std::uint32_t dir_view = 0;
    // DVR source: either a (instance, view) reference or all-zeros.
    bool dvr_zero = false;
    std::uint64_t dvr_instance = 0;
    std::uint32_t dvr_view = 0;
};

// Keyed store of full representations for the brick study. Persists as the
// flat binary bank format (magic "DDCLREPR").
class Bank {
public:
    Bank() = default;
    Bank(std::size_t d, double dr) : d_(d), dr_(dr) {}

    std::size_t dim() const { return d_; }
    double dr() const { return dr_; }
    std::size_t size() const { return records_.size(); }

    void put(std::uint64_t instance, std::uint32_t view, std::vector<float> values);
    const std::vector<float>& get(std::uint64_t instance, std::uint32_t view) const;
    bool contains(std::uint64_t instance, std::uint32_t view) const;

    const std::map<std::pair<std::uint64_t, std::uint32_t>, std::vector<float>>& records() const {
        return records_;
    }

    void save(const std::string& path) const;
    static Bank load(const std::string& path);

private:
    std::size_t d_ = 0;
    double dr_ = 0.8;
    std::map<std::pair<std::uint64_t, std::uint32_t>, std::vector<float>> records_;
};

// DIR block from spec.dir source concatenated with the DVR block from
// spec.dvr source (or zeros). Missing references raise LookupError.
std::vector<float> compose_brick(const BrickSpec& spec, const Bank& bank);

} // namespace ddcl::repr
