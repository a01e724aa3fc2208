#include "ddcl/representation.hpp"

#include <cmath>
#include <fstream>

#include "ddcl/binio.hpp"

namespace ddcl::repr {

namespace {
constexpr char kMagic[8] = {'D', 'D', 'C', 'L', 'R', 'E', 'P', 'R'};
constexpr std::uint32_t kVersion = 1;
} // namespace

std::size_t dir_len(std::size_t d, double dr) {
    if (d < 2) throw InvalidRatio("dir_len: representation length must be >= 2");
    const auto d_i = static_cast<std::size_t>(std::floor(dr * static_cast<double>(d)));
    if (d_i == 0 || d_i >= d)
        throw InvalidRatio("dir_len: DR=" + std::to_string(dr) + " with d=" + std::to_string(d) +
                           " leaves an empty block (d_I=" + std::to_string(d_i) + ")");
    return d_i;
}

SplitView split(std::span<const float> y, double dr) {
    const std::size_t d_i = dir_len(y.size(), dr);
    return {y.subspan(0, d_i), y.subspan(d_i)};
}

std::vector<float> concat(std::span<const float> y_dir, std::span<const float> y_dvr) {
    if (y_dir.empty() || y_dvr.empty())
        throw InvalidRatio("concat: both blocks must be nonempty");
    std::vector<float> out;
    out.reserve(y_dir.size() + y_dvr.size());
    out.insert(out.end(), y_dir.begin(), y_dir.end());
    out.insert(out.end(), y_dvr.begin(), y_dvr.end());
    return out;
}

MatF split_dir(const MatF& y, double dr) {
    const std::size_t d_i = dir_len(y.cols(), dr);
    MatF out(y.rows(), d_i);
    for (std::size_t i = 0; i < y.rows(); ++i)
        for (std::size_t j = 0; j < d_i; ++j) out(i, j) = y(i, j);
    return out;
}

MatF split_dvr(const MatF& y, double dr) {
    const std::size_t d_i = dir_len(y.cols(), dr);
    MatF out(y.rows(), y.cols() - d_i);
    for (std::size_t i = 0; i < y.rows(); ++i)
        for (std::size_t j = d_i; j < y.cols(); ++j) out(i, j - d_i) = y(i, j);
    return out;
}

MatF concat_cols(const MatF& dir, const MatF& dvr) {
    if (dir.rows() != dvr.rows()) throw ShapeError("concat_cols: row count mismatch");
    MatF out(dir.rows(), dir.cols() + dvr.cols());
    for (std::size_t i = 0; i < dir.rows(); ++i) {
        for (std::size_t j = 0; j < dir.cols(); ++j) out(i, j) = dir(i, j);
        for (std::size_t j = 0; j < dvr.cols(); ++j) out(i, dir.cols() + j) = dvr(i, j);
    }
    return out;
}

void Bank::put(std::uint64_t instance, std::uint32_t view, std::vector<float> values) {
    if (d_ == 0) d_ = values.size();
    if (values.size() != d_)
        throw ShapeError("Bank::put: expected length " + std::to_string(d_) + ", got " +
                         std::to_string(values.size()));
    records_[{instance, view}] = std::move(values);
}

const std::vector<float>& Bank::get(std::uint64_t instance, std::uint32_t view) const {
    auto it = records_.find({instance, view});
    if (it == records_.end())
        throw LookupError("Bank::get: no record for instance " + std::to_string(instance) +
                          ", view " + std::to_string(view));
    return it->second;
}

bool Bank::contains(std::uint64_t instance, std::uint32_t view) const {
    return records_.count({instance, view}) != 0;
}

void Bank::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("Bank::save: cannot open " + path);
    binio::put_bytes(os, kMagic, 8);
    binio::put_u32(os, kVersion);
    binio::put_u64(os, records_.size());
    binio::put_u32(os, static_cast<std::uint32_t>(d_));
    binio::put_f64(os, dr_);
    for (const auto& [key, values] : records_) {
        binio::put_u64(os, key.first);
        binio::put_u32(os, key.second);
        for (float v : values) binio::put_f32(os, v);
    }
    if (!os) throw IoError("Bank::save: write failed for " + path);
}

Bank Bank::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("Bank::load: cannot open " + path);
    char magic[8];
    binio::read_exact(is, magic, 8, "Bank::load");
    if (std::memcmp(magic, kMagic, 8) != 0)
        throw IoError("Bank::load: bad magic in " + path);
    const std::uint32_t version = binio::get_u32(is, "Bank::load");
    if (version != kVersion)
        throw IoError("Bank::load: unsupported version " + std::to_string(version));
    const std::uint64_t count = binio::get_u64(is, "Bank::load");
    const std::uint32_t d = binio::get_u32(is, "Bank::load");
    const double dr = binio::get_f64(is, "Bank::load");
    Bank bank(d, dr);
    for (std::uint64_t r = 0; r < count; ++r) {
        const std::uint64_t instance = binio::get_u64(is, "Bank::load");
        const std::uint32_t view = binio::get_u32(is, "Bank::load");
        std::vector<float> values(d);
        for (auto& v : values) v = binio::get_f32(is, "Bank::load");
        bank.put(instance, view, std::move(values));
    }
    return bank;
}

std::vector<float> compose_brick(const BrickSpec& spec, const Bank& bank) {
    const std::size_t d_i = dir_len(bank.dim(), bank.dr());
    const auto& dir_src = bank.get(spec.dir_instance, spec.dir_view);
    std::vector<float> out(bank.dim(), 0.0f);
    for (std::size_t j = 0; j < d_i; ++j) out[j] = dir_src[j];
    if (!spec.dvr_zero) {
        const auto& dvr_src = bank.get(spec.dvr_instance, spec.dvr_view);
        for (std::size_t j = d_i; j < bank.dim(); ++j) out[j] = dvr_src[j];
    }
    return out;
}

} // namespace ddcl::repr
