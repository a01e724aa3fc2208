#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ddcl/errors.hpp"

namespace ddcl {

// Minimal dense row-major matrix. Value semantics, contiguous storage.
template <typename T>
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Mat from_rows(std::initializer_list<std::initializer_list<T>> rows) {
        Mat m(rows.size(), rows.size() ? rows.begin()->size() : 0);
        std::size_t i = 0;
        for (const auto& r : rows) {
            if (r.size() != m.cols_) throw ShapeError("Mat::from_rows: ragged rows");
            std::size_t j = 0;
            for (T v : r) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T* row(std::size_t i) { return data_.data() + i * cols_; }
    const T* row(std::size_t i) const { return data_.data() + i * cols_; }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const {
        for (T v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> data_;
};

using MatD = Mat<double>;
using MatF = Mat<float>;

} // namespace ddcl
