#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "aad/errors.hpp"

namespace aad {

// Dense row-major matrix of doubles. Time-major throughout this library:
// rows are samples, columns are channels (or lagged regressors).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::size_t size() const noexcept { return data_.size(); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Uniformly sampled single-channel signal, e.g. a speech envelope.
struct MonoSeries {
    std::vector<double> samples;
    double fs = 0.0; // Hz

    std::size_t length() const noexcept { return samples.size(); }
    double duration_s() const noexcept { return fs > 0 ? samples.size() / fs : 0.0; }
};

// Uniformly sampled multichannel signal (time-major), e.g. an EEG record.
struct MultiSeries {
    Matrix samples; // T x N
    double fs = 0.0;
    std::vector<std::string> channels;

    std::size_t length() const noexcept { return samples.rows(); }
    std::size_t n_channels() const noexcept { return samples.cols(); }
};

// Throw unless fs > 0, labels are unique and match the column count, and all
// samples are finite.
void validate(const MonoSeries& x, const std::string& what = "series");
void validate(const MultiSeries& x, const std::string& what = "series");

// Subset/reorder channels by label. Unknown labels raise layout_error listing
// every missing one.
MultiSeries select_channels(const MultiSeries& x, std::span<const std::string> labels);

std::size_t find_channel(const MultiSeries& x, const std::string& label);

} // namespace aad
