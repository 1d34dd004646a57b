#include "aad/series.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace aad {

void validate(const MonoSeries& x, const std::string& what) {
    if (!(x.fs > 0.0))
        fail(ErrorCode::invalid_spec, what + ": sampling rate must be positive");
    for (std::size_t i = 0; i < x.samples.size(); ++i) {
        if (!std::isfinite(x.samples[i]))
            fail(ErrorCode::data_error,
                 what + ": non-finite sample at index " + std::to_string(i));
    }
}

void validate(const MultiSeries& x, const std::string& what) {
    if (!(x.fs > 0.0))
        fail(ErrorCode::invalid_spec, what + ": sampling rate must be positive");
    if (x.channels.size() != x.samples.cols())
        fail(ErrorCode::schema_error,
             what + ": " + std::to_string(x.channels.size()) + " labels for " +
                 std::to_string(x.samples.cols()) + " columns");
    std::unordered_set<std::string> seen;
    for (const auto& label : x.channels) {
        if (!seen.insert(label).second)
            fail(ErrorCode::schema_error, what + ": duplicate channel label '" + label + "'");
    }
    for (std::size_t r = 0; r < x.samples.rows(); ++r) {
        const double* row = x.samples.row(r);
        for (std::size_t c = 0; c < x.samples.cols(); ++c) {
            if (!std::isfinite(row[c]))
                fail(ErrorCode::data_error, what + ": non-finite sample at row " +
                                                std::to_string(r) + ", column " +
                                                std::to_string(c));
        }
    }
}

MultiSeries select_channels(const MultiSeries& x, std::span<const std::string> labels) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < x.channels.size(); ++c)
        index.emplace(x.channels[c], c);

    std::vector<std::size_t> cols;
    cols.reserve(labels.size());
    std::ostringstream missing;
    for (const auto& label : labels) {
        auto it = index.find(label);
        if (it == index.end()) {
            if (missing.tellp() > 0) missing << ", ";
            missing << label;
        } else {
            cols.push_back(it->second);
        }
    }
    if (missing.tellp() > 0)
        fail(ErrorCode::layout_error, "unknown channel labels: " + missing.str());

    MultiSeries out;
    out.fs = x.fs;
    out.channels.assign(labels.begin(), labels.end());
    out.samples = Matrix(x.samples.rows(), cols.size());
    for (std::size_t r = 0; r < x.samples.rows(); ++r) {
        const double* src = x.samples.row(r);
        double* dst = out.samples.row(r);
        for (std::size_t j = 0; j < cols.size(); ++j) dst[j] = src[cols[j]];
    }
    return out;
}

std::size_t find_channel(const MultiSeries& x, const std::string& label) {
    for (std::size_t c = 0; c < x.channels.size(); ++c)
        if (x.channels[c] == label) return c;
    fail(ErrorCode::layout_error, "unknown channel label: " + label);
}

} // namespace aad
