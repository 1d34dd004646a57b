#pragma once

#include <stdexcept>
#include <string>

namespace aad {

enum class ErrorCode {
    invalid_spec,       // filter/lag/config parameters violate their invariants
    length_error,       // signal too short for the requested operation
    unsupported_ratio,  // resampling ratio not expressible as a small rational
    degenerate_reference,
    empty_input,
    config_error,
    rank_deficient,
    degenerate_target,
    schema_error,       // channel sets / shapes inconsistent between objects
    layout_error,
    format_error,       // on-disk bytes do not match the declared format
    data_error,         // file parsed but contains invalid values (NaN/Inf)
    range_error,
    undefined_correlation,
    io_error,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    // CLI exit-code category: data/format problems are 3, everything else 2.
    bool is_data_error() const noexcept {
        return code_ == ErrorCode::format_error || code_ == ErrorCode::data_error ||
               code_ == ErrorCode::io_error;
    }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

} // namespace aad
