#pragma once

#include <stdexcept>
#include <string>

namespace scalewave {

// Error taxonomy shared by the whole library. WAV ingestion gets one code per
// failure class so callers can branch without string matching.
enum class ErrorCode {
    shape_mismatch,
    contract_violation,
    invalid_argument,
    config_invalid,
    undefined_metric,
    numeric_failure,
    io_error,
    wav_bad_magic,
    wav_truncated_chunk,
    wav_unsupported_format,
    wav_unsupported_depth,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void check(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

inline void check_shape(bool condition, const std::string& message) {
    check(condition, ErrorCode::shape_mismatch, message);
}

inline void check_contract(bool condition, const std::string& message) {
    check(condition, ErrorCode::contract_violation, message);
}

}  // namespace scalewave
