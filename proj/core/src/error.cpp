#include "scalewave/error.hpp"

namespace scalewave {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::shape_mismatch: return "shape_mismatch";
        case ErrorCode::contract_violation: return "contract_violation";
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::config_invalid: return "config_invalid";
        case ErrorCode::undefined_metric: return "undefined_metric";
        case ErrorCode::numeric_failure: return "numeric_failure";
        case ErrorCode::io_error: return "io_error";
        case ErrorCode::wav_bad_magic: return "wav_bad_magic";
        case ErrorCode::wav_truncated_chunk: return "wav_truncated_chunk";
        case ErrorCode::wav_unsupported_format: return "wav_unsupported_format";
        case ErrorCode::wav_unsupported_depth: return "wav_unsupported_depth";
    }
    return "unknown_error";
}

}  // namespace scalewave
