#include "abaf/error.hpp"

namespace abaf {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::MissingFile: return "missing-file";
        case ErrorCode::MalformedHeader: return "malformed-header";
        case ErrorCode::UnsupportedCodec: return "unsupported-codec";
        case ErrorCode::MissingColumn: return "missing-column";
        case ErrorCode::InvalidValue: return "invalid-value";
        case ErrorCode::OutOfRange: return "out-of-range";
        case ErrorCode::DuplicateId: return "duplicate-id";
        case ErrorCode::IoFailure: return "io-failure";
        case ErrorCode::ShapeMismatch: return "shape-mismatch";
        case ErrorCode::EmptyInput: return "empty-input";
        case ErrorCode::TooShort: return "too-short";
        case ErrorCode::DegenerateData: return "degenerate-data";
        case ErrorCode::FormatVersion: return "format-version";
    }
    return "unknown";
}

static std::string compose(ErrorCode code, const std::string& message, const std::string& field) {
    std::string out(to_string(code));
    if (!field.empty()) out += " [" + field + "]";
    out += ": " + message;
    return out;
}

Error::Error(ErrorCode code, std::string message, std::string field)
    : std::runtime_error(compose(code, message, field)), code_(code), field_(std::move(field)) {}

void fail(ErrorCode code, const std::string& message, const std::string& field) {
    throw Error(code, message, field);
}

}  // namespace abaf
