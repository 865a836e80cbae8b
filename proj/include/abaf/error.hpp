#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace abaf {

enum class ErrorCode {
    InvalidArgument,
    MissingFile,
    MalformedHeader,
    UnsupportedCodec,
    MissingColumn,
    InvalidValue,
    OutOfRange,
    DuplicateId,
    IoFailure,
    ShapeMismatch,
    EmptyInput,
    TooShort,
    DegenerateData,
    FormatVersion,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. `field()` names the header field, column or
/// argument that failed validation, when there is one.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string field = {});

    ErrorCode code() const noexcept { return code_; }
    const std::string& field() const noexcept { return field_; }

private:
    ErrorCode code_;
    std::string field_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message, const std::string& field = {});

inline void require(bool condition, ErrorCode code, const std::string& message,
                    const std::string& field = {}) {
    if (!condition) fail(code, message, field);
}

}  // namespace abaf
