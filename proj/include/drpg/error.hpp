#pragma once

#include <stdexcept>
#include <string>

namespace drpg {

enum class ErrorKind {
    ShapeMismatch,
    NonFinite,
    OutOfBounds,
    InvalidArgument,
    Format,
    Io,
};

const char* to_string(ErrorKind kind);

/// Structured error thrown by every module. `kind()` lets callers branch
/// without parsing the message.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace drpg
