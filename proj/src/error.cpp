#include "drpg/error.hpp"

namespace drpg {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::ShapeMismatch: return "shape mismatch";
    case ErrorKind::NonFinite: return "non-finite value";
    case ErrorKind::OutOfBounds: return "out of bounds";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Io: return "i/o error";
    }
    return "error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(what), kind_(kind)
{
}

}  // namespace drpg
