#pragma once

#include <stdexcept>
#include <string>

namespace ihdr {

/// Coarse failure classes; the CLI maps them onto exit codes.
enum class ErrorKind {
    Usage,     // bad arguments or preconditions supplied by the caller
    Data,      // missing/malformed files, inconsistent inputs
    Internal,  // invariant violations (non-finite activations, etc.)
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) { throw Error(ErrorKind::Usage, msg); }
[[noreturn]] inline void throw_data(const std::string& msg) { throw Error(ErrorKind::Data, msg); }
[[noreturn]] inline void throw_internal(const std::string& msg) { throw Error(ErrorKind::Internal, msg); }

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage: return "usage";
        case ErrorKind::Data: return "data";
        case ErrorKind::Internal: return "internal";
    }
    return "internal";
}

}  // namespace ihdr
