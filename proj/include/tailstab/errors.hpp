#pragma once

#include <stdexcept>
#include <string>

namespace tailstab {

enum class ErrorKind {
    InvalidArgument,   // parameter outside the documented domain
    InsufficientData,  // too few exceedances / samples for the requested statistic
    Unsupported,       // request is well-formed but deliberately not implemented
    Io,                // filesystem failure
    Config,            // experiment configuration failed validation
    Numerical,         // solver failed to converge
};

/// Library error. Every throw site names the offending quantity.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, const std::string& what) {
    if (!condition) fail(ErrorKind::InvalidArgument, what);
}

}  // namespace tailstab
