#pragma once

#include <stdexcept>
#include <string>

namespace ccm {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorKind {
    Usage = 1,     // bad flags / bad invocation
    Input = 2,     // malformed or missing input files
    Remote = 3,    // counter endpoint / embedding service failures
    Internal = 4,  // invariant violation inside the library
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

inline Error usage_error(std::string msg) { return Error(ErrorKind::Usage, std::move(msg)); }
inline Error input_error(std::string msg) { return Error(ErrorKind::Input, std::move(msg)); }
inline Error remote_error(std::string msg) { return Error(ErrorKind::Remote, std::move(msg)); }
inline Error internal_error(std::string msg) { return Error(ErrorKind::Internal, std::move(msg)); }

}  // namespace ccm
