#pragma once

#include <stdexcept>
#include <string>

namespace fuzzvad {

/// Error categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
    Usage = 1,
    Io = 2,
    Domain = 3,
    Numeric = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

struct UsageError : Error {
    explicit UsageError(const std::string& w) : Error(ErrorKind::Usage, w) {}
};

/// File access and parse failures.
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorKind::Io, w) {}
};

/// Values outside their valid domain, inconsistent shapes or configs.
struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ErrorKind::Domain, w) {}
};

/// Degenerate data or non-finite numbers during a computation.
struct NumericError : Error {
    explicit NumericError(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};

}  // namespace fuzzvad
