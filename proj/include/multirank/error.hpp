#ifndef MULTIRANK_ERROR_HPP
#define MULTIRANK_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace multirank {

enum class ErrorCode {
    invalid_argument,
    degenerate_covariance,
    infeasible,
    too_large,
    parse_error,
    io_error,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::degenerate_covariance: return "degenerate_covariance";
        case ErrorCode::infeasible: return "infeasible";
        case ErrorCode::too_large: return "too_large";
        case ErrorCode::parse_error: return "parse_error";
        case ErrorCode::io_error: return "io_error";
    }
    return "unknown";
}

/// All library failures are reported through this exception; `code()` is
/// stable and is what the command-line report exposes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const char* what) {
    if (!condition) fail(code, what);
}

} // namespace detail
} // namespace multirank

#endif
