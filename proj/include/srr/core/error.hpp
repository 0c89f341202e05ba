#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace srr {

// Categories are part of the CLI contract: failures print `error: <category>: <message>`.
enum class ErrorCategory { usage, io, format, dimension, config, numeric };

inline std::string_view category_name(ErrorCategory c) noexcept {
    switch (c) {
        case ErrorCategory::usage: return "usage";
        case ErrorCategory::io: return "io";
        case ErrorCategory::format: return "format";
        case ErrorCategory::dimension: return "dimension";
        case ErrorCategory::config: return "config";
        case ErrorCategory::numeric: return "numeric";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& what) {
    throw Error(category, what);
}

inline void require(bool condition, ErrorCategory category, const std::string& what) {
    if (!condition) fail(category, what);
}

}  // namespace srr
