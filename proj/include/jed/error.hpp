#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jed {

/// Machine-readable failure classes. The CLI maps each one to a distinct
/// exit code and prints the category name on stderr.
enum class ErrorCategory {
    config = 2,
    shape = 3,
    numerical = 4,
    rank = 5,
    capacity = 6,
    contract = 7,
    divergence = 8,
    format = 9,
    io = 10,
};

constexpr std::string_view category_name(ErrorCategory c) noexcept {
    switch (c) {
        case ErrorCategory::config: return "config";
        case ErrorCategory::shape: return "shape";
        case ErrorCategory::numerical: return "numerical";
        case ErrorCategory::rank: return "rank";
        case ErrorCategory::capacity: return "capacity";
        case ErrorCategory::contract: return "contract";
        case ErrorCategory::divergence: return "divergence";
        case ErrorCategory::format: return "format";
        case ErrorCategory::io: return "io";
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

/// Raised by the sampler when an iterate stops being finite.
class DivergenceError : public Error {
public:
    DivergenceError(int level, int step, const std::string& what)
        : Error(ErrorCategory::divergence, what), level_(level), step_(step) {}

    int level() const noexcept { return level_; }
    int step() const noexcept { return step_; }

private:
    int level_;
    int step_;
};

/// Raised when a binary file does not parse; carries the byte offset.
class FormatError : public Error {
public:
    FormatError(std::size_t offset, const std::string& what)
        : Error(ErrorCategory::format, what + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace jed
