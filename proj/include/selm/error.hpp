#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace selm {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Raised by the unregularized normal-equation solve when H^T H is rank deficient.
class SingularMatrixError : public Error {
public:
    using Error::Error;
};

/// Text-format parse failure. `line()` is 1-based; 0 means "whole file".
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class VersionError : public Error {
public:
    using Error::Error;
};

class TruncatedFileError : public Error {
public:
    using Error::Error;
};

/// Collects non-fatal notes (clamped parameters, degenerate inputs) emitted during training.
struct Diagnostics {
    std::vector<std::string> messages;

    void note(std::string message) { messages.push_back(std::move(message)); }
    bool empty() const noexcept { return messages.empty(); }
};

inline void note(Diagnostics* diag, std::string message) {
    if (diag != nullptr) diag->note(std::move(message));
}

}  // namespace selm
