#pragma once

#include <stdexcept>
#include <string>

namespace lff {

// Base for all library errors. Subclasses map to the failure categories the
// public operations document (dimension, configuration, format, domain, ...).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape disagreement between tensors or between a tensor and parameters.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Invalid run configuration (bad window plan, dims too small, ...).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Malformed on-disk data. Carries the byte offset where parsing failed.
class FormatError : public Error {
public:
    FormatError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
          offset_(byte_offset) {}
    std::size_t byte_offset() const { return offset_; }

private:
    std::size_t offset_;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

// Non-finite value produced where the contract requires finite ones.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Input fails a semantic check (e.g. a mask that is not binary).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Correlation requested on a degenerate (zero-variance) sample.
class UndefinedCorrelationError : public Error {
public:
    explicit UndefinedCorrelationError(const std::string& msg) : Error(msg) {}
};

}  // namespace lff
