#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lexforge {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed input text (JSON, TSV, config). Carries the 1-based position when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"
                     : what),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Well-formed input that breaks a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class SegmentationError : public Error {
public:
    using Error::Error;
};

class ProviderError : public Error {
public:
    using Error::Error;
};

class CacheMissError : public Error {
public:
    explicit CacheMissError(std::string key)
        : Error("replay cache miss for key " + key), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// LLM output that could not be interpreted. Keeps the raw text for auditing.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}

    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class EmptyOutputError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

/// Kendall's tau with a zero denominator (a constant score vector).
class UndefinedTauError : public Error {
public:
    using Error::Error;
};

}  // namespace lexforge
