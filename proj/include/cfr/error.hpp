// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cfr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A vector or input that makes a similarity or loss undefined (zero norm, ...).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// Malformed JSON on a given 1-based line of a JSONL file.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed JSON that is missing a required field or has a wrong type.
class SchemaError : public Error {
public:
    SchemaError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Network failure after retries were exhausted.
class TransportError : public Error {
public:
    TransportError(const std::string& what, bool retryable)
        : Error(what), retryable_(retryable) {}
    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

/// A model service answered, but the answer does not fit the wire contract.
/// The raw response text is kept for diagnostics.
class ProtocolError : public Error {
public:
    ProtocolError(const std::string& what, std::string raw)
        : Error(what), raw_(std::move(raw)) {}
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace cfr
