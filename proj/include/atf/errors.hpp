#pragma once

#include <stdexcept>
#include <string>

namespace atf {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class UnknownColumn : public Error {
public:
    explicit UnknownColumn(const std::string& name)
        : Error("unknown column: '" + name + "'"), column_(name) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

class RowOutOfRange : public Error {
public:
    using Error::Error;
};

class UnknownTokenizer : public Error {
public:
    explicit UnknownTokenizer(const std::string& name) : Error("unknown tokenizer: '" + name + "'") {}
};

class MismatchedProvenance : public Error {
public:
    using Error::Error;
};

/// Transport-level failure talking to a model backend. Retryable.
class BackendError : public Error {
public:
    using Error::Error;
};

/// A fixture backend was asked for a prompt key it never recorded. Not retryable.
class FixtureMiss : public BackendError {
public:
    explicit FixtureMiss(const std::string& key)
        : BackendError("fixture has no recorded response for key " + key), key_(key) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class EmptyIterations : public Error {
public:
    using Error::Error;
};

class KeyMismatch : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class MixedTask : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace atf
