#pragma once

#include <stdexcept>
#include <string>

namespace secot {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Live provider gave up after exhausting its retry budget (or was asked
/// to replay a request that is not in the cache).
class ProviderError : public Error {
public:
    ProviderError(int status, std::string body, const std::string& what)
        : Error(what), status_(status), body_(std::move(body)) {}

    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

/// A scripted fingerprint is absent and the script has no default policy.
class ScriptMiss : public Error {
public:
    using Error::Error;
};

/// Renormalization in a self-training step is impossible (near-zero update).
class DegenerateUpdate : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t record, const std::string& what)
        : Error(what), record_(record) {}

    std::size_t record() const noexcept { return record_; }

private:
    std::size_t record_;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class FormatMismatch : public Error {
public:
    using Error::Error;
};

} // namespace secot
