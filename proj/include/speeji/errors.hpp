#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace speeji {

// Invalid caller-supplied input (durations, dimensions, flags).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Bad or missing configuration (emoji table, backend settings).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// RIFF/WAVE payload could not be decoded; what() carries the reason.
class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A remote analysis backend failed. Carries the span indices whose results
// are missing so callers can decide on a fallback.
class BackendError : public std::runtime_error {
public:
    enum class Kind { Timeout, Connection, MalformedResponse, OutOfRange, HttpStatus };

    BackendError(Kind kind, const std::string& what, std::vector<std::size_t> spans = {})
        : std::runtime_error(what), kind_(kind), spans_(std::move(spans)) {}

    Kind kind() const noexcept { return kind_; }
    const std::vector<std::size_t>& affected_spans() const noexcept { return spans_; }

private:
    Kind kind_;
    std::vector<std::size_t> spans_;
};

// Descriptor JSON failed validation; path() is a JSON pointer to the first
// offending location.
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace speeji
