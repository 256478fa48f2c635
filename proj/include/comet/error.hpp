#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace comet {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape propagation failed at a specific layer.
class ShapeError : public Error {
public:
    ShapeError(std::size_t layer_index, const std::string& what)
        : Error("layer " + std::to_string(layer_index) + ": " + what), layer_index_(layer_index) {}
    std::size_t layer_index() const noexcept { return layer_index_; }

private:
    std::size_t layer_index_;
};

class IllegalActionError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

/// Malformed input at a known location (line is 1-based, 0 when unknown).
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class VersionError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class TerminalStateError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class OracleError : public Error {
public:
    using Error::Error;
};

}  // namespace comet
