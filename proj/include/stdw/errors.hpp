#pragma once

#include <stdexcept>
#include <string>

namespace stdw {

// Error categories surfaced by the CLI as "error[<tag>]: <message>".
// Each maps one-to-one onto a failure class named in the module contracts.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

inline const char* error_tag(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    if (dynamic_cast<const ShapeError*>(&e)) return "shape";
    if (dynamic_cast<const UsageError*>(&e)) return "usage";
    if (dynamic_cast<const NumericError*>(&e)) return "numeric";
    if (dynamic_cast<const FormatError*>(&e)) return "format";
    if (dynamic_cast<const IoError*>(&e)) return "io";
    return "internal";
}

}  // namespace stdw
