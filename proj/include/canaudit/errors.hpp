#pragma once

#include <stdexcept>
#include <string>

namespace canaudit {

// Bad configuration, missing files, malformed input. CLI exit 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A pipeline invariant was violated (disjointness, alignment,
// single-class trial sets, double instrumentation). CLI exit 3.
class InvariantError : public std::runtime_error {
public:
    explicit InvariantError(const std::string& what) : std::runtime_error(what) {}
};

// Backend transport failure; retriable, distinct from semantic errors.
// CLI exit 4.
class TransportError : public std::runtime_error {
public:
    explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace canaudit
