#pragma once

#include <stdexcept>
#include <string>

namespace kgqa {

/// Base class for every error the engine raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input file (graph, dataset, fixture).
class LoadError : public Error {
public:
    using Error::Error;
};

/// Bad configuration: unknown fields, missing templates, invalid bounds.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Caller passed an argument that violates an operation's precondition.
class ArgumentError : public Error {
public:
    using Error::Error;
};

}  // namespace kgqa
