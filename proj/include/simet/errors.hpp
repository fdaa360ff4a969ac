#pragma once

// Error taxonomy shared across the library. Everything derives from Error so
// callers can catch the whole family; the CLI maps subtypes to exit codes.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace simet {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched dimensions between operands.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error("shape: " + msg) {}
};

// A documented precondition was violated by the caller.
class ContractViolation : public Error {
public:
    explicit ContractViolation(const std::string& msg) : Error("contract: " + msg) {}
};

// Non-finite values or numerically impossible states.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error("numeric: " + msg) {}
};

// A point sits exactly on an activation kink; the caller decides policy.
class OnKinkError : public Error {
public:
    OnKinkError(std::size_t layer, std::size_t unit)
        : Error("on-kink: layer " + std::to_string(layer) + ", unit " + std::to_string(unit)),
          layer_index(layer), unit_index(unit) {}
    std::size_t layer_index;
    std::size_t unit_index;
};

// Requested eigenvector subset is empty (e.g. null request with kernel dim 0).
class NoDirectionError : public Error {
public:
    explicit NoDirectionError(const std::string& msg) : Error("no-direction: " + msg) {}
};

// File parsing / serialization problems.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error("io: " + msg) {}
};

// Operation not available for the given configuration.
class UnsupportedError : public Error {
public:
    explicit UnsupportedError(const std::string& msg) : Error("unsupported: " + msg) {}
};

} // namespace simet
