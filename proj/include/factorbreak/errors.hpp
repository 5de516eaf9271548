#pragma once

#include <stdexcept>
#include <string>

namespace factorbreak {

// Invalid arguments or configuration supplied by the caller.
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& msg) : std::invalid_argument(msg) {}
};

// A numerical routine could not produce a trustworthy result
// (eigensolver failure, degenerate spectrum, Cholesky breakdown, ...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// File system / serialization failures. Messages carry the offending path.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised by the replication engine when too many replications fail.
class ExperimentError : public NumericalError {
public:
    explicit ExperimentError(const std::string& msg) : NumericalError(msg) {}
};

}  // namespace factorbreak
