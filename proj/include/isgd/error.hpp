#pragma once

#include <stdexcept>
#include <string>

namespace isgd {

/// Tensor dimensions do not chain or do not match the owning network.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A value outside the mathematical domain of an operation (NaN, Inf).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed file contents (bad magic number, unparsable cell, ...).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two inputs that must agree do not (e.g. image and label counts).
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by the training loop when a loss or gradient stops being finite.
class TrainingAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace isgd
