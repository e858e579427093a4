#ifndef STOCHSIM_ERRORS_HPP
#define STOCHSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

#include "stochsim/types.hpp"

namespace stochsim {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operand dimensions do not match.
struct ShapeError : Error {
    using Error::Error;
};

// Input values outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

// Invalid argument combination (bad sizes, counts, flags).
struct ArgumentError : Error {
    using Error::Error;
};

// Iterative solver ran out of iterations; carries the last iterate.
struct ConvergenceError : Error {
    Matrix last_iterate;
    ConvergenceError(const std::string &msg, Matrix last)
        : Error(msg), last_iterate(std::move(last)) {}
};

// Leading eigenvalue / steady state is not unique.
struct DegeneracyError : Error {
    using Error::Error;
};

// Conditioning on a past the model assigns probability zero.
struct ImpossiblePastError : Error {
    using Error::Error;
};

// A training sequence step has probability zero; carries the step index.
struct ImpossibleSequenceError : Error {
    std::size_t index;
    ImpossibleSequenceError(const std::string &msg, std::size_t t)
        : Error(msg), index(t) {}
};

// Enumeration guard exceeded (d^L too large).
struct SizeError : Error {
    using Error::Error;
};

// Truncation produced a subspace on which the transfer map vanishes.
struct CompressionError : Error {
    using Error::Error;
};

// Every training restart failed.
struct TrainingError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct UsageError : Error {
    using Error::Error;
};

} // namespace stochsim

#endif
