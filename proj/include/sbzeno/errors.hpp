// errors.hpp: exception types shared by the library and the CLI

#pragma once

#include <stdexcept>
#include <string>

namespace sbzeno {

/// Invalid input to an operation (negative frequency, size mismatch, bad config value).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to reach its target (Krylov, truncation deficit, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Projective measurement found (numerically) zero probability.
class MeasurementAnnihilation : public NumericalError {
public:
    explicit MeasurementAnnihilation(double p)
        : NumericalError("measurement annihilated the state (p = " + std::to_string(p) + ")"),
          probability(p) {}
    double probability;
};

} // namespace sbzeno
