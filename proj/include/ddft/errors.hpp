#pragma once

#include <stdexcept>
#include <string>

namespace ddft {

/// Bad or inconsistent user input (config file, CLI arguments, file formats).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failures. Kept as distinct types so callers can map them to
/// exit codes and structured reports.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

struct SingularTensor : NumericalError {
    explicit SingularTensor(const std::string& what) : NumericalError(what) {}
};

struct NotPositiveDefinite : NumericalError {
    explicit NotPositiveDefinite(const std::string& what) : NumericalError(what) {}
};

struct NoConvergence : NumericalError {
    double final_residual;
    NoConvergence(const std::string& what, double residual)
        : NumericalError(what), final_residual(residual) {}
};

struct LinearSolveFailure : NumericalError {
    explicit LinearSolveFailure(const std::string& what) : NumericalError(what) {}
};

struct EnergyGuardExhausted : NumericalError {
    explicit EnergyGuardExhausted(const std::string& what) : NumericalError(what) {}
};

struct PositivityLoss : NumericalError {
    double min_value;
    PositivityLoss(const std::string& what, double minv)
        : NumericalError(what), min_value(minv) {}
};

struct MaxIterations : NumericalError {
    explicit MaxIterations(const std::string& what) : NumericalError(what) {}
};

}  // namespace ddft
