#pragma once

#include <stdexcept>
#include <string>

namespace sfbd {

// Precondition or invariant broken by the caller.
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Non-finite values where finite ones are required (gradients, losses, params).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Reverse-SDE/ODE integration produced a non-finite state.
class DivergedTrajectoryError : public std::runtime_error {
public:
    DivergedTrajectoryError(const std::string& what, int step_index)
        : std::runtime_error(what + " (step " + std::to_string(step_index) + ")"),
          step_index(step_index) {}
    int step_index;
};

// A primitive not registered with the autodiff tape.
class UnsupportedOpError : public std::logic_error {
public:
    explicit UnsupportedOpError(const std::string& what) : std::logic_error(what) {}
};

// Posterior reweighting hit a region where the model law vanishes but the
// target law does not.
class SupportMismatchError : public std::runtime_error {
public:
    explicit SupportMismatchError(const std::string& what) : std::runtime_error(what) {}
};

// Bad config file, unknown dataset family, malformed CLI input.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Metrics CSVs with incompatible columns.
class SchemaMismatchError : public std::runtime_error {
public:
    explicit SchemaMismatchError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sfbd
