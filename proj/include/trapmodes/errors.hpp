#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace trapmodes {

/// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad user input: config files, manifests, parameter ranges.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Ion positions that make the Coulomb terms blow up (coincident ions).
class SingularConfiguration : public Error {
public:
    using Error::Error;
};

/// An iteration that ran out of budget; carries the last residual seen.
class ConvergenceFailure : public Error {
public:
    ConvergenceFailure(const std::string& msg, double residual_)
        : Error(msg + " (residual " + std::to_string(residual_) + ")"), residual(residual_) {}
    double residual;
};

/// Stationary point with a negative curvature direction.
class SaddlePoint : public Error {
public:
    using Error::Error;
};

/// Mode-space matrices are not diagonal where a decoupled treatment was requested.
class NotDecoupled : public Error {
public:
    using Error::Error;
};

/// Harmonic-balance matrix numerically singular: drive resonant with a mode.
class ResonantDrive : public Error {
public:
    using Error::Error;
};

/// Step size underflow during integration, typically a near-collision.
class StiffnessError : public Error {
public:
    StiffnessError(const std::string& msg, double t_fail_)
        : Error(msg + " at t = " + std::to_string(t_fail_)), t_fail(t_fail_) {}
    double t_fail;
};

/// Relaxation endpoint is not periodic to tolerance: no crystal found.
class NonCrystal : public Error {
public:
    NonCrystal(const std::string& msg, double deviation_)
        : Error(msg + " (period-map deviation " + std::to_string(deviation_) + ")"),
          period_map_deviation(deviation_) {}
    double period_map_deviation;
};

/// Newton polish diverged; carries the raw Fourier projection it started from.
class RefinementFailure : public Error {
public:
    RefinementFailure(const std::string& msg, std::map<int, Eigen::MatrixXd> raw)
        : Error(msg), raw_projection(std::move(raw)) {}
    std::map<int, Eigen::MatrixXd> raw_projection;
};

/// A level of the continued matrix inversion was numerically singular.
class ExpansionBreakdown : public Error {
public:
    ExpansionBreakdown(const std::string& msg, int level_)
        : Error(msg + " (level " + std::to_string(level_) + ")"), level(level_) {}
    int level;
};

/// A root handed to the ladder construction that is not actually a root.
class StaleRoot : public Error {
public:
    using Error::Error;
};

/// Exponent count still wrong after the oracle cross-check.
class IncompleteSpectrum : public Error {
public:
    IncompleteSpectrum(const std::string& msg, std::vector<double> oracle)
        : Error(msg), oracle_exponents(std::move(oracle)) {}
    std::vector<double> oracle_exponents;
};

/// Mode normalization produced a non-positive symplectic norm.
class DegeneratePairing : public Error {
public:
    using Error::Error;
};

}  // namespace trapmodes
