#pragma once

#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "trapmodes/hill_system.hpp"
#include "trapmodes/trap_model.hpp"

namespace trapmodes {

struct IntegratorSettings {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    long max_steps = 50'000'000;
};

using OdeRhs = std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Dormand-Prince 5(4) with dense output. Integrates y' = f(t, y) from t0 to t1,
/// invoking sink(t, y(t)) at every entry of sample_times (ascending, within [t0, t1])
/// via the 4th-order interpolant. Returns y(t1).
Eigen::VectorXd integrate_dense(const OdeRhs& rhs, double t0, const Eigen::VectorXd& y0,
                                double t1, const IntegratorSettings& settings,
                                const std::vector<double>& sample_times = {},
                                const std::function<void(double, const Eigen::VectorXd&)>& sink =
                                    nullptr);

/// Full nonlinear ion dynamics with a time-dependent velocity damping coefficient
/// (pass nullptr or a function returning 0 for Hamiltonian motion). Samples the
/// trajectory at sample_times; the returned vector matches sample_times in length,
/// plus the final state appended when t_final is not itself a sample.
std::vector<IonState> integrate_nonlinear(const TrapConfig& trap, const IonState& initial,
                                          double t_final,
                                          const std::function<double(double)>& damping,
                                          const IntegratorSettings& settings,
                                          const std::vector<double>& sample_times = {});

struct Monodromy {
    Eigen::MatrixXd matrix;            // 2f x 2f map over one period (pi)
    Eigen::VectorXcd eigenvalues;
    Eigen::VectorXd exponents;         // stable exponents in (0,1), ascending, one per mode pair
    std::vector<std::pair<int, int>> pairs;  // eigenvalue indices matched as (lambda, 1/lambda)
    bool stable = false;
    std::vector<double> unstable_moduli;  // |lambda| > 1 entries when not stable
    double det = 0.0;
};

/// Monodromy matrix of the Hill system over one period, integrated column by
/// column from the identity in the phase-space form (u, u').
Monodromy matrizant(const HillSystem& hill, const IntegratorSettings& settings = {});

/// Matrizant at an arbitrary time t (t need not be a period multiple).
Eigen::MatrixXd matrizant_at(const HillSystem& hill, double t,
                             const IntegratorSettings& settings = {});

struct MathieuExponent {
    double beta = 0.0;       // in (0,1) when stable
    bool stable = false;
    double max_modulus = 0.0;
};

/// Characteristic exponent of the scalar Mathieu equation u'' + (a - 2q cos 2t) u = 0,
/// computed from the monodromy eigenvalues.
MathieuExponent mathieu_exponent(double a, double q, const IntegratorSettings& settings = {});

}  // namespace trapmodes
