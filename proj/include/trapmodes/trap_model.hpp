#pragma once

#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "trapmodes/errors.hpp"

namespace trapmodes {

// Trap parameters in the dimensionless form used throughout: time is rescaled
// so one rf period is pi, and the equations of motion read
//
//   r'' + (a_alpha - 2 q_alpha cos 2t) r = epsilon * (Coulomb force),
//
// with epsilon = 4 / omega_rf^2 and omega_rf measured in secular-frequency units.
struct TrapConfig {
    int n_ions = 1;
    std::string geometry = "general";            // "linear" | "hyperbolic" | "general"
    Eigen::Vector3d a = Eigen::Vector3d::Zero(); // dc parameters, dc_asymmetry already applied
    Eigen::Vector3d q = Eigen::Vector3d::Zero(); // rf parameters
    double omega_rf = 2.0;
    double dc_asymmetry = 0.0;

    double epsilon() const { return 4.0 / (omega_rf * omega_rf); }

    /// a_x = -2a, a_y = a_z = a; q_x = 0, q_y = q, q_z = -q. Needs a < 0 for axial confinement.
    static TrapConfig linear(int n_ions, double a, double q, double omega_rf,
                             double dc_asymmetry = 0.0);
    /// a_x = -2a, a_y = a_z = a; q_x = -2q, q_y = q_z = q.
    static TrapConfig hyperbolic(int n_ions, double a, double q, double omega_rf,
                                 double dc_asymmetry = 0.0);
    /// Explicit per-axis arrays; both must sum to zero (Laplace) within 1e-12.
    static TrapConfig general(int n_ions, const Eigen::Vector3d& a, const Eigen::Vector3d& q,
                              double omega_rf, double dc_asymmetry = 0.0);

    static TrapConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct IonState {
    Eigen::MatrixXd positions;   // n_ions x 3
    Eigen::MatrixXd velocities;  // n_ions x 3
    double time = 0.0;

    static IonState rest(const Eigen::MatrixXd& positions, double time = 0.0);
};

/// Sum over ion pairs of 1/r (dimensionless charges).
double coulomb_energy(const Eigen::MatrixXd& positions);

/// Minus the gradient of coulomb_energy, n x 3.
Eigen::MatrixXd coulomb_force(const Eigen::MatrixXd& positions);

/// Full 3n x 3n Hessian of coulomb_energy, coordinate index 3*ion + axis.
Eigen::MatrixXd coulomb_hessian(const Eigen::MatrixXd& positions);

/// Lab-form potential: sum_i 1/2 Lambda_alpha(t) r_i,alpha^2 + Coulomb, with
/// Lambda_alpha = (omega_rf^2/4)(a_alpha - 2 q_alpha cos 2t) in rescaled time.
double potential_energy(const TrapConfig& trap, const IonState& state);

/// Time-rescaled potential whose negative gradient is eom_rhs:
/// sum 1/2 (a - 2q cos 2t) r^2 + epsilon * Coulomb.
double rescaled_potential(const TrapConfig& trap, const IonState& state);

/// Accelerations of the rescaled equations of motion, n x 3.
Eigen::MatrixXd eom_rhs(const TrapConfig& trap, const IonState& state);

/// n x n matrix of inverse cubed distances: off-diagonal -1/r_ij^3, diagonal the
/// positive row sum. Symmetric with zero row sums.
Eigen::MatrixXd dynamic_matrix(const Eigen::MatrixXd& positions);

double min_pair_distance(const Eigen::MatrixXd& positions);

}  // namespace trapmodes
