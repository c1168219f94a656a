#pragma once

#include <map>

#include <Eigen/Dense>
#include <json.hpp>

#include "trapmodes/trap_model.hpp"

namespace trapmodes {

// Time-averaged (pseudopotential) description: V = sum_i 1/2 gamma_alpha r_i,alpha^2
// + Coulomb, in units where the x-axis secular frequency is 1 (gamma[0] == 1).
struct PseudoConfig {
    int n_ions = 1;
    Eigen::Vector3d gamma = Eigen::Vector3d::Ones();

    /// gamma_alpha = (beta_alpha / beta_x)^2 from the exact single-particle
    /// characteristic exponents of the trap. Throws ConfigError when some axis
    /// has no stable single-particle motion.
    static PseudoConfig from_trap(const TrapConfig& trap);
};

double pseudo_energy(const PseudoConfig& cfg, const Eigen::MatrixXd& positions);
Eigen::MatrixXd pseudo_gradient(const PseudoConfig& cfg, const Eigen::MatrixXd& positions);
Eigen::MatrixXd pseudo_hessian(const PseudoConfig& cfg, const Eigen::MatrixXd& positions);

/// Deterministic generic seed: ions on a golden-section spiral sphere.
Eigen::MatrixXd spiral_seed(const PseudoConfig& cfg);

/// Stationary point of the pseudopotential from the given seed: damped descent
/// followed by Newton, gradient norm below 1e-10. Throws SaddlePoint when the
/// Hessian has an eigenvalue below -1e-8.
Eigen::MatrixXd find_equilibrium(const PseudoConfig& cfg, const Eigen::MatrixXd& seed);

struct NormalModeBasis {
    Eigen::MatrixXd equilibrium;  // n x 3
    Eigen::MatrixXd modes;        // 3n x 3n, orthonormal columns, ascending frequency
    Eigen::VectorXd frequencies;  // 3n, nonnegative
    Eigen::Vector3d gamma;
    int breathing_index = -1;     // -1 when the equilibrium is at the origin
    double xi_b = 0.0;            // Frobenius norm of the equilibrium
    nlohmann::json to_json() const;
};

NormalModeBasis normal_modes(const PseudoConfig& cfg, const Eigen::MatrixXd& equilibrium);

// Mode-space form of the rf-driven dynamics about the pseudopotential crystal:
//   Theta'' + (A - 2 Q cos 2t) Theta = G + 2 F cos 2t.
struct ModeCoupling {
    Eigen::MatrixXd A;  // 3n x 3n
    Eigen::MatrixXd Q;
    Eigen::VectorXd G;
    Eigen::VectorXd F;
};

ModeCoupling mode_coupling(const TrapConfig& trap, const NormalModeBasis& basis);

struct ModeMathieu {
    double a_eff = 0.0;
    double q_eff = 0.0;
    double drive = 0.0;  // xi_b for the breathing mode, else 0
};

/// Scalar Mathieu parameters of one mode in the decoupled (symmetric-crystal)
/// case. Throws NotDecoupled when the mode-space Q is not diagonal within 1e-8
/// or the mode is not confined to a single axis.
ModeMathieu symmetric_mode_mathieu(const TrapConfig& trap, const NormalModeBasis& basis,
                                   int mode);

struct DrivenResponse {
    std::map<int, Eigen::VectorXd> harmonics;  // cosine coefficients, keys 0, 2, 4, ...
    const Eigen::VectorXd& theta0() const { return harmonics.at(0); }
    const Eigen::VectorXd& theta2() const { return harmonics.at(2); }
    /// Theta(t) = Theta_0 + sum_k 2 Theta_2k cos(2kt)
    Eigen::VectorXd evaluate(double t) const;
};

/// pi-periodic particular solution of the mode-space equation by harmonic
/// balance with cosine harmonics {0, 2, ..., max_harmonic}.
DrivenResponse driven_response(const ModeCoupling& coupling, int max_harmonic = 4);

}  // namespace trapmodes
