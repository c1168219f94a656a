#pragma once

#include <complex>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "trapmodes/hill_system.hpp"
#include "trapmodes/integrator.hpp"

namespace trapmodes {

// One Floquet solution u(t) = e^{i beta t} sum_n C_{2n} e^{i 2n t} of the Hill
// system. For a symmetric system the C_{2n} are real up to the fixed phase.
struct FloquetMode {
    double beta = 0.0;
    std::map<int, Eigen::VectorXcd> ladder;  // harmonic 2n -> C_{2n}
    int kernel_dim = 1;
};

struct FloquetOptions {
    int depth = 20;
    int n_max = 6;
    int scan_per_mode = 64;
    double root_tol = 1e-10;
    double edge_margin = 1e-4;      // scan window offset from the integral betas 0 and 1
    double integral_reject = 1e-6;  // roots this close to 0 or 1 are discarded
    double kernel_rel_tol = 1e-6;   // singular-value ratio counted as kernel
    double oracle_match_tol = 1e-6;
    double depth_check_tol = 1e-10;
    IntegratorSettings oracle;
};

/// det Y_{2,beta} together with the central matrix whose kernel carries the
/// mode. Plain systems give the f x f matrix of the tridiagonal continued
/// inversions; a cos 4t harmonic makes the recursion pentadiagonal, which is
/// regrouped into consecutive harmonic pairs and yields the 2f x 2f analogue.
/// Throws ExpansionBreakdown when an intermediate inversion is singular.
std::pair<double, Eigen::MatrixXd> y_determinant(const HillSystem& hill, double beta, int depth);

struct ExponentScan {
    std::vector<FloquetMode> modes;       // distinct betas, ladders not filled
    bool stable = true;                   // false when the monodromy oracle found |lambda| != 1
    std::vector<double> unstable_moduli;  // moduli off the unit circle, descending
    std::vector<double> oracle_betas;     // filled whenever the oracle was consulted
};

/// All characteristic exponents in (0,1): det-Y sign scan, bisection/secant
/// refinement, kernel dimensions for multiplicities. On a count mismatch the
/// monodromy oracle arbitrates: missed roots (degenerate or tightly spaced)
/// are recovered, an unstable system is returned as a diagnostic report, and
/// anything else throws IncompleteSpectrum. scan_points 0 means 64 per mode.
ExponentScan find_exponents(const HillSystem& hill, int scan_points = 0, int depth = 20,
                            const FloquetOptions& options = {});

/// Harmonic ladder(s) C_{2n}, |n| <= n_max, for a validated root: one mode per
/// kernel vector of Y_{2,beta}, orthonormal for degenerate roots. Throws
/// StaleRoot when the kernel is numerically empty.
std::vector<FloquetMode> mode_ladder(const HillSystem& hill, double beta, int depth = 20,
                                     int n_max = 6, const FloquetOptions& options = {});

/// Max-norm residual of u'' + [A - 2 Q2 cos 2t - 2 Q4 cos 4t] u over a period
/// for the mode's reconstruction.
double ladder_residual(const HillSystem& hill, const FloquetMode& mode, int samples = 512);

// Floquet-Lyapunov transformation Gamma(t) = [[U, U*], [V, V*]] built from f
// stable modes, normalized so that V^T(0) U(0) = (i/2) I.
struct FLTransform {
    Eigen::VectorXd betas;  // ascending
    std::map<int, Eigen::MatrixXcd> u_fourier;  // harmonic 2n -> f x f, column per mode
    std::map<int, Eigen::MatrixXcd> v_fourier;
    bool normalization_applied = false;

    int dim() const { return static_cast<int>(betas.size()); }
    Eigen::MatrixXcd u(double t) const;
    Eigen::MatrixXcd v(double t) const;
    Eigen::MatrixXcd gamma(double t) const;
    /// Closed-form inverse [[i V^dag, -i U^dag], [-i V^T, i U^T]], valid at all t.
    Eigen::MatrixXcd gamma_inverse(double t) const;
    /// Matrizant factorization Gamma(t) e^{Bt} Gamma^{-1}(0), B = diag(i beta, -i beta).
    Eigen::MatrixXcd floquet_matrix(double t) const;
    nlohmann::json to_json() const;
};

/// Assembles and normalizes the transformation. Expects exactly f modes with
/// filled ladders (degenerate kernels contribute one mode per kernel vector).
/// Throws DegeneratePairing when the normalization matrix is not positive.
FLTransform build_fl_transform(const std::vector<FloquetMode>& modes);

struct ModeEvolution {
    Eigen::VectorXcd chi;         // mode coordinates at the requested time
    Eigen::VectorXd phase_space;  // reconstructed (u, du/dt)
};

/// chi(0) = Gamma^{-1}(0) initial, phases advanced by e^{+-i beta t}, mapped
/// back through Gamma(t); the reconstruction is real for real input.
ModeEvolution evolve_modes(const FLTransform& transform, const Eigen::VectorXd& initial,
                           double t);

}  // namespace trapmodes
