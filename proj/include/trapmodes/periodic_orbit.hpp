#pragma once

#include <array>
#include <map>
#include <numbers>

#include <Eigen/Dense>
#include <json.hpp>

#include "trapmodes/integrator.hpp"
#include "trapmodes/trap_model.hpp"

namespace trapmodes {

// Damping ramp used while relaxing toward the periodic crystal: full strength
// during an initial hold, exponential turn-off, then an undamped settling tail.
// The decay must be long enough that the residual damping no longer shifts the
// attractor above the periodicity tolerance.
struct DampingSchedule {
    double strength = 0.5;
    double hold = 100.0 * std::numbers::pi;
    double tau = 50.0 * std::numbers::pi;
    double decay = 800.0 * std::numbers::pi;
    double settle = 50.0 * std::numbers::pi;

    double gamma(double t) const;
    double total_time() const { return hold + decay + settle; }
};

// pi-periodic crystal trajectory R_i(t) = sum_n B_{2n,i} e^{i 2n t}. The
// coefficients are real and even in n (time-reversal invariance), so the
// reconstruction is a plain cosine series B_0 + sum_{n>=1} 2 B_{2n} cos 2nt.
struct PeriodicOrbit {
    TrapConfig config;
    int n_max = 4;
    std::map<int, Eigen::MatrixXd> coefficients;  // harmonic 2n -> n_ions x 3
    double residual = 0.0;  // max e.o.m. defect of the reconstruction over a period

    /// Coefficient for harmonic index 2n; zero matrix when absent.
    Eigen::MatrixXd b(int harmonic) const;
    Eigen::MatrixXd position(double t) const;
    Eigen::MatrixXd velocity(double t) const;
    IonState state(double t) const;

    nlohmann::json to_json() const;
    static PeriodicOrbit from_json(const nlohmann::json& j);
};

struct RelaxOptions {
    DampingSchedule schedule;
    IntegratorSettings integrator;
    int n_max = 4;
    // Extra harmonics are added (up to this cap) when the converged series
    // still leaves a reconstruction defect above defect_tol.
    int max_n_max = 8;
    double periodicity_tol = 1e-7;
    // Soft modes near an orientation transition ring through a single ramp;
    // the schedule is rerun until the period map closes, up to this many
    // passes. A trajectory still inside basin_tol is then handed to Newton
    // anyway; beyond it the point is treated as having no crystal.
    int max_damping_cycles = 3;
    double basin_tol = 1e-4;
    int periodicity_periods = 5;
    int fourier_samples = 256;
    double newton_tol = 1e-10;
    int max_newton_iterations = 50;
    double defect_tol = 1e-7;
};

/// Damped integration until the trajectory closes on itself period to period,
/// then Fourier projection of the final period and a harmonic-balance Newton
/// polish. Throws NonCrystal when the periodicity check fails and
/// RefinementFailure (carrying the raw projection) when Newton diverges.
PeriodicOrbit relax_to_crystal(const TrapConfig& config, const IonState& seed,
                               const RelaxOptions& options = {});

/// Newton polish alone, seeded from candidate cosine coefficients (keys are
/// harmonic indices 2n >= 0; missing harmonics start at zero). Used to probe
/// for crystals that the damped relaxation cannot reach, e.g. linearly
/// unstable ones during stability sweeps.
PeriodicOrbit refine_from_projection(const TrapConfig& config,
                                     const std::map<int, Eigen::MatrixXd>& projection,
                                     const RelaxOptions& options = {});

/// Per-coordinate B_2/B_0, NaN where |B_0| <= threshold. The block-determinant
/// analysis predicts -q_alpha/4 on rf-driven axes.
Eigen::MatrixXd micromotion_ratio(const PeriodicOrbit& orbit, double threshold = 1e-3);

struct MicromotionPrediction {
    Eigen::MatrixXd b2;                // n_ions x 3 predicted amplitudes
    Eigen::Vector3d kernel_residual;   // relative defect of the per-axis zero-mode condition
    std::array<bool, 3> consistent{true, true, true};
    Eigen::MatrixXd g2;                // second dynamic-matrix harmonic (rf-free axes only)
    double symmetric_axial_bound = 0.0;  // (1/2)(q/4)^3, reflection-symmetric crystals
    double generic_axial_bound = 0.0;    // (eps/4)(q/4), no symmetry assumed
};

/// Micromotion amplitudes predicted from candidate average positions alone:
/// B_2 = -(q/4) B_0 on rf axes, and B_2 = -(eps/4) G_2 B_0 on rf-free axes.
/// Inconsistent average positions are flagged, not thrown.
MicromotionPrediction predict_micromotion(const TrapConfig& config, const Eigen::MatrixXd& b0);

/// Max-norm of the e.o.m. residual of the reconstructed trajectory over one
/// period; the orbit's residual field is this value at full harmonic content.
double fourier_defect(const TrapConfig& config, const PeriodicOrbit& orbit, int samples = 1024);

/// Pseudopotential equilibrium rescaled to the rf units, plus a fixed small
/// deterministic perturbation; ions start at rest.
IonState default_seed(const TrapConfig& config);

/// Seeded pseudorandom cloud (uniform in a cube matched to the crystal size),
/// ions at rest; for exploring crystals without a pseudopotential counterpart.
IonState random_seed(const TrapConfig& config, unsigned seed);

}  // namespace trapmodes
