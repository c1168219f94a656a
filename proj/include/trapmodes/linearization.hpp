#pragma once

#include <map>
#include <set>

#include <Eigen/Dense>

#include "trapmodes/hill_system.hpp"
#include "trapmodes/periodic_orbit.hpp"
#include "trapmodes/trap_model.hpp"

namespace trapmodes {

/// Cosine harmonics of the Coulomb Hessian along the orbit, with the sign
/// convention K(t) = K_0 - 2 K_2 cos 2t - 2 K_4 cos 4t - ...; keys are the
/// requested even harmonic indices.
std::map<int, Eigen::MatrixXd> hessian_harmonics(const PeriodicOrbit& orbit,
                                                 const std::set<int>& harmonics = {0, 2, 4},
                                                 int samples = 512);

/// Hill matrices of the linearized motion about the orbit:
/// A = diag(a) + eps K_0, Q2 = diag(q) + eps K_2, Q4 = eps K_4 (the trap drive
/// itself has no 4th harmonic). Requires harmonics 0 and 2.
HillSystem assemble_hill(const TrapConfig& config, const std::map<int, Eigen::MatrixXd>& harmonics);

HillSystem linearize(const TrapConfig& config, const PeriodicOrbit& orbit,
                     const std::set<int>& harmonics = {0, 2, 4}, int samples = 512);

}  // namespace trapmodes
