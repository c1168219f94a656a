#include "trapmodes/pseudopotential.hpp"

#include <cmath>
#include <numbers>

#include "trapmodes/errors.hpp"
#include "trapmodes/integrator.hpp"
#include "trapmodes/json_util.hpp"
#include "trapmodes/log.hpp"

namespace trapmodes {

namespace {

Eigen::VectorXd flatten(const Eigen::MatrixXd& positions) {
    const Eigen::Index n = positions.rows();
    Eigen::VectorXd v(3 * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int axis = 0; axis < 3; ++axis) v[3 * i + axis] = positions(i, axis);
    return v;
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size() / 3;
    Eigen::MatrixXd m(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int axis = 0; axis < 3; ++axis) m(i, axis) = v[3 * i + axis];
    return m;
}

}  // namespace

PseudoConfig PseudoConfig::from_trap(const TrapConfig& trap) {
    IntegratorSettings tight;
    tight.rel_tol = 1e-12;
    tight.abs_tol = 1e-14;
    double beta[3];
    for (int axis = 0; axis < 3; ++axis) {
        const MathieuExponent e = mathieu_exponent(trap.a[axis], trap.q[axis], tight);
        if (!e.stable)
            throw ConfigError("axis " + std::to_string(axis) +
                              " has no stable single-particle motion");
        beta[axis] = e.beta;
    }
    PseudoConfig cfg;
    cfg.n_ions = trap.n_ions;
    cfg.gamma = Eigen::Vector3d(1.0, (beta[1] / beta[0]) * (beta[1] / beta[0]),
                                (beta[2] / beta[0]) * (beta[2] / beta[0]));
    return cfg;
}

double pseudo_energy(const PseudoConfig& cfg, const Eigen::MatrixXd& positions) {
    double v = positions.rows() > 1 ? coulomb_energy(positions) : 0.0;
    for (int axis = 0; axis < 3; ++axis)
        v += 0.5 * cfg.gamma[axis] * positions.col(axis).squaredNorm();
    return v;
}

Eigen::MatrixXd pseudo_gradient(const PseudoConfig& cfg, const Eigen::MatrixXd& positions) {
    Eigen::MatrixXd g = positions.rows() > 1
                            ? Eigen::MatrixXd(-coulomb_force(positions))
                            : Eigen::MatrixXd::Zero(positions.rows(), 3);
    for (int axis = 0; axis < 3; ++axis)
        g.col(axis) += cfg.gamma[axis] * positions.col(axis);
    return g;
}

Eigen::MatrixXd pseudo_hessian(const PseudoConfig& cfg, const Eigen::MatrixXd& positions) {
    const Eigen::Index n = positions.rows();
    Eigen::MatrixXd h = n > 1 ? coulomb_hessian(positions)
                              : Eigen::MatrixXd::Zero(3 * n, 3 * n).eval();
    for (Eigen::Index i = 0; i < n; ++i)
        for (int axis = 0; axis < 3; ++axis) h(3 * i + axis, 3 * i + axis) += cfg.gamma[axis];
    return h;
}

Eigen::MatrixXd spiral_seed(const PseudoConfig& cfg) {
    const int n = cfg.n_ions;
    Eigen::MatrixXd seed(n, 3);
    if (n == 1) {
        seed.setZero();
        return seed;
    }
    const double radius = 1.1 * std::cbrt(static_cast<double>(n));
    const double golden = std::numbers::phi;
    for (int i = 0; i < n; ++i) {
        // golden-section spiral on a sphere, radii staggered to avoid shells
        const double z = 1.0 - 2.0 * (i + 0.5) / n;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = 2.0 * std::numbers::pi * std::fmod(i * golden, 1.0);
        const double r = radius * (0.8 + 0.4 * ((i % 3) / 2.0));
        seed(i, 0) = r * rho * std::cos(phi);
        seed(i, 1) = r * rho * std::sin(phi);
        seed(i, 2) = r * z;
    }
    return seed;
}

Eigen::MatrixXd find_equilibrium(const PseudoConfig& cfg, const Eigen::MatrixXd& seed) {
    if (seed.rows() != cfg.n_ions || seed.cols() != 3)
        throw ConfigError("equilibrium seed does not match n_ions");
    if (cfg.gamma.minCoeff() <= 0.0) throw ConfigError("gamma must be positive");

    Eigen::MatrixXd x = seed;
    if (cfg.n_ions == 1) return Eigen::MatrixXd::Zero(1, 3);

    // stage 1: damped descent to the right basin
    double step = 0.05;
    double v = pseudo_energy(cfg, x);
    for (int iter = 0; iter < 100000; ++iter) {
        const Eigen::MatrixXd g = pseudo_gradient(cfg, x);
        if (g.cwiseAbs().maxCoeff() < 1e-3) break;
        Eigen::MatrixXd trial = x - step * g;
        double vt;
        try {
            vt = pseudo_energy(cfg, trial);
        } catch (const SingularConfiguration&) {
            vt = std::numeric_limits<double>::infinity();
        }
        if (vt < v) {
            x = trial;
            v = vt;
            step = std::min(step * 1.1, 0.25);
        } else {
            step *= 0.5;
            if (step < 1e-14)
                throw ConvergenceFailure("descent stalled before Newton stage",
                                         g.norm());
        }
    }

    // stage 2: Newton with a tiny Tikhonov shift (rotational near-zero modes in
    // nearly isotropic traps make the bare Hessian ill-conditioned)
    const Eigen::Index dof = 3 * cfg.n_ions;
    for (int iter = 0; iter < 200; ++iter) {
        const Eigen::VectorXd g = flatten(pseudo_gradient(cfg, x));
        const double gnorm = g.norm();
        if (gnorm < 1e-10) {
            const Eigen::MatrixXd h = pseudo_hessian(cfg, x);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
            if (es.eigenvalues().minCoeff() < -1e-8)
                throw SaddlePoint("stationary point has a negative curvature direction");
            return x;
        }
        Eigen::MatrixXd h = pseudo_hessian(cfg, x);
        const double shift = 1e-12 * h.cwiseAbs().maxCoeff();
        h.diagonal().array() += shift;
        Eigen::VectorXd dx = h.ldlt().solve(g);
        if (!dx.allFinite()) {
            h.diagonal().array() += 1e-6 * h.cwiseAbs().maxCoeff();
            dx = h.ldlt().solve(g);
        }
        double alpha = 1.0;
        Eigen::MatrixXd best = x;
        double best_norm = gnorm;
        for (int ls = 0; ls < 30; ++ls) {
            const Eigen::MatrixXd trial = x - alpha * unflatten(dx);
            double tn;
            try {
                tn = flatten(pseudo_gradient(cfg, trial)).norm();
            } catch (const SingularConfiguration&) {
                tn = std::numeric_limits<double>::infinity();
            }
            if (tn < best_norm) {
                best = trial;
                best_norm = tn;
                break;
            }
            alpha *= 0.5;
        }
        if (best_norm >= gnorm)
            throw ConvergenceFailure("Newton line search made no progress", gnorm);
        x = best;
        (void)dof;
    }
    throw ConvergenceFailure("equilibrium Newton did not converge",
                             flatten(pseudo_gradient(cfg, x)).norm());
}

namespace {

// Deterministic basis inside a degenerate frequency cluster: project unit
// coordinate vectors through the cluster subspace in lexicographic order and
// Gram-Schmidt the survivors.
Eigen::MatrixXd canonicalize_cluster(const Eigen::MatrixXd& span) {
    const Eigen::Index dim = span.rows();
    const Eigen::Index k = span.cols();
    const Eigen::MatrixXd projector = span * span.transpose();
    Eigen::MatrixXd out(dim, k);
    Eigen::Index found = 0;
    for (Eigen::Index axis = 0; axis < dim && found < k; ++axis) {
        Eigen::VectorXd w = projector.col(axis);
        for (Eigen::Index j = 0; j < found; ++j) w -= out.col(j).dot(w) * out.col(j);
        const double norm = w.norm();
        if (norm > 1e-6) out.col(found++) = w / norm;
    }
    if (found < k)
        throw ConvergenceFailure("could not canonicalize degenerate mode cluster",
                                 static_cast<double>(k - found));
    return out;
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0.0) v = -v;
}

}  // namespace

NormalModeBasis normal_modes(const PseudoConfig& cfg, const Eigen::MatrixXd& equilibrium) {
    const Eigen::VectorXd grad = flatten(pseudo_gradient(cfg, equilibrium));
    if (grad.norm() > 1e-8)
        throw ConfigError("normal_modes requires a stationary configuration");

    const Eigen::Index dim = 3 * cfg.n_ions;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pseudo_hessian(cfg, equilibrium));
    const Eigen::VectorXd lambda = es.eigenvalues();  // ascending
    if (lambda.minCoeff() < -1e-8)
        throw SaddlePoint("configuration is not a local minimum");

    NormalModeBasis basis;
    basis.equilibrium = equilibrium;
    basis.gamma = cfg.gamma;
    basis.modes = es.eigenvectors();
    basis.frequencies.resize(dim);
    for (Eigen::Index j = 0; j < dim; ++j)
        basis.frequencies[j] = std::sqrt(std::max(0.0, lambda[j]));

    // canonicalize degenerate clusters so the basis is deterministic
    Eigen::Index start = 0;
    while (start < dim) {
        Eigen::Index stop = start + 1;
        while (stop < dim && basis.frequencies[stop] - basis.frequencies[stop - 1] < 1e-8)
            ++stop;
        if (stop - start > 1)
            basis.modes.middleCols(start, stop - start) =
                canonicalize_cluster(basis.modes.middleCols(start, stop - start));
        start = stop;
    }
    for (Eigen::Index j = 0; j < dim; ++j) fix_sign(basis.modes.col(j));

    basis.xi_b = equilibrium.norm();
    if (basis.xi_b > 1e-12) {
        const Eigen::VectorXd r0 = flatten(equilibrium) / basis.xi_b;
        Eigen::Index best = 0;
        double best_overlap = -1.0;
        for (Eigen::Index j = 0; j < dim; ++j) {
            const double overlap = std::abs(basis.modes.col(j).dot(r0));
            if (overlap > best_overlap) {
                best_overlap = overlap;
                best = j;
            }
        }
        basis.breathing_index = static_cast<int>(best);

        // in an isotropic trap, or for a chain lying on one coordinate axis, the
        // breathing mode is exactly the radial direction
        const bool isotropic =
            cfg.gamma.maxCoeff() - cfg.gamma.minCoeff() < 1e-10;
        bool axis_chain = false;
        for (int axis = 0; axis < 3 && !axis_chain; ++axis) {
            double off = 0.0;
            for (int other = 0; other < 3; ++other)
                if (other != axis) off = std::max(off, equilibrium.col(other).cwiseAbs().maxCoeff());
            axis_chain = off < 1e-10 && equilibrium.col(axis).cwiseAbs().maxCoeff() > 1e-10;
        }
        if (isotropic || axis_chain) {
            Eigen::VectorXd d = basis.modes.col(best);
            if (d.dot(r0) < 0.0) d = -d;
            if ((d - r0).norm() > 1e-8)
                throw ConvergenceFailure(
                    "breathing mode is not proportional to the equilibrium", (d - r0).norm());
            basis.modes.col(best) = r0;  // exact representative
        }
    }
    return basis;
}

nlohmann::json NormalModeBasis::to_json() const {
    nlohmann::json j;
    j["equilibrium"] = matrix_to_json(equilibrium);
    j["frequencies"] = vector_to_json(frequencies);
    j["modes"] = matrix_to_json(modes);
    j["gamma"] = {gamma[0], gamma[1], gamma[2]};
    j["breathing_index"] = breathing_index;
    j["xi_b"] = xi_b;
    return j;
}

ModeCoupling mode_coupling(const TrapConfig& trap, const NormalModeBasis& basis) {
    const Eigen::Index dim = basis.modes.rows();
    const Eigen::Index n = dim / 3;
    const double eps = trap.epsilon();

    Eigen::VectorXd sigma(dim), qdiag(dim);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int axis = 0; axis < 3; ++axis) {
            sigma[3 * i + axis] = trap.a[axis] - eps * basis.gamma[axis];
            qdiag[3 * i + axis] = trap.q[axis];
        }

    const Eigen::VectorXd r0 = flatten(basis.equilibrium);
    ModeCoupling mc;
    mc.A = basis.modes.transpose() * sigma.asDiagonal() * basis.modes;
    mc.A.diagonal() += eps * basis.frequencies.cwiseProduct(basis.frequencies);
    mc.Q = basis.modes.transpose() * qdiag.asDiagonal() * basis.modes;
    mc.G = -basis.modes.transpose() * sigma.cwiseProduct(r0);
    mc.F = basis.modes.transpose() * qdiag.cwiseProduct(r0);
    return mc;
}

ModeMathieu symmetric_mode_mathieu(const TrapConfig& trap, const NormalModeBasis& basis,
                                   int mode) {
    const Eigen::Index dim = basis.modes.rows();
    if (mode < 0 || mode >= dim) throw ConfigError("mode index out of range");

    const ModeCoupling mc = mode_coupling(trap, basis);
    Eigen::MatrixXd offdiag = mc.Q;
    offdiag.diagonal().setZero();
    if (offdiag.cwiseAbs().maxCoeff() > 1e-8)
        throw NotDecoupled("mode-space Q is not diagonal; symmetric treatment invalid");

    const Eigen::Index n = dim / 3;
    double axis_weight[3] = {0.0, 0.0, 0.0};
    for (Eigen::Index i = 0; i < n; ++i)
        for (int axis = 0; axis < 3; ++axis) {
            const double c = basis.modes(3 * i + axis, mode);
            axis_weight[axis] += c * c;
        }
    int axis = 0;
    for (int k = 1; k < 3; ++k)
        if (axis_weight[k] > axis_weight[axis]) axis = k;
    if (axis_weight[axis] < 1.0 - 1e-10)
        throw NotDecoupled("mode is not confined to a single axis");

    const double eps = trap.epsilon();
    const double w = basis.frequencies[mode];
    ModeMathieu out;
    out.a_eff = eps * (w * w - basis.gamma[axis]) + trap.a[axis];
    out.q_eff = trap.q[axis];
    out.drive = (mode == basis.breathing_index) ? basis.xi_b : 0.0;
    return out;
}

Eigen::VectorXd DrivenResponse::evaluate(double t) const {
    Eigen::VectorXd v = harmonics.at(0);
    for (const auto& [h, coeff] : harmonics)
        if (h != 0) v += 2.0 * std::cos(h * t) * coeff;
    return v;
}

DrivenResponse driven_response(const ModeCoupling& coupling, int max_harmonic) {
    if (max_harmonic < 2 || max_harmonic % 2 != 0)
        throw ConfigError("max_harmonic must be a positive even number");
    const Eigen::Index dim = coupling.A.rows();
    const int blocks = max_harmonic / 2 + 1;

    Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(blocks * dim, blocks * dim);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(blocks * dim);
    for (int k = 0; k < blocks; ++k) {
        const double w = 2.0 * k;
        sys.block(k * dim, k * dim, dim, dim) =
            coupling.A - w * w * Eigen::MatrixXd::Identity(dim, dim);
        if (k + 1 < blocks)
            sys.block(k * dim, (k + 1) * dim, dim, dim) = -coupling.Q;
        if (k == 1)
            sys.block(dim, 0, dim, dim) = -coupling.Q;
        else if (k >= 2)
            sys.block(k * dim, (k - 1) * dim, dim, dim) = -coupling.Q;
    }
    // the constant row couples to Theta_2 through both e^{+-2it} sidebands
    if (blocks > 1) sys.block(0, dim, dim, dim) = -2.0 * coupling.Q;
    rhs.head(dim) = coupling.G;
    if (blocks > 1) rhs.segment(dim, dim) = coupling.F;

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double cond = svd.singularValues()(0) /
                        svd.singularValues()(svd.singularValues().size() - 1);
    if (!std::isfinite(cond) || cond > 1e14)
        throw ResonantDrive("harmonic-balance system is numerically singular");
    const Eigen::VectorXd sol = svd.solve(rhs);

    DrivenResponse out;
    for (int k = 0; k < blocks; ++k) out.harmonics[2 * k] = sol.segment(k * dim, dim);
    return out;
}

}  // namespace trapmodes
