#include "trapmodes/periodic_orbit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "trapmodes/errors.hpp"
#include "trapmodes/json_util.hpp"
#include "trapmodes/log.hpp"
#include "trapmodes/pseudopotential.hpp"

namespace trapmodes {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

double DampingSchedule::gamma(double t) const {
    if (t < hold) return strength;
    if (t < hold + decay) return strength * std::exp(-(t - hold) / tau);
    return 0.0;
}

Eigen::MatrixXd PeriodicOrbit::b(int harmonic) const {
    const auto it = coefficients.find(harmonic);
    if (it != coefficients.end()) return it->second;
    return Eigen::MatrixXd::Zero(config.n_ions, 3);
}

Eigen::MatrixXd PeriodicOrbit::position(double t) const {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(config.n_ions, 3);
    for (const auto& [h, c] : coefficients) {
        if (h == 0)
            r += c;
        else if (h > 0)
            r += 2.0 * std::cos(h * t) * c;
    }
    return r;
}

Eigen::MatrixXd PeriodicOrbit::velocity(double t) const {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(config.n_ions, 3);
    for (const auto& [h, c] : coefficients)
        if (h > 0) v -= 2.0 * h * std::sin(h * t) * c;
    return v;
}

IonState PeriodicOrbit::state(double t) const {
    IonState s;
    s.positions = position(t);
    s.velocities = velocity(t);
    s.time = t;
    return s;
}

nlohmann::json PeriodicOrbit::to_json() const {
    nlohmann::json j;
    j["n_max"] = n_max;
    j["residual"] = residual;
    j["config"] = config.to_json();
    nlohmann::json coefs = nlohmann::json::object();
    for (const auto& [h, c] : coefficients) coefs[std::to_string(h)] = matrix_to_json(c);
    j["coefficients"] = coefs;
    return j;
}

PeriodicOrbit PeriodicOrbit::from_json(const nlohmann::json& j) {
    PeriodicOrbit orbit;
    try {
        orbit.config = TrapConfig::from_json(j.at("config"));
        orbit.n_max = j.at("n_max").get<int>();
        orbit.residual = j.at("residual").get<double>();
        for (const auto& [key, value] : j.at("coefficients").items()) {
            const int h = std::stoi(key);
            Eigen::MatrixXd c = matrix_from_json(value);
            if (c.rows() != orbit.config.n_ions || c.cols() != 3)
                throw ConfigError("orbit coefficient " + key + " has wrong shape");
            orbit.coefficients[h] = std::move(c);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad orbit file: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw ConfigError("orbit coefficient keys must be integers");
    }
    return orbit;
}

namespace {

// Harmonic-balance unknowns: cosine amplitudes X_n for n = 0..n_max, packed
// n-major then by coordinate 3*ion + axis. Reconstruction
// R(t) = X_0 + sum_{n>=1} 2 X_n cos 2nt.
struct HarmonicProblem {
    const TrapConfig& config;
    int n_max;
    int samples;

    int block() const { return 3 * config.n_ions; }
    int dim() const { return (n_max + 1) * block(); }

    Eigen::MatrixXd coef(const Eigen::VectorXd& v, int n) const {
        Eigen::MatrixXd c(config.n_ions, 3);
        for (int i = 0; i < config.n_ions; ++i)
            for (int axis = 0; axis < 3; ++axis) c(i, axis) = v[n * block() + 3 * i + axis];
        return c;
    }

    // Cosine projections of the e.o.m. defect of the reconstruction.
    Eigen::VectorXd residual(const Eigen::VectorXd& v) const {
        std::vector<Eigen::MatrixXd> x(n_max + 1);
        for (int n = 0; n <= n_max; ++n) x[n] = coef(v, n);

        Eigen::VectorXd r = Eigen::VectorXd::Zero(dim());
        IonState state;
        state.velocities = Eigen::MatrixXd::Zero(config.n_ions, 3);
        for (int m = 0; m < samples; ++m) {
            const double t = m * kPi / samples;
            Eigen::MatrixXd pos = x[0];
            Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(config.n_ions, 3);
            for (int n = 1; n <= n_max; ++n) {
                const double c = 2.0 * std::cos(2.0 * n * t);
                pos += c * x[n];
                acc -= 4.0 * n * n * c * x[n];
            }
            state.positions = pos;
            state.time = t;
            const Eigen::MatrixXd defect = acc - eom_rhs(config, state);
            for (int n = 0; n <= n_max; ++n) {
                const double w = (n == 0 ? 1.0 : 2.0 * std::cos(2.0 * n * t)) / samples;
                for (int i = 0; i < config.n_ions; ++i)
                    for (int axis = 0; axis < 3; ++axis)
                        r[n * block() + 3 * i + axis] += w * defect(i, axis);
            }
        }
        return r;
    }
};

std::map<int, Eigen::MatrixXd> projection_payload(const HarmonicProblem& problem,
                                                  const Eigen::VectorXd& v) {
    std::map<int, Eigen::MatrixXd> payload;
    for (int n = 0; n <= problem.n_max; ++n) payload[2 * n] = problem.coef(v, n);
    return payload;
}

// Damped Newton iteration on the harmonic-balance residual; finite-difference
// Jacobian, step halving on the residual norm.
Eigen::VectorXd newton_refine(const HarmonicProblem& problem, Eigen::VectorXd v,
                              const RelaxOptions& options) {
    Eigen::VectorXd r = problem.residual(v);
    double rnorm = r.norm();
    for (int iter = 0; iter < options.max_newton_iterations; ++iter) {
        if (r.cwiseAbs().maxCoeff() < options.newton_tol) return v;

        Eigen::MatrixXd jac(problem.dim(), problem.dim());
        for (int col = 0; col < problem.dim(); ++col) {
            const double h = 1e-7 * std::max(1.0, std::abs(v[col]));
            Eigen::VectorXd vp = v;
            vp[col] += h;
            jac.col(col) = (problem.residual(vp) - r) / h;
        }
        const Eigen::VectorXd dv = jac.partialPivLu().solve(-r);
        if (!dv.allFinite())
            throw RefinementFailure("harmonic-balance Newton produced a non-finite step",
                                    projection_payload(problem, v));

        double step = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 10; ++ls) {
            const Eigen::VectorXd trial = v + step * dv;
            const Eigen::VectorXd rt = problem.residual(trial);
            if (rt.allFinite() && rt.norm() < rnorm) {
                v = trial;
                r = rt;
                rnorm = rt.norm();
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted)
            throw RefinementFailure("harmonic-balance Newton stalled at residual " +
                                        std::to_string(rnorm),
                                    projection_payload(problem, v));
    }
    if (r.cwiseAbs().maxCoeff() < options.newton_tol) return v;
    throw RefinementFailure("harmonic-balance Newton did not converge",
                            projection_payload(problem, v));
}

PeriodicOrbit orbit_from_coefficients(const TrapConfig& config, const HarmonicProblem& problem,
                                      const Eigen::VectorXd& v) {
    PeriodicOrbit orbit;
    orbit.config = config;
    orbit.n_max = problem.n_max;
    orbit.coefficients[0] = problem.coef(v, 0);
    for (int n = 1; n <= problem.n_max; ++n) {
        const Eigen::MatrixXd c = problem.coef(v, n);
        orbit.coefficients[2 * n] = c;
        orbit.coefficients[-2 * n] = c;
    }
    return orbit;
}

PeriodicOrbit refine_with_extension(const TrapConfig& config, Eigen::VectorXd v, int n_max,
                                    const RelaxOptions& options) {
    const int block = 3 * config.n_ions;
    while (true) {
        HarmonicProblem problem{config, n_max, options.fourier_samples};
        v = newton_refine(problem, std::move(v), options);
        PeriodicOrbit orbit = orbit_from_coefficients(config, problem, v);
        orbit.residual = fourier_defect(config, orbit);
        if (orbit.residual <= options.defect_tol || n_max >= options.max_n_max) {
            if (orbit.residual > options.defect_tol)
                TM_WARN("orbit defect %.3e above tolerance %.3e at n_max=%d", orbit.residual,
                        options.defect_tol, n_max);
            return orbit;
        }
        TM_INFO("defect %.3e at n_max=%d, adding harmonic cos %dt", orbit.residual, n_max,
                2 * (n_max + 1));
        ++n_max;
        v.conservativeResize(v.size() + block);
        v.tail(block).setZero();
    }
}

const IonState& sampled_state(const std::vector<IonState>& states, double t) {
    const auto it = std::lower_bound(states.begin(), states.end(), t,
                                     [](const IonState& s, double v) { return s.time < v; });
    if (it == states.end() || it->time != t)
        throw ConvergenceFailure("internal sample bookkeeping failed", t);
    return *it;
}

}  // namespace

PeriodicOrbit refine_from_projection(const TrapConfig& config,
                                     const std::map<int, Eigen::MatrixXd>& projection,
                                     const RelaxOptions& options) {
    int n_max = options.n_max;
    for (const auto& [h, c] : projection) {
        if (h < 0 || h % 2 != 0) continue;
        n_max = std::max(n_max, h / 2);
        if (c.rows() != config.n_ions || c.cols() != 3)
            throw ConfigError("projection harmonic " + std::to_string(h) + " has wrong shape");
    }
    n_max = std::min(n_max, options.max_n_max);

    const int block = 3 * config.n_ions;
    Eigen::VectorXd v = Eigen::VectorXd::Zero((n_max + 1) * block);
    for (const auto& [h, c] : projection) {
        if (h < 0 || h % 2 != 0 || h / 2 > n_max) continue;
        for (int i = 0; i < config.n_ions; ++i)
            for (int axis = 0; axis < 3; ++axis) v[(h / 2) * block + 3 * i + axis] = c(i, axis);
    }
    return refine_with_extension(config, std::move(v), n_max, options);
}

PeriodicOrbit relax_to_crystal(const TrapConfig& config, const IonState& seed,
                               const RelaxOptions& options) {
    if (seed.positions.rows() != config.n_ions)
        throw ConfigError("seed does not match n_ions");
    if (!seed.positions.allFinite() || !seed.velocities.allFinite())
        throw ConfigError("seed state must be finite");

    const DampingSchedule& schedule = options.schedule;
    double t_end = kPi * std::ceil(schedule.total_time() / kPi - 1e-9);
    while (t_end < schedule.total_time() - 1e-9) t_end += kPi;

    const int S = options.fourier_samples;
    const int P = options.periodicity_periods;
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(S) + P + 1);
    for (int k = P; k >= 0; --k) times.push_back(t_end - k * kPi);
    for (int m = 0; m < S; ++m) times.push_back(t_end - kPi + m * kPi / S);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    std::vector<IonState> states;
    double deviation = 0.0;
    IonState start = seed;
    const int cycles = std::max(1, options.max_damping_cycles);
    for (int cycle = 0; cycle < cycles; ++cycle) {
        TM_INFO("relaxing %d ions over %.0f rf periods (pass %d)", config.n_ions, t_end / kPi,
                cycle + 1);
        start.time = 0.0;
        states = integrate_nonlinear(
            config, start, t_end, [&schedule](double t) { return schedule.gamma(t); },
            options.integrator, times);

        deviation = 0.0;
        for (int k = 0; k < P; ++k) {
            const IonState& s1 = sampled_state(states, t_end - k * kPi);
            const IonState& s0 = sampled_state(states, t_end - (k + 1) * kPi);
            deviation =
                std::max(deviation, (s1.positions - s0.positions).cwiseAbs().maxCoeff());
            deviation =
                std::max(deviation, (s1.velocities - s0.velocities).cwiseAbs().maxCoeff());
        }
        if (deviation <= options.periodicity_tol) break;
        start = states.back();
        TM_INFO("period map still open by %.3e after pass %d", deviation, cycle + 1);
    }
    if (deviation > options.basin_tol)
        throw NonCrystal("trajectory is not pi-periodic after the damping ramp (deviation " +
                             std::to_string(deviation) + ")",
                         deviation);
    if (deviation > options.periodicity_tol)
        TM_WARN("projecting a trajectory with residual transient %.3e; relying on the Newton "
                "polish to close the orbit",
                deviation);
    auto state_at = [&states](double t) -> const IonState& { return sampled_state(states, t); };

    const int block = 3 * config.n_ions;
    Eigen::VectorXd v = Eigen::VectorXd::Zero((options.n_max + 1) * block);
    for (int m = 0; m < S; ++m) {
        const double tm = t_end - kPi + m * kPi / S;
        const double phase = m * kPi / S;
        const IonState& s = state_at(tm);
        for (int n = 0; n <= options.n_max; ++n) {
            const double w = std::cos(2.0 * n * phase) / S;
            for (int i = 0; i < config.n_ions; ++i)
                for (int axis = 0; axis < 3; ++axis)
                    v[n * block + 3 * i + axis] += w * s.positions(i, axis);
        }
    }
    TM_DEBUG("relaxation period map deviation %.3e", deviation);

    return refine_with_extension(config, std::move(v), options.n_max, options);
}

Eigen::MatrixXd micromotion_ratio(const PeriodicOrbit& orbit, double threshold) {
    const Eigen::MatrixXd b0 = orbit.b(0);
    const Eigen::MatrixXd b2 = orbit.b(2);
    Eigen::MatrixXd ratio(b0.rows(), 3);
    for (Eigen::Index i = 0; i < b0.rows(); ++i)
        for (int axis = 0; axis < 3; ++axis)
            ratio(i, axis) = std::abs(b0(i, axis)) > threshold
                                 ? b2(i, axis) / b0(i, axis)
                                 : std::numeric_limits<double>::quiet_NaN();
    return ratio;
}

MicromotionPrediction predict_micromotion(const TrapConfig& config, const Eigen::MatrixXd& b0) {
    if (b0.rows() != config.n_ions || b0.cols() != 3)
        throw ConfigError("average positions must be n_ions x 3");
    constexpr double kRfAxis = 1e-12;
    constexpr double kKernelTol = 0.05;
    const int n = config.n_ions;
    const double eps = config.epsilon();

    MicromotionPrediction out;
    out.b2 = Eigen::MatrixXd::Zero(n, 3);
    out.kernel_residual.setZero();
    const Eigen::MatrixXd g0 = dynamic_matrix(b0);

    bool any_free_axis = false;
    for (int axis = 0; axis < 3; ++axis) {
        if (std::abs(config.q[axis]) > kRfAxis)
            out.b2.col(axis) = -(config.q[axis] / 4.0) * b0.col(axis);
        else
            any_free_axis = true;
    }

    if (any_free_axis) {
        out.g2 = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const Eigen::Vector3d d0 = b0.row(i) - b0.row(j);
                Eigen::Vector3d d2 = Eigen::Vector3d::Zero();
                for (int axis = 0; axis < 3; ++axis)
                    if (std::abs(config.q[axis]) > kRfAxis)
                        d2[axis] = -(config.q[axis] / 4.0) * d0[axis];
                const double r = d0.norm();
                if (r <= 0.0) throw SingularConfiguration("coincident average positions");
                const double val = 3.0 * std::pow(r, -5.0) * d0.dot(d2);
                out.g2(i, j) = val;
                out.g2(j, i) = val;
            }
        }
        for (int i = 0; i < n; ++i) out.g2(i, i) = -(out.g2.row(i).sum() - out.g2(i, i));
    }

    for (int axis = 0; axis < 3; ++axis) {
        const bool rf = std::abs(config.q[axis]) > kRfAxis;
        if (!rf) out.b2.col(axis) = -(eps / 4.0) * out.g2 * b0.col(axis);

        // Zero-mode condition on the averaged block system: B_0 on each axis
        // should annihilate a - eps G_0 (+ q^2/2 on rf axes).
        Eigen::MatrixXd m = -eps * g0;
        m.diagonal().array() += config.a[axis] + (rf ? 0.5 * config.q[axis] * config.q[axis] : 0.0);
        const double u0 = b0.col(axis).norm();
        if (u0 > 1e-12 && m.norm() > 0.0) {
            out.kernel_residual[axis] = (m * b0.col(axis)).norm() / (m.norm() * u0);
            out.consistent[axis] = out.kernel_residual[axis] <= kKernelTol;
            if (!out.consistent[axis])
                TM_WARN("average positions inconsistent on axis %d (residual %.3f)", axis,
                        out.kernel_residual[axis]);
        }
    }

    const double qmax = config.q.cwiseAbs().maxCoeff();
    out.symmetric_axial_bound = 0.5 * std::pow(qmax / 4.0, 3.0);
    out.generic_axial_bound = (eps / 4.0) * (qmax / 4.0);
    return out;
}

double fourier_defect(const TrapConfig& config, const PeriodicOrbit& orbit, int samples) {
    double worst = 0.0;
    IonState state;
    state.velocities = Eigen::MatrixXd::Zero(config.n_ions, 3);
    for (int m = 0; m < samples; ++m) {
        const double t = m * kPi / samples;
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(config.n_ions, 3);
        for (const auto& [h, c] : orbit.coefficients)
            if (h > 0) acc -= static_cast<double>(h) * h * 2.0 * std::cos(h * t) * c;
        state.positions = orbit.position(t);
        state.time = t;
        worst = std::max(worst, (acc - eom_rhs(config, state)).cwiseAbs().maxCoeff());
    }
    return worst;
}

IonState default_seed(const TrapConfig& config) {
    const PseudoConfig pseudo = PseudoConfig::from_trap(config);
    const Eigen::MatrixXd eq = find_equilibrium(pseudo, spiral_seed(pseudo));
    const MathieuExponent mx = mathieu_exponent(config.a[0], config.q[0]);
    const double scale = std::cbrt(config.epsilon() / (mx.beta * mx.beta));

    Eigen::MatrixXd pos = scale * eq;
    std::mt19937 gen(2718281u);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    for (Eigen::Index i = 0; i < pos.rows(); ++i)
        for (int axis = 0; axis < 3; ++axis) pos(i, axis) += 1e-3 * jitter(gen);
    return IonState::rest(pos);
}

IonState random_seed(const TrapConfig& config, unsigned seed) {
    double scale = 1.0;
    try {
        const MathieuExponent mx = mathieu_exponent(config.a[0], config.q[0]);
        if (mx.stable && mx.beta > 1e-6)
            scale = std::cbrt(config.epsilon() / (mx.beta * mx.beta));
    } catch (const Error&) {
    }
    const double half_box = 1.5 * std::cbrt(static_cast<double>(config.n_ions)) * scale;

    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(-half_box, half_box);
    Eigen::MatrixXd pos(config.n_ions, 3);
    for (int attempt = 0; attempt < 200; ++attempt) {
        for (Eigen::Index i = 0; i < pos.rows(); ++i)
            for (int axis = 0; axis < 3; ++axis) pos(i, axis) = u(gen);
        if (config.n_ions < 2 || min_pair_distance(pos) > 0.3 * scale) break;
    }
    return IonState::rest(pos);
}

}  // namespace trapmodes
