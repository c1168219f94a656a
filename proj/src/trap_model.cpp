#include "trapmodes/trap_model.hpp"

#include <cmath>

namespace trapmodes {

namespace {

constexpr double kMinDistance = 1e-9;
constexpr double kLaplaceTol = 1e-12;

void validate_common(int n_ions, double omega_rf) {
    if (n_ions < 1) throw ConfigError("n_ions must be >= 1");
    if (!(omega_rf > 0.0)) throw ConfigError("omega_rf must be positive");
}

void apply_dc_asymmetry(TrapConfig& trap) {
    trap.a[1] *= 1.0 + trap.dc_asymmetry;
    trap.a[2] *= 1.0 - trap.dc_asymmetry;
}

void check_distances(const Eigen::MatrixXd& positions) {
    if (positions.rows() > 1 && min_pair_distance(positions) < kMinDistance)
        throw SingularConfiguration("coincident ions (pair distance below 1e-9)");
}

}  // namespace

TrapConfig TrapConfig::linear(int n_ions, double a, double q, double omega_rf,
                              double dc_asymmetry) {
    validate_common(n_ions, omega_rf);
    TrapConfig trap;
    trap.n_ions = n_ions;
    trap.geometry = "linear";
    trap.a = Eigen::Vector3d(-2.0 * a, a, a);
    trap.q = Eigen::Vector3d(0.0, q, -q);
    trap.omega_rf = omega_rf;
    trap.dc_asymmetry = dc_asymmetry;
    apply_dc_asymmetry(trap);
    return trap;
}

TrapConfig TrapConfig::hyperbolic(int n_ions, double a, double q, double omega_rf,
                                  double dc_asymmetry) {
    validate_common(n_ions, omega_rf);
    TrapConfig trap;
    trap.n_ions = n_ions;
    trap.geometry = "hyperbolic";
    trap.a = Eigen::Vector3d(-2.0 * a, a, a);
    trap.q = Eigen::Vector3d(-2.0 * q, q, q);
    trap.omega_rf = omega_rf;
    trap.dc_asymmetry = dc_asymmetry;
    apply_dc_asymmetry(trap);
    return trap;
}

TrapConfig TrapConfig::general(int n_ions, const Eigen::Vector3d& a, const Eigen::Vector3d& q,
                               double omega_rf, double dc_asymmetry) {
    validate_common(n_ions, omega_rf);
    if (std::abs(a.sum()) > kLaplaceTol || std::abs(q.sum()) > kLaplaceTol)
        throw ConfigError("trap parameters must satisfy sum(a) = sum(q) = 0");
    TrapConfig trap;
    trap.n_ions = n_ions;
    trap.geometry = "general";
    trap.a = a;
    trap.q = q;
    trap.omega_rf = omega_rf;
    trap.dc_asymmetry = dc_asymmetry;
    apply_dc_asymmetry(trap);
    return trap;
}

TrapConfig TrapConfig::from_json(const nlohmann::json& j) {
    try {
        const int n = j.at("n_ions").get<int>();
        const std::string geometry = j.at("geometry").get<std::string>();
        const double omega_rf = j.at("omega_rf").get<double>();
        const double delta = j.value("dc_asymmetry", 0.0);
        if (geometry == "linear" || geometry == "hyperbolic") {
            const double a = j.at("a").get<double>();
            const double q = j.at("q").get<double>();
            return geometry == "linear" ? linear(n, a, q, omega_rf, delta)
                                        : hyperbolic(n, a, q, omega_rf, delta);
        }
        if (geometry == "general") {
            const auto av = j.at("a").get<std::vector<double>>();
            const auto qv = j.at("q").get<std::vector<double>>();
            if (av.size() != 3 || qv.size() != 3)
                throw ConfigError("general geometry needs 3-element a and q arrays");
            return general(n, Eigen::Vector3d(av[0], av[1], av[2]),
                           Eigen::Vector3d(qv[0], qv[1], qv[2]), omega_rf, delta);
        }
        throw ConfigError("unknown geometry '" + geometry + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad trap config: ") + e.what());
    }
}

nlohmann::json TrapConfig::to_json() const {
    nlohmann::json j;
    j["n_ions"] = n_ions;
    j["geometry"] = geometry;
    if (geometry == "linear") {
        // presets store the scalar parameters, pre-asymmetry
        j["a"] = a[1] / (1.0 + dc_asymmetry);
        j["q"] = q[1];
    } else if (geometry == "hyperbolic") {
        j["a"] = a[1] / (1.0 + dc_asymmetry);
        j["q"] = q[1];
    } else {
        j["a"] = {a[0], a[1] / (1.0 + dc_asymmetry), a[2] / (1.0 - dc_asymmetry)};
        j["q"] = {q[0], q[1], q[2]};
    }
    j["omega_rf"] = omega_rf;
    j["dc_asymmetry"] = dc_asymmetry;
    return j;
}

IonState IonState::rest(const Eigen::MatrixXd& positions, double time) {
    IonState state;
    state.positions = positions;
    state.velocities = Eigen::MatrixXd::Zero(positions.rows(), positions.cols());
    state.time = time;
    return state;
}

double min_pair_distance(const Eigen::MatrixXd& positions) {
    const Eigen::Index n = positions.rows();
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            best = std::min(best, (positions.row(i) - positions.row(j)).norm());
    return best;
}

double coulomb_energy(const Eigen::MatrixXd& positions) {
    check_distances(positions);
    const Eigen::Index n = positions.rows();
    double v = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            v += 1.0 / (positions.row(i) - positions.row(j)).norm();
    return v;
}

Eigen::MatrixXd coulomb_force(const Eigen::MatrixXd& positions) {
    check_distances(positions);
    const Eigen::Index n = positions.rows();
    Eigen::MatrixXd force = Eigen::MatrixXd::Zero(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const Eigen::RowVector3d d = positions.row(i) - positions.row(j);
            const double r = d.norm();
            const Eigen::RowVector3d f = d / (r * r * r);
            force.row(i) += f;
            force.row(j) -= f;
        }
    }
    return force;
}

Eigen::MatrixXd coulomb_hessian(const Eigen::MatrixXd& positions) {
    check_distances(positions);
    const Eigen::Index n = positions.rows();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3 * n, 3 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const Eigen::Vector3d d = (positions.row(i) - positions.row(j)).transpose();
            const double r = d.norm();
            const double r3 = r * r * r;
            const double r5 = r3 * r * r;
            // pair block of the Hessian of 1/r: (3 dd^T - r^2 I)/r^5
            const Eigen::Matrix3d block =
                3.0 * d * d.transpose() / r5 - Eigen::Matrix3d::Identity() / r3;
            h.block<3, 3>(3 * i, 3 * i) += block;
            h.block<3, 3>(3 * j, 3 * j) += block;
            h.block<3, 3>(3 * i, 3 * j) -= block;
            h.block<3, 3>(3 * j, 3 * i) -= block;
        }
    }
    return h;
}

double potential_energy(const TrapConfig& trap, const IonState& state) {
    const double w2 = trap.omega_rf * trap.omega_rf / 4.0;
    const double c = std::cos(2.0 * state.time);
    double v = coulomb_energy(state.positions);
    for (int axis = 0; axis < 3; ++axis) {
        const double lambda = w2 * (trap.a[axis] - 2.0 * trap.q[axis] * c);
        v += 0.5 * lambda * state.positions.col(axis).squaredNorm();
    }
    return v;
}

double rescaled_potential(const TrapConfig& trap, const IonState& state) {
    const double c = std::cos(2.0 * state.time);
    double v = trap.epsilon() * coulomb_energy(state.positions);
    for (int axis = 0; axis < 3; ++axis)
        v += 0.5 * (trap.a[axis] - 2.0 * trap.q[axis] * c) *
             state.positions.col(axis).squaredNorm();
    return v;
}

Eigen::MatrixXd eom_rhs(const TrapConfig& trap, const IonState& state) {
    const double c = std::cos(2.0 * state.time);
    Eigen::MatrixXd acc = trap.epsilon() * coulomb_force(state.positions);
    for (int axis = 0; axis < 3; ++axis)
        acc.col(axis) -= (trap.a[axis] - 2.0 * trap.q[axis] * c) * state.positions.col(axis);
    return acc;
}

Eigen::MatrixXd dynamic_matrix(const Eigen::MatrixXd& positions) {
    check_distances(positions);
    const Eigen::Index n = positions.rows();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double r = (positions.row(i) - positions.row(j)).norm();
            const double w = 1.0 / (r * r * r);
            g(i, j) -= w;
            g(j, i) -= w;
            g(i, i) += w;
            g(j, j) += w;
        }
    }
    return g;
}

}  // namespace trapmodes
