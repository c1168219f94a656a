#include "trapmodes/linearization.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "trapmodes/errors.hpp"

namespace trapmodes {

std::map<int, Eigen::MatrixXd> hessian_harmonics(const PeriodicOrbit& orbit,
                                                 const std::set<int>& harmonics, int samples) {
    for (const int h : harmonics)
        if (h < 0 || h % 2 != 0)
            throw ConfigError("Hessian harmonics must be even and nonnegative, got " +
                              std::to_string(h));
    if (samples < 16) throw ConfigError("Hessian projection needs at least 16 samples");

    const int f = 3 * orbit.config.n_ions;
    std::map<int, Eigen::MatrixXd> out;
    for (const int h : harmonics) out[h] = Eigen::MatrixXd::Zero(f, f);

    for (int m = 0; m < samples; ++m) {
        const double t = m * std::numbers::pi / samples;
        const Eigen::MatrixXd k = coulomb_hessian(orbit.position(t));
        for (auto& [h, acc] : out) {
            const double w = h == 0 ? 1.0 / samples : -std::cos(h * t) / samples;
            acc += w * k;
        }
    }
    return out;
}

HillSystem assemble_hill(const TrapConfig& config,
                         const std::map<int, Eigen::MatrixXd>& harmonics) {
    if (!harmonics.count(0) || !harmonics.count(2))
        throw ConfigError("Hill assembly needs Hessian harmonics 0 and 2");
    const int f = 3 * config.n_ions;
    for (const auto& [h, k] : harmonics)
        if (k.rows() != f || k.cols() != f)
            throw ConfigError("Hessian harmonic " + std::to_string(h) + " has wrong shape");
    const double eps = config.epsilon();

    HillSystem hill;
    hill.A = eps * harmonics.at(0);
    hill.Q2 = eps * harmonics.at(2);
    hill.Q4 = harmonics.count(4) ? Eigen::MatrixXd(eps * harmonics.at(4))
                                 : Eigen::MatrixXd::Zero(f, f);
    for (int i = 0; i < config.n_ions; ++i)
        for (int axis = 0; axis < 3; ++axis) {
            hill.A(3 * i + axis, 3 * i + axis) += config.a[axis];
            hill.Q2(3 * i + axis, 3 * i + axis) += config.q[axis];
        }

    hill.labels.reserve(f);
    static constexpr const char* kAxes[] = {"x", "y", "z"};
    for (int i = 0; i < config.n_ions; ++i)
        for (int axis = 0; axis < 3; ++axis)
            hill.labels.push_back("ion" + std::to_string(i) + ":" + kAxes[axis]);
    return hill;
}

HillSystem linearize(const TrapConfig& config, const PeriodicOrbit& orbit,
                     const std::set<int>& harmonics, int samples) {
    return assemble_hill(config, hessian_harmonics(orbit, harmonics, samples));
}

}  // namespace trapmodes
