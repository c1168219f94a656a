#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace trapmodes {

// Coupled Hill system in the convention
//
//   u'' + (A - 2 Q2 cos 2t - 2 Q4 cos 4t) u = 0,
//
// A, Q2, Q4 real symmetric f x f, period pi.
struct HillSystem {
    Eigen::MatrixXd A;
    Eigen::MatrixXd Q2;
    Eigen::MatrixXd Q4;
    std::vector<std::string> labels;  // one per coordinate, e.g. "ion2:y"

    int dim() const { return static_cast<int>(A.rows()); }
    bool has_q4() const { return Q4.size() > 0 && Q4.cwiseAbs().maxCoeff() != 0.0; }

    /// Coefficient matrix A - 2 Q2 cos 2t - 2 Q4 cos 4t.
    Eigen::MatrixXd coefficient(double t) const;

    /// Scalar Mathieu equation as a 1x1 system.
    static HillSystem mathieu(double a, double q);

    static HillSystem from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

}  // namespace trapmodes
