#include "trapmodes/hill_system.hpp"

#include <cmath>

#include "trapmodes/errors.hpp"
#include "trapmodes/json_util.hpp"

namespace trapmodes {

Eigen::MatrixXd HillSystem::coefficient(double t) const {
    Eigen::MatrixXd m = A - 2.0 * std::cos(2.0 * t) * Q2;
    if (Q4.size() > 0) m -= 2.0 * std::cos(4.0 * t) * Q4;
    return m;
}

HillSystem HillSystem::mathieu(double a, double q) {
    HillSystem hill;
    hill.A = Eigen::MatrixXd::Constant(1, 1, a);
    hill.Q2 = Eigen::MatrixXd::Constant(1, 1, q);
    hill.Q4 = Eigen::MatrixXd::Zero(1, 1);
    hill.labels = {"u"};
    return hill;
}

HillSystem HillSystem::from_json(const nlohmann::json& j) {
    HillSystem hill;
    try {
        hill.A = matrix_from_json(j.at("A"));
        hill.Q2 = matrix_from_json(j.at("Q2"));
        hill.Q4 = matrix_from_json(j.at("Q4"));
        if (j.contains("labels")) hill.labels = j.at("labels").get<std::vector<std::string>>();
        const int dim = j.at("dim").get<int>();
        if (dim != hill.A.rows()) throw ConfigError("Hill system dim does not match A");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad Hill system: ") + e.what());
    }
    if (hill.A.rows() != hill.A.cols() || hill.Q2.rows() != hill.A.rows() ||
        hill.Q2.cols() != hill.A.rows() || hill.Q4.rows() != hill.A.rows() ||
        hill.Q4.cols() != hill.A.rows())
        throw ConfigError("Hill system matrices must be square and equally sized");
    return hill;
}

nlohmann::json HillSystem::to_json() const {
    nlohmann::json j;
    j["dim"] = dim();
    j["A"] = matrix_to_json(A);
    j["Q2"] = matrix_to_json(Q2);
    j["Q4"] = matrix_to_json(Q4);
    j["labels"] = labels;
    return j;
}

}  // namespace trapmodes
