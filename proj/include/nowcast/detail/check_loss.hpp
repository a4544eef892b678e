#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace nowcast::detail {

/// min_theta  sum_r cost_pos[r] * max(r_r, 0) + cost_neg[r] * max(-r_r, 0),  r = y - X theta.
///
/// Quantile rows carry (tau, 1 - tau); an L1 penalty on a coefficient is a row with
/// y = 0, a unit entry on that coefficient and costs (lambda, lambda).
struct CheckLossProblem {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    Eigen::VectorXd cost_pos;
    Eigen::VectorXd cost_neg;

    [[nodiscard]] Eigen::Index rows() const noexcept { return x.rows(); }
    [[nodiscard]] Eigen::Index params() const noexcept { return x.cols(); }
};

[[nodiscard]] inline double check_loss_objective(const CheckLossProblem& prob, const Eigen::VectorXd& theta) {
    const Eigen::VectorXd r = prob.y - prob.x * theta;
    double total = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        total += r(i) >= 0.0 ? prob.cost_pos(i) * r(i) : -prob.cost_neg(i) * r(i);
    }
    return total;
}

struct CheckLossSolution {
    Eigen::VectorXd theta;
    double objective = 0.0;
    int iterations = 0;
};

}  // namespace nowcast::detail
