#pragma once

#include "nowcast/detail/check_loss.hpp"
#include "nowcast/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace nowcast::detail {

struct InteriorPointOptions {
    int max_iterations = 100;
    double gap_tolerance = 1e-11;
    double step_fraction = 0.99995;
};

namespace ipm {

[[nodiscard]] inline double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
    double step = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (dv(i) < 0.0) step = std::min(step, -v(i) / dv(i));
    }
    return step;
}

}  // namespace ipm

/// Snaps theta to a basic solution: interpolate the p rows with the smallest
/// residuals that are linearly independent. Returned only if no worse.
[[nodiscard]] inline CheckLossSolution polish_to_vertex(const CheckLossProblem& prob, const CheckLossSolution& start) {
    const Eigen::Index m = prob.rows();
    const Eigen::Index p = prob.params();
    if (p == 0) return start;
    const Eigen::VectorXd r = prob.y - prob.x * start.theta;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(r(a)) < std::abs(r(b)); });

    // Greedy independent row selection by Gram-Schmidt on the rows of X.
    Eigen::MatrixXd basis(p, p);
    std::vector<Eigen::Index> chosen;
    const double scale = std::max(1.0, prob.x.cwiseAbs().maxCoeff());
    for (Eigen::Index idx : order) {
        if (static_cast<Eigen::Index>(chosen.size()) == p) break;
        Eigen::VectorXd v = prob.x.row(idx).transpose();
        for (std::size_t k = 0; k < chosen.size(); ++k) {
            const auto col = basis.col(static_cast<Eigen::Index>(k));
            v -= col.dot(v) * col;
        }
        for (std::size_t k = 0; k < chosen.size(); ++k) {
            const auto col = basis.col(static_cast<Eigen::Index>(k));
            v -= col.dot(v) * col;
        }
        const double norm = v.norm();
        if (norm <= 1e-9 * scale) continue;
        basis.col(static_cast<Eigen::Index>(chosen.size())) = v / norm;
        chosen.push_back(idx);
    }
    if (static_cast<Eigen::Index>(chosen.size()) < p) return start;

    Eigen::MatrixXd a(p, p);
    Eigen::VectorXd b(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        a.row(i) = prob.x.row(chosen[static_cast<std::size_t>(i)]);
        b(i) = prob.y(chosen[static_cast<std::size_t>(i)]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) return start;
    CheckLossSolution out = start;
    out.theta = lu.solve(b);
    out.objective = check_loss_objective(prob, out.theta);
    if (!(out.objective <= start.objective * (1.0 + 1e-13) + 1e-300)) return start;
    return out;
}

/// Mehrotra predictor-corrector on the bounded dual of the check-loss LP:
///
///     min -y'a  s.t.  X'a = X'cost_neg,  0 <= a <= cost_pos + cost_neg.
///
/// The primal coefficients are the negated equality multipliers.
[[nodiscard]] inline CheckLossSolution solve_check_loss_interior_point(const CheckLossProblem& prob,
                                                                       const InteriorPointOptions& options = {}) {
    const Eigen::Index m = prob.rows();
    const Eigen::Index p = prob.params();
    const Eigen::MatrixXd& x_mat = prob.x;

    const Eigen::VectorXd upper = prob.cost_pos + prob.cost_neg;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!(prob.cost_pos(i) > 0.0 && prob.cost_neg(i) > 0.0)) {
            throw DomainError("interior point path needs strictly positive row costs");
        }
    }
    const Eigen::VectorXd c = -prob.y;
    const Eigen::VectorXd b = x_mat.transpose() * prob.cost_neg;

    Eigen::VectorXd xv = prob.cost_neg;
    Eigen::VectorXd s = upper - xv;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> ols(x_mat);
    if (ols.rank() < p) throw SingularDesignError("quantile regression design is rank deficient");
    Eigen::VectorXd lambda = -ols.solve(prob.y);

    Eigen::VectorXd resid = prob.y + x_mat * lambda;  // y - X theta
    const double shift = std::max(1e-8, 0.1 * resid.cwiseAbs().mean());
    Eigen::VectorXd z = (-resid).cwiseMax(0.0).array() + shift;
    Eigen::VectorXd w = resid.cwiseMax(0.0).array() + shift;

    int iterations = 0;
    for (; iterations < options.max_iterations; ++iterations) {
        const Eigen::VectorXd rp = b - x_mat.transpose() * xv;
        const Eigen::VectorXd rd = c - x_mat * lambda - z + w;
        const double primal = c.dot(xv);
        const double gap = xv.dot(z) + s.dot(w);
        if (gap <= options.gap_tolerance * (1.0 + std::abs(primal)) &&
            rp.norm() <= 1e-9 * (1.0 + b.norm()) && rd.norm() <= 1e-9 * (1.0 + c.norm())) {
            break;
        }

        const Eigen::VectorXd d = (z.cwiseQuotient(xv) + w.cwiseQuotient(s)).cwiseInverse();
        Eigen::MatrixXd normal = x_mat.transpose() * d.asDiagonal() * x_mat;
        Eigen::LDLT<Eigen::MatrixXd> chol(normal);
        // Late iterates can lose definiteness to round-off; the vertex snap finishes from here.
        if (chol.info() != Eigen::Success || !chol.isPositive()) break;

        auto direction = [&](const Eigen::VectorXd& rxz, const Eigen::VectorXd& rsw, Eigen::VectorXd& dx,
                             Eigen::VectorXd& dlambda, Eigen::VectorXd& dz, Eigen::VectorXd& dw) {
            const Eigen::VectorXd rho = rd - rxz.cwiseQuotient(xv) + rsw.cwiseQuotient(s);
            dlambda = chol.solve(rp + x_mat.transpose() * d.cwiseProduct(rho));
            dx = d.cwiseProduct(x_mat * dlambda - rho);
            dz = (rxz - z.cwiseProduct(dx)).cwiseQuotient(xv);
            dw = (rsw + w.cwiseProduct(dx)).cwiseQuotient(s);
        };

        Eigen::VectorXd dx, dl, dz, dw;
        direction(-xv.cwiseProduct(z), -s.cwiseProduct(w), dx, dl, dz, dw);
        double ap = std::min(ipm::max_step(xv, dx), ipm::max_step(s, -dx));
        double ad = std::min(ipm::max_step(z, dz), ipm::max_step(w, dw));

        const double mu = gap / static_cast<double>(2 * m);
        const double gap_aff = (xv + ap * dx).dot(z + ad * dz) + (s - ap * dx).dot(w + ad * dw);
        const double sigma = std::pow(gap_aff / gap, 3.0);
        const double target = sigma * mu;

        const Eigen::VectorXd rxz = (target - xv.cwiseProduct(z).array()).matrix() - dx.cwiseProduct(dz);
        const Eigen::VectorXd rsw = (target - s.cwiseProduct(w).array()).matrix() + dx.cwiseProduct(dw);
        direction(rxz, rsw, dx, dl, dz, dw);
        ap = std::min(1.0, options.step_fraction * std::min(ipm::max_step(xv, dx), ipm::max_step(s, -dx)));
        ad = std::min(1.0, options.step_fraction * std::min(ipm::max_step(z, dz), ipm::max_step(w, dw)));

        if (!(std::isfinite(ap) && std::isfinite(ad)) || !dl.allFinite()) break;
        xv += ap * dx;
        s = upper - xv;
        s = s.cwiseMax(1e-300);
        lambda += ad * dl;
        z += ad * dz;
        w += ad * dw;
    }

    CheckLossSolution out;
    out.theta = -lambda;
    out.objective = check_loss_objective(prob, out.theta);
    out.iterations = iterations;
    return polish_to_vertex(prob, out);
}

}  // namespace nowcast::detail
