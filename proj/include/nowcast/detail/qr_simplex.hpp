#pragma once

#include "nowcast/detail/check_loss.hpp"
#include "nowcast/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace nowcast::detail {

/// Dense tableau simplex for the check-loss LP
///
///     min  cost_pos' u+ + cost_neg' u-   s.t.  X theta + u+ - u- = y,  u+, u- >= 0,
///
/// with theta free. Free variables enter with either sign and never leave the
/// basis. The u- columns are the negated u+ columns and are not stored.
///
/// After `optimize`, `lexicographic_minimize` walks the optimal face to the
/// vertex that is lexicographically smallest in theta.
class CheckLossSimplex {
public:
    explicit CheckLossSimplex(const CheckLossProblem& prob)
        : prob_(prob), m_(prob.rows()), p_(prob.params()) {
        table_.resize(m_, p_ + m_);
        rhs_.resize(m_);
        basis_.resize(static_cast<std::size_t>(m_));
        row_of_.assign(static_cast<std::size_t>(p_ + 2 * m_), -1);
        sign_.assign(static_cast<std::size_t>(p_), 1.0);
        allowed_.assign(static_cast<std::size_t>(p_ + 2 * m_), 1);
        table_.setZero();
        // Start from theta = 0 with |y| carried by u+ or u-.
        for (Eigen::Index r = 0; r < m_; ++r) {
            const double s = prob.y(r) >= 0.0 ? 1.0 : -1.0;
            for (Eigen::Index j = 0; j < p_; ++j) table_(r, j) = s * prob.x(r, j);
            table_(r, p_ + r) = s;
            rhs_(r) = s * prob.y(r);
            const Eigen::Index v = s > 0 ? p_ + r : p_ + m_ + r;
            basis_[static_cast<std::size_t>(r)] = v;
            row_of_[static_cast<std::size_t>(v)] = r;
        }
        use_main_costs();
    }

    void optimize() {
        use_main_costs();
        run();
    }

    void lexicographic_minimize() {
        use_main_costs();
        restrict_to_optimal_face();
        for (Eigen::Index k = 0; k < p_; ++k) {
            cost_theta_ = Eigen::VectorXd::Zero(p_);
            cost_theta_(k) = 1.0;
            cost_pos_ = Eigen::VectorXd::Zero(m_);
            cost_neg_ = Eigen::VectorXd::Zero(m_);
            run();
            restrict_to_optimal_face();
        }
        use_main_costs();
    }

    [[nodiscard]] CheckLossSolution solution() const {
        CheckLossSolution out;
        out.theta = Eigen::VectorXd::Zero(p_);
        out.iterations = iterations_;

        std::vector<Eigen::Index> zero_rows;
        std::vector<Eigen::Index> basic_params;
        for (Eigen::Index r = 0; r < m_; ++r) {
            if (row_of_[static_cast<std::size_t>(p_ + r)] < 0 && row_of_[static_cast<std::size_t>(p_ + m_ + r)] < 0) {
                zero_rows.push_back(r);
            }
        }
        for (Eigen::Index j = 0; j < p_; ++j) {
            if (row_of_[static_cast<std::size_t>(j)] >= 0) basic_params.push_back(j);
        }

        bool solved = false;
        if (!basic_params.empty() && zero_rows.size() == basic_params.size()) {
            // Re-solve the interpolated rows directly to shed tableau round-off.
            const auto n = static_cast<Eigen::Index>(basic_params.size());
            Eigen::MatrixXd a(n, n);
            Eigen::VectorXd b(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const Eigen::Index r = zero_rows[static_cast<std::size_t>(i)];
                for (Eigen::Index j = 0; j < n; ++j) a(i, j) = prob_.x(r, basic_params[static_cast<std::size_t>(j)]);
                b(i) = prob_.y(r);
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
            if (lu.isInvertible()) {
                const Eigen::VectorXd sol = lu.solve(b);
                for (Eigen::Index j = 0; j < n; ++j) out.theta(basic_params[static_cast<std::size_t>(j)]) = sol(j);
                solved = true;
            }
        }
        if (!solved) {
            for (Eigen::Index j : basic_params) {
                out.theta(j) = sign_[static_cast<std::size_t>(j)] * rhs_(row_of_[static_cast<std::size_t>(j)]);
            }
        }
        out.objective = check_loss_objective(prob_, out.theta);
        return out;
    }

private:
    static constexpr double kCostTol = 1e-10;
    static constexpr double kPivotTol = 1e-9;
    static constexpr int kDegenerateSwitch = 50;

    void use_main_costs() {
        cost_theta_ = Eigen::VectorXd::Zero(p_);
        cost_pos_ = prob_.cost_pos;
        cost_neg_ = prob_.cost_neg;
    }

    [[nodiscard]] double cost_of(Eigen::Index v) const {
        if (v < p_) return sign_[static_cast<std::size_t>(v)] * cost_theta_(v);
        if (v < p_ + m_) return cost_pos_(v - p_);
        return cost_neg_(v - p_ - m_);
    }

    /// Reduced costs of every variable: theta, then u+, then u-.
    [[nodiscard]] Eigen::VectorXd reduced_costs() const {
        Eigen::VectorXd cb(m_);
        for (Eigen::Index r = 0; r < m_; ++r) cb(r) = cost_of(basis_[static_cast<std::size_t>(r)]);
        Eigen::VectorXd stored(p_ + m_);
        for (Eigen::Index j = 0; j < p_; ++j) stored(j) = cost_of(j);
        stored.tail(m_) = cost_pos_;
        stored.noalias() -= table_.transpose() * cb;
        Eigen::VectorXd d(p_ + 2 * m_);
        d.head(p_ + m_) = stored;
        d.tail(m_) = cost_pos_ + cost_neg_ - stored.tail(m_);
        return d;
    }

    /// Nonbasic variables whose reduced cost is positive stay at zero from now on.
    void restrict_to_optimal_face() {
        const Eigen::VectorXd d = reduced_costs();
        for (Eigen::Index v = 0; v < p_ + 2 * m_; ++v) {
            if (row_of_[static_cast<std::size_t>(v)] >= 0) continue;
            const bool flat = v < p_ ? std::abs(d(v)) <= kCostTol : d(v) <= kCostTol;
            if (!flat) allowed_[static_cast<std::size_t>(v)] = 0;
        }
    }

    void run() {
        const int max_iterations = static_cast<int>(50 * (m_ + p_) + 1000);
        int degenerate_run = 0;
        bool bland = false;
        for (int local = 0;; ++local) {
            if (local > max_iterations) throw Error("quantile simplex did not converge");
            const Eigen::VectorXd d = reduced_costs();

            Eigen::Index entering = -1;
            bool flip = false;
            double best = kCostTol;
            auto consider = [&](Eigen::Index v, double rate, bool needs_flip) {
                if (rate <= kCostTol) return false;
                if (bland) {
                    entering = v;
                    flip = needs_flip;
                    return true;
                }
                if (rate > best) {
                    best = rate;
                    entering = v;
                    flip = needs_flip;
                }
                return false;
            };
            bool done = false;
            for (Eigen::Index j = 0; j < p_ && !done; ++j) {
                if (row_of_[static_cast<std::size_t>(j)] >= 0 || !allowed_[static_cast<std::size_t>(j)]) continue;
                done = d(j) < 0 ? consider(j, -d(j), false) : consider(j, d(j), true);
            }
            for (Eigen::Index v = p_; v < p_ + 2 * m_ && !done; ++v) {
                if (row_of_[static_cast<std::size_t>(v)] >= 0 || !allowed_[static_cast<std::size_t>(v)]) continue;
                done = consider(v, -d(v), false);
            }
            if (entering < 0) return;

            if (flip) {
                table_.col(entering) *= -1.0;
                sign_[static_cast<std::size_t>(entering)] *= -1.0;
            }
            Eigen::VectorXd column;
            if (entering < p_ + m_) {
                column = table_.col(entering);
            } else {
                column = -table_.col(entering - m_);
            }

            Eigen::Index leave_row = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (Eigen::Index r = 0; r < m_; ++r) {
                if (basis_[static_cast<std::size_t>(r)] < p_) continue;
                const double a = column(r);
                if (a <= kPivotTol) continue;
                const double ratio = std::max(rhs_(r), 0.0) / a;
                const double slack = 1e-12 * (1.0 + std::abs(best_ratio == std::numeric_limits<double>::infinity() ? ratio : best_ratio));
                if (leave_row < 0 || ratio < best_ratio - slack) {
                    leave_row = r;
                    best_ratio = ratio;
                } else if (ratio <= best_ratio + slack) {
                    const bool better = bland ? basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave_row)]
                                              : a > column(leave_row);
                    if (better) {
                        leave_row = r;
                        best_ratio = std::min(best_ratio, ratio);
                    }
                }
            }
            if (leave_row < 0) {
                throw SingularDesignError("quantile regression LP is unbounded; the design is degenerate");
            }

            degenerate_run = best_ratio <= 1e-14 ? degenerate_run + 1 : 0;
            if (degenerate_run > kDegenerateSwitch) bland = true;
            pivot(leave_row, entering, column);
            ++iterations_;
        }
    }

    void pivot(Eigen::Index row, Eigen::Index entering, const Eigen::VectorXd& column) {
        const double piv = column(row);
        table_.row(row) /= piv;
        rhs_(row) /= piv;
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (i == row) continue;
            const double f = column(i);
            if (f == 0.0) continue;
            table_.row(i) -= f * table_.row(row);
            rhs_(i) -= f * rhs_(row);
        }
        const Eigen::Index leaving = basis_[static_cast<std::size_t>(row)];
        row_of_[static_cast<std::size_t>(leaving)] = -1;
        basis_[static_cast<std::size_t>(row)] = entering;
        row_of_[static_cast<std::size_t>(entering)] = row;
    }

    const CheckLossProblem& prob_;
    Eigen::Index m_;
    Eigen::Index p_;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> table_;
    Eigen::VectorXd rhs_;
    std::vector<Eigen::Index> basis_;
    std::vector<Eigen::Index> row_of_;
    std::vector<double> sign_;
    std::vector<char> allowed_;
    Eigen::VectorXd cost_theta_;
    Eigen::VectorXd cost_pos_;
    Eigen::VectorXd cost_neg_;
    int iterations_ = 0;
};

/// Exact vertex solution; `lexicographic` breaks ties toward the smallest theta.
[[nodiscard]] inline CheckLossSolution solve_check_loss_simplex(const CheckLossProblem& prob, bool lexicographic) {
    CheckLossSimplex simplex(prob);
    simplex.optimize();
    if (lexicographic) simplex.lexicographic_minimize();
    return simplex.solution();
}

}  // namespace nowcast::detail
