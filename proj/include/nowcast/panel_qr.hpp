#pragma once

#include "nowcast/detail/check_loss.hpp"
#include "nowcast/detail/qr_interior_point.hpp"
#include "nowcast/detail/qr_simplex.hpp"
#include "nowcast/errors.hpp"
#include "nowcast/panel_ls.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace nowcast {

/// Where the L1 penalty pulls the entity intercepts.
enum class ShrinkageTarget {
    Common,  ///< toward an unpenalized global intercept
    Zero,    ///< toward zero
};

enum class QuantileSolver {
    Auto,           ///< exact simplex up to `QuantileSpec::exact_row_limit` data rows, interior point above
    Simplex,        ///< exact vertex, lexicographically smallest on flat optima
    InteriorPoint,  ///< primal-dual path followed by a vertex snap
};

struct QuantileSpec {
    double tau = 0.5;
    double lambda = 1.0;
    ShrinkageTarget target = ShrinkageTarget::Common;
    QuantileSolver solver = QuantileSolver::Auto;
    CollinearPolicy collinear = CollinearPolicy::Throw;
    std::size_t exact_row_limit = 200;
    std::vector<std::string> labels;

    void validate() const {
        if (!(tau > 0.0 && tau < 1.0)) throw DomainError("quantile level must lie in (0,1)");
        if (!(lambda >= 0.0)) throw DomainError("shrinkage weight must be nonnegative");
    }
};

struct QuantileModel {
    double tau = 0.5;
    double lambda = 0.0;
    ShrinkageTarget target = ShrinkageTarget::Common;
    double intercept = 0.0;  ///< global intercept; zero unless lambda > 0 with a common target
    std::map<std::string, double> gamma;  ///< full entity intercepts, global intercept included
    Eigen::VectorXd beta;
    std::vector<std::string> labels;
    std::vector<std::size_t> dropped;
    double objective = 0.0;  ///< check loss plus lambda * sum |gamma_i - intercept|
    bool exact = false;      ///< solved on the simplex path
    int iterations = 0;
};

namespace detail {

/// Regressors of `x` that add rank on top of the entity dummies, in column order.
[[nodiscard]] inline std::vector<std::size_t> independent_slopes(const Eigen::MatrixXd& dummies, const Eigen::MatrixXd& x,
                                                                 double tolerance) {
    std::vector<std::size_t> kept;
    Eigen::MatrixXd current = dummies;
    Eigen::Index rank = dummies.cols();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        Eigen::MatrixXd trial(current.rows(), current.cols() + 1);
        trial << current, x.col(j);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
        qr.setThreshold(tolerance);
        if (qr.rank() > rank) {
            current = std::move(trial);
            rank = qr.rank();
            kept.push_back(static_cast<std::size_t>(j));
        }
    }
    return kept;
}

}  // namespace detail

/// Penalized fixed-effects quantile regression:
///
///     min  sum_{i,t} rho_tau(y_it - mu - a_i - x_it' beta) + lambda * sum_i |a_i|
///
/// with gamma_i = mu + a_i. `mu` exists only for lambda > 0 and the common target;
/// lambda = 0 is the unpenalized fixed-effects fit.
[[nodiscard]] inline QuantileModel fit_quantile(std::span<const DesignRow> rows, const QuantileSpec& spec) {
    spec.validate();
    const std::size_t k = detail::regressor_count(rows);
    const auto n = static_cast<Eigen::Index>(rows.size());

    std::map<std::string, Eigen::Index> entity_index;
    for (const auto& r : rows) entity_index.emplace(r.entity, 0);
    Eigen::Index next = 0;
    for (auto& [entity, idx] : entity_index) idx = next++;
    const Eigen::Index n_ent = next;

    QuantileModel model;
    model.tau = spec.tau;
    model.lambda = spec.lambda;
    model.target = spec.target;
    model.labels = detail::default_labels(k, spec.labels);
    model.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));

    Eigen::MatrixXd dummies = Eigen::MatrixXd::Zero(n, n_ent);
    Eigen::MatrixXd xr(n, static_cast<Eigen::Index>(k));
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        dummies(r, entity_index.at(row.entity)) = 1.0;
        for (std::size_t j = 0; j < k; ++j) xr(r, static_cast<Eigen::Index>(j)) = row.x[j];
        y(r) = row.y;
    }

    const auto kept = detail::independent_slopes(dummies, xr, 1e-10);
    if (kept.size() < k) {
        std::vector<std::size_t> aliased;
        for (std::size_t j = 0; j < k; ++j) {
            if (!std::binary_search(kept.begin(), kept.end(), j)) aliased.push_back(j);
        }
        if (spec.collinear == CollinearPolicy::Throw) {
            throw SingularDesignError("singular design: collinear with the entity effects: " +
                                      detail::join_labels(aliased, model.labels));
        }
        model.dropped = aliased;
    }

    const bool penalized = spec.lambda > 0.0;
    const bool use_mu = penalized && spec.target == ShrinkageTarget::Common;
    const Eigen::Index off = use_mu ? 1 : 0;
    const auto kk = static_cast<Eigen::Index>(kept.size());
    const Eigen::Index params = off + n_ent + kk;
    const Eigen::Index lp_rows = n + (penalized ? n_ent : 0);

    detail::CheckLossProblem prob;
    prob.x = Eigen::MatrixXd::Zero(lp_rows, params);
    prob.y = Eigen::VectorXd::Zero(lp_rows);
    prob.cost_pos.resize(lp_rows);
    prob.cost_neg.resize(lp_rows);
    for (Eigen::Index r = 0; r < n; ++r) {
        if (use_mu) prob.x(r, 0) = 1.0;
        prob.x.block(r, off, 1, n_ent) = dummies.row(r);
        for (Eigen::Index j = 0; j < kk; ++j) prob.x(r, off + n_ent + j) = xr(r, static_cast<Eigen::Index>(kept[static_cast<std::size_t>(j)]));
        prob.y(r) = y(r);
        prob.cost_pos(r) = spec.tau;
        prob.cost_neg(r) = 1.0 - spec.tau;
    }
    if (penalized) {
        for (Eigen::Index i = 0; i < n_ent; ++i) {
            prob.x(n + i, off + i) = 1.0;
            prob.cost_pos(n + i) = spec.lambda;
            prob.cost_neg(n + i) = spec.lambda;
        }
    }

    QuantileSolver solver = spec.solver;
    if (solver == QuantileSolver::Auto) {
        solver = rows.size() <= spec.exact_row_limit ? QuantileSolver::Simplex : QuantileSolver::InteriorPoint;
    }
    detail::CheckLossSolution sol;
    if (solver == QuantileSolver::Simplex) {
        sol = detail::solve_check_loss_simplex(prob, true);
        model.exact = true;
    } else {
        sol = detail::solve_check_loss_interior_point(prob);
    }

    model.objective = sol.objective;
    model.iterations = sol.iterations;
    model.intercept = use_mu ? sol.theta(0) : 0.0;
    for (const auto& [entity, idx] : entity_index) model.gamma[entity] = model.intercept + sol.theta(off + idx);
    for (Eigen::Index j = 0; j < kk; ++j) model.beta(static_cast<Eigen::Index>(kept[static_cast<std::size_t>(j)])) = sol.theta(off + n_ent + j);
    return model;
}

[[nodiscard]] inline QuantileModel fit_quantile(const std::vector<DesignRow>& rows, const QuantileSpec& spec) {
    return fit_quantile(std::span<const DesignRow>(rows), spec);
}

/// Objective of `model` on `rows` under the same formulation as the fit.
[[nodiscard]] inline double quantile_objective(const QuantileModel& model, std::span<const DesignRow> rows) {
    double total = 0.0;
    for (const auto& r : rows) {
        double fit = model.gamma.at(r.entity);
        for (std::size_t j = 0; j < r.x.size(); ++j) fit += r.x[j] * model.beta(static_cast<Eigen::Index>(j));
        const double u = r.y - fit;
        total += u * (model.tau - (u < 0.0 ? 1.0 : 0.0));
    }
    if (model.lambda > 0.0) {
        const double centre = model.target == ShrinkageTarget::Common ? model.intercept : 0.0;
        for (const auto& [entity, g] : model.gamma) total += model.lambda * std::abs(g - centre);
    }
    return total;
}

/// gamma_entity + x' beta.
[[nodiscard]] inline double predict_quantile(const QuantileModel& model, const std::string& entity,
                                             std::span<const double> x) {
    const auto it = model.gamma.find(entity);
    if (it == model.gamma.end()) throw UnknownEntityError("entity '" + entity + "' was not in the training design");
    if (static_cast<Eigen::Index>(x.size()) != model.beta.size()) {
        throw LengthError("predict_quantile: expected " + std::to_string(model.beta.size()) + " regressors, got " +
                          std::to_string(x.size()));
    }
    double out = it->second;
    for (std::size_t j = 0; j < x.size(); ++j) out += x[j] * model.beta(static_cast<Eigen::Index>(j));
    return out;
}

/// Sorts quantile predictions ascending so that they no longer cross.
[[nodiscard]] inline std::array<double, 3> rearrange(std::array<double, 3> q) noexcept {
    std::sort(q.begin(), q.end());
    return q;
}

inline void write_coefficients_csv(std::ostream& out, const QuantileModel& model) {
    out << "label,value\n";
    out.precision(17);
    if (model.lambda > 0.0 && model.target == ShrinkageTarget::Common) out << "intercept," << model.intercept << '\n';
    for (const auto& [entity, g] : model.gamma) out << "gamma[" << entity << "]," << g << '\n';
    for (Eigen::Index j = 0; j < model.beta.size(); ++j) {
        out << model.labels[static_cast<std::size_t>(j)] << ',' << model.beta(j) << '\n';
    }
}

}  // namespace nowcast
