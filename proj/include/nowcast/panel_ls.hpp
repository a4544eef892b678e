#pragma once

#include "nowcast/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace nowcast {

/// One stacked observation of a panel regression.
struct DesignRow {
    std::string entity;
    int year = 0;
    double y = 0.0;
    std::vector<double> x;
};

/// What a fit does when the pooled design has collinear columns.
enum class CollinearPolicy {
    Throw,  ///< raise SingularDesignError naming the columns
    Drop,   ///< pin aliased columns at zero and record them in the model
};

struct FixedEffectsModel {
    std::map<std::string, double> alpha;
    Eigen::VectorXd beta;
    std::vector<std::string> labels;
    std::vector<std::size_t> dropped;  ///< regressor indices pinned at zero
    double residual_variance = 0.0;
    std::size_t observations = 0;
};

struct WithinOptions {
    std::vector<std::string> labels;  ///< optional, one per regressor
    CollinearPolicy collinear = CollinearPolicy::Throw;
    bool standardize = false;  ///< z-score demeaned regressors before solving
    double rank_tolerance = 1e-10;
};

namespace detail {

[[nodiscard]] inline std::vector<std::string> default_labels(std::size_t k, const std::vector<std::string>& given) {
    if (!given.empty()) {
        if (given.size() != k) throw LengthError("label count does not match regressor count");
        return given;
    }
    std::vector<std::string> out(k);
    for (std::size_t j = 0; j < k; ++j) out[j] = "x" + std::to_string(j + 1);
    return out;
}

[[nodiscard]] inline std::size_t regressor_count(std::span<const DesignRow> rows) {
    if (rows.empty()) throw CoverageError("empty design");
    const std::size_t k = rows.front().x.size();
    for (const auto& r : rows) {
        if (r.x.size() != k) {
            throw LengthError("design row for '" + r.entity + "' (" + std::to_string(r.year) + ") has " +
                              std::to_string(r.x.size()) + " regressors, expected " + std::to_string(k));
        }
    }
    return k;
}

/// Columns of `m` that a pivoted QR at `tolerance` leaves outside the leading rank.
[[nodiscard]] inline std::vector<std::size_t> aliased_columns(const Eigen::MatrixXd& m, double tolerance,
                                                              std::size_t& rank) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    qr.setThreshold(tolerance);
    rank = static_cast<std::size_t>(qr.rank());
    std::vector<std::size_t> out;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = static_cast<Eigen::Index>(rank); j < m.cols(); ++j) {
        out.push_back(static_cast<std::size_t>(perm(j)));
    }
    std::sort(out.begin(), out.end());
    return out;
}

[[nodiscard]] inline std::string join_labels(const std::vector<std::size_t>& idx, const std::vector<std::string>& labels) {
    std::string out;
    for (std::size_t j : idx) {
        if (!out.empty()) out += ", ";
        out += labels[j];
    }
    return out;
}

}  // namespace detail

/// Fixed-effects least squares via within-entity demeaning.
///
/// Slopes solve least squares on the demeaned data by column-pivoted QR; each
/// intercept is alpha_i = mean_i(y) - mean_i(x)' beta. Unbalanced panels are fine.
[[nodiscard]] inline FixedEffectsModel fit_within(std::span<const DesignRow> rows, const WithinOptions& options = {}) {
    const std::size_t k = detail::regressor_count(rows);
    const std::size_t n = rows.size();

    struct Group {
        std::size_t count = 0;
        double y = 0.0;
        Eigen::VectorXd x;
    };
    std::map<std::string, Group> groups;
    for (const auto& r : rows) {
        auto& g = groups[r.entity];
        if (g.count == 0) g.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
        ++g.count;
        g.y += r.y;
        for (std::size_t j = 0; j < k; ++j) g.x(static_cast<Eigen::Index>(j)) += r.x[j];
    }
    for (auto& [entity, g] : groups) {
        if (g.count < 2) {
            throw DegenerateEntityError("entity '" + entity + "' has a single row; its fixed effect is not identified");
        }
        g.y /= static_cast<double>(g.count);
        g.x /= static_cast<double>(g.count);
    }

    FixedEffectsModel model;
    model.labels = detail::default_labels(k, options.labels);
    model.observations = n;
    model.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));

    Eigen::MatrixXd xd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    Eigen::VectorXd yd(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = rows[i];
        const auto& g = groups.at(r.entity);
        yd(static_cast<Eigen::Index>(i)) = r.y - g.y;
        for (std::size_t j = 0; j < k; ++j) {
            xd(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.x[j] - g.x(static_cast<Eigen::Index>(j));
        }
    }

    if (k > 0) {
        Eigen::VectorXd scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(k));
        if (options.standardize) {
            for (Eigen::Index j = 0; j < xd.cols(); ++j) {
                const double sd = std::sqrt(xd.col(j).squaredNorm() / static_cast<double>(n));
                if (sd > 0.0) scale(j) = sd;
            }
            xd = xd * scale.cwiseInverse().asDiagonal();
        }

        std::size_t rank = 0;
        const auto aliased = detail::aliased_columns(xd, options.rank_tolerance, rank);
        if (!aliased.empty()) {
            if (options.collinear == CollinearPolicy::Throw) {
                throw SingularDesignError("singular design: collinear columns after demeaning: " +
                                          detail::join_labels(aliased, model.labels));
            }
            model.dropped = aliased;
        }

        std::vector<Eigen::Index> kept;
        for (std::size_t j = 0; j < k; ++j) {
            if (!std::binary_search(model.dropped.begin(), model.dropped.end(), j)) {
                kept.push_back(static_cast<Eigen::Index>(j));
            }
        }
        if (!kept.empty()) {
            Eigen::MatrixXd xk(xd.rows(), static_cast<Eigen::Index>(kept.size()));
            for (std::size_t j = 0; j < kept.size(); ++j) xk.col(static_cast<Eigen::Index>(j)) = xd.col(kept[j]);
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xk);
            qr.setThreshold(options.rank_tolerance);
            const Eigen::VectorXd b = qr.solve(yd);
            for (std::size_t j = 0; j < kept.size(); ++j) {
                model.beta(kept[j]) = b(static_cast<Eigen::Index>(j)) / scale(kept[j]);
            }
        }
    }

    double ssr = 0.0;
    for (const auto& r : rows) {
        const auto& g = groups.at(r.entity);
        double fit = 0.0;
        for (std::size_t j = 0; j < k; ++j) fit += r.x[j] * model.beta(static_cast<Eigen::Index>(j));
        const double alpha = g.y - g.x.dot(model.beta);
        const double e = r.y - alpha - fit;
        ssr += e * e;
    }
    for (const auto& [entity, g] : groups) model.alpha[entity] = g.y - g.x.dot(model.beta);

    const double dof = static_cast<double>(n) - static_cast<double>(groups.size()) -
                       static_cast<double>(k - model.dropped.size());
    model.residual_variance = ssr / (dof > 0 ? dof : static_cast<double>(n));
    return model;
}

[[nodiscard]] inline FixedEffectsModel fit_within(const std::vector<DesignRow>& rows, const WithinOptions& options = {}) {
    return fit_within(std::span<const DesignRow>(rows), options);
}

/// alpha_entity + x' beta.
[[nodiscard]] inline double predict(const FixedEffectsModel& model, const std::string& entity,
                                    std::span<const double> x) {
    const auto it = model.alpha.find(entity);
    if (it == model.alpha.end()) throw UnknownEntityError("entity '" + entity + "' was not in the training design");
    if (static_cast<Eigen::Index>(x.size()) != model.beta.size()) {
        throw LengthError("predict: expected " + std::to_string(model.beta.size()) + " regressors, got " +
                          std::to_string(x.size()));
    }
    double out = it->second;
    for (std::size_t j = 0; j < x.size(); ++j) out += x[j] * model.beta(static_cast<Eigen::Index>(j));
    return out;
}

/// Coefficients as `label,value` rows: entity intercepts first, then slopes.
inline void write_coefficients_csv(std::ostream& out, const FixedEffectsModel& model) {
    out << "label,value\n";
    out.precision(17);
    for (const auto& [entity, a] : model.alpha) out << "alpha[" << entity << "]," << a << '\n';
    for (Eigen::Index j = 0; j < model.beta.size(); ++j) {
        out << model.labels[static_cast<std::size_t>(j)] << ',' << model.beta(j) << '\n';
    }
}

}  // namespace nowcast
