#pragma once

#include "nowcast/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace nowcast {

/// Restricted Almon polynomial of degree `degree` over `lags` high-frequency lags.
///
/// `restrictions` end-point conditions are imposed at the oldest lag (c = lags-1):
/// one forces the weight to zero there, two also force its slope to zero.
struct AlmonSpec {
    int degree = 3;
    int restrictions = 2;
    int lags = 52;

    [[nodiscard]] int free_parameters() const noexcept { return degree + 1 - restrictions; }

    void validate() const {
        if (degree < 1) throw DomainError("Almon degree must be at least 1");
        if (restrictions < 0 || restrictions > 2) throw DomainError("Almon restrictions must be 0, 1 or 2");
        if (lags < degree + 1) throw DomainError("Almon lag count must exceed the polynomial degree");
        if (free_parameters() < 1) throw DomainError("Almon restrictions leave no free parameter");
    }
};

/// Linear map from the raw lag vector (newest first) to the transformed regressors.
struct AlmonMap {
    AlmonSpec spec;
    Eigen::MatrixXd vandermonde;    ///< lags x (degree+1), entry (c, l) = c^l
    Eigen::MatrixXd restriction;    ///< restrictions x (degree+1)
    Eigen::MatrixXd null_basis;     ///< (degree+1) x free_parameters, orthonormal unless unrestricted
    Eigen::MatrixXd weighting;      ///< free_parameters x lags; transformed = weighting * raw

    /// Transformed regressors for one raw lag vector.
    [[nodiscard]] Eigen::VectorXd transform(std::span<const double> raw) const {
        if (static_cast<int>(raw.size()) != spec.lags) {
            throw LengthError("Almon transform expects " + std::to_string(spec.lags) + " lags, got " +
                              std::to_string(raw.size()));
        }
        return weighting * Eigen::Map<const Eigen::VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size()));
    }
};

/// Builds the weighting matrix Q = (V N)^T, with N an orthonormal basis of the null space
/// of the end-point restriction rows. With no restrictions N is the identity.
[[nodiscard]] inline AlmonMap build_almon_map(const AlmonSpec& spec) {
    spec.validate();
    const int cols = spec.degree + 1;
    AlmonMap map;
    map.spec = spec;

    map.vandermonde.resize(spec.lags, cols);
    for (int c = 0; c < spec.lags; ++c) {
        double power = 1.0;
        for (int l = 0; l < cols; ++l) {
            map.vandermonde(c, l) = power;
            power *= c;
        }
    }

    const double last = spec.lags - 1;
    map.restriction.resize(spec.restrictions, cols);
    if (spec.restrictions >= 1) {
        for (int l = 0; l < cols; ++l) map.restriction(0, l) = std::pow(last, l);
    }
    if (spec.restrictions >= 2) {
        map.restriction(1, 0) = 0.0;
        for (int l = 1; l < cols; ++l) map.restriction(1, l) = l * std::pow(last, l - 1);
    }

    if (spec.restrictions == 0) {
        map.null_basis = Eigen::MatrixXd::Identity(cols, cols);
    } else {
        // (c - L)^r c^j, j = 0..p-r, span null(A) with integer coefficients. Orthonormalizing
        // that exact basis keeps every entry accurate relative to itself, so A N vanishes to
        // round-off even though A carries entries as large as L^p.
        using Mat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
        const int free = spec.free_parameters();
        Mat basis = Mat::Zero(cols, free);
        for (int j = 0; j < free; ++j) {
            long double binom = 1.0L;
            for (int i = 0; i <= spec.restrictions; ++i) {
                basis(i + j, j) = binom * std::pow(-static_cast<long double>(last), spec.restrictions - i);
                binom = binom * (spec.restrictions - i) / (i + 1);
            }
        }
        // Modified Gram-Schmidt with one reorthogonalization pass: the thin Q of `basis`.
        for (int j = 0; j < free; ++j) {
            for (int pass = 0; pass < 2; ++pass) {
                for (int k = 0; k < j; ++k) basis.col(j) -= basis.col(k).dot(basis.col(j)) * basis.col(k);
            }
            basis.col(j) /= basis.col(j).norm();
        }
        map.null_basis = basis.cast<double>();
        for (Eigen::Index j = 0; j < map.null_basis.cols(); ++j) {
            for (Eigen::Index i = 0; i < map.null_basis.rows(); ++i) {
                const double v = map.null_basis(i, j);
                if (std::abs(v) > 1e-14) {
                    if (v < 0) map.null_basis.col(j) *= -1.0;
                    break;
                }
            }
        }
        const double scale = map.restriction.cwiseAbs().maxCoeff();
        if ((map.restriction * map.null_basis).cwiseAbs().maxCoeff() > 1e-9 * scale) {
            throw Error("Almon null-space basis failed to satisfy the end-point restrictions");
        }
    }
    map.weighting = (map.vandermonde * map.null_basis).transpose();
    return map;
}

/// Per-lag weights b = V N gamma implied by coefficients on the transformed regressors.
/// With `sum_to_one` the weights are rescaled to unit sum (reporting only).
[[nodiscard]] inline std::vector<double> implied_weights(const AlmonMap& map, std::span<const double> gamma,
                                                         bool sum_to_one = false) {
    if (static_cast<int>(gamma.size()) != map.spec.free_parameters()) {
        throw LengthError("implied_weights expects " + std::to_string(map.spec.free_parameters()) +
                          " coefficients, got " + std::to_string(gamma.size()));
    }
    const Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(gamma.data(), static_cast<Eigen::Index>(gamma.size()));
    const Eigen::VectorXd b = map.vandermonde * (map.null_basis * g);
    std::vector<double> out(b.data(), b.data() + b.size());
    if (sum_to_one) {
        const double total = b.sum();
        if (total == 0.0) throw DomainError("implied weights sum to zero; cannot normalize");
        for (double& w : out) w /= total;
    }
    return out;
}

}  // namespace nowcast
