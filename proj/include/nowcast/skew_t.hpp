#pragma once

#include "nowcast/detail/bivariate_t.hpp"
#include "nowcast/errors.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace nowcast {

/// Skewed Student-t of Azzalini and Capitanio: location, scale, shape, degrees of freedom.
struct SkewTParams {
    double mu = 0.0;
    double sigma = 1.0;
    double alpha = 0.0;
    double nu = 5.0;

    void validate() const {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("skew-t scale must be positive");
        if (!(nu > 0.0)) throw DomainError("skew-t degrees of freedom must be positive");
        if (!std::isfinite(mu) || !std::isfinite(alpha)) throw DomainError("skew-t location and shape must be finite");
    }
};

namespace detail {

/// Above this many degrees of freedom the bivariate-t series is replaced by quadrature.
inline constexpr double kSeriesNuLimit = 2000.0;

[[nodiscard]] inline double student_pdf(double x, double nu) {
    return boost::math::pdf(boost::math::students_t_distribution<double>(nu), x);
}

[[nodiscard]] inline double student_cdf(double x, double nu) {
    return boost::math::cdf(boost::math::students_t_distribution<double>(nu), x);
}

[[nodiscard]] inline double skew_t_std_pdf(double z, double alpha, double nu) {
    if (!std::isfinite(z)) return 0.0;
    const double arg = alpha * z * std::sqrt((nu + 1.0) / (nu + z * z));
    return 2.0 * student_pdf(z, nu) * student_cdf(arg, nu + 1.0);
}

/// P(Z <= z) for z <= 0, accurate relative to its own size.
[[nodiscard]] inline double skew_t_std_lower_tail(double z, double alpha, double nu) {
    // Series cancellation leaves absolute error near 1e-17; tiny tails go to quadrature.
    constexpr double kSeriesFloor = 1e-9;
    if (nu == std::floor(nu) && nu <= kSeriesNuLimit) {
        const double delta = alpha / std::sqrt(1.0 + alpha * alpha);
        const double series = 2.0 * bvt_lower(static_cast<int>(nu), z, 0.0, -delta);
        if (series >= kSeriesFloor) return std::min(series, 1.0);
    }
    auto f = [&](double t) { return skew_t_std_pdf(t, alpha, nu); };
    using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
    return std::clamp(Quad::integrate(f, -std::numeric_limits<double>::infinity(), z, 20, 1e-14), 0.0, 1.0);
}

[[nodiscard]] inline double skew_t_std_cdf(double z, double alpha, double nu) {
    if (z == -std::numeric_limits<double>::infinity()) return 0.0;
    if (z == std::numeric_limits<double>::infinity()) return 1.0;
    if (alpha == 0.0) return student_cdf(z, nu);
    // F(z) = 2 P(T1 < z, T2 < 0) for a bivariate t with correlation -alpha / sqrt(1 + alpha^2);
    // the upper half uses 1 - F(z; alpha) = F(-z; -alpha).
    if (z <= 0.0) return skew_t_std_lower_tail(z, alpha, nu);
    return 1.0 - skew_t_std_lower_tail(-z, -alpha, nu);
}

/// Inverse of skew_t_std_cdf by bracketing then safeguarded Newton steps.
[[nodiscard]] inline double skew_t_std_quantile(double tau, double alpha, double nu) {
    if (alpha == 0.0) {
        return boost::math::quantile(boost::math::students_t_distribution<double>(nu), tau);
    }
    double lo = -1.0;
    double hi = 1.0;
    while (skew_t_std_cdf(lo, alpha, nu) > tau) {
        hi = lo;
        lo *= 2.0;
        if (lo < -1e300) return lo;
    }
    while (skew_t_std_cdf(hi, alpha, nu) < tau) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) return hi;
    }
    double x = std::clamp(boost::math::quantile(boost::math::students_t_distribution<double>(nu), tau), lo, hi);
    if (x == lo || x == hi) x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double g = skew_t_std_cdf(x, alpha, nu) - tau;
        if (g == 0.0) return x;
        if (g < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        const double slope = skew_t_std_pdf(x, alpha, nu);
        double next = slope > 0.0 ? x - g / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double tol = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(x));
        if (std::abs(next - x) <= tol || hi - lo <= tol) return next;
        x = next;
    }
    return x;
}

/// Quantile within a known bracket [lo, hi], starting Newton from `guess`.
[[nodiscard]] inline double skew_t_std_quantile_in(double tau, double alpha, double nu, double lo, double hi,
                                                   double guess) {
    if (!(lo < hi)) return lo;
    double x = std::clamp(guess, lo, hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double g = skew_t_std_cdf(x, alpha, nu) - tau;
        if (g == 0.0) return x;
        if (g < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        const double slope = skew_t_std_pdf(x, alpha, nu);
        double next = slope > 0.0 ? x - g / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double tol = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(x));
        if (std::abs(next - x) <= tol || hi - lo <= tol) return next;
        x = next;
    }
    return x;
}

}  // namespace detail

/// f(x) = (2/sigma) t_nu(z) T_{nu+1}(alpha z sqrt((nu+1)/(nu+z^2))), z = (x - mu)/sigma.
[[nodiscard]] inline double pdf(const SkewTParams& p, double x) {
    p.validate();
    return detail::skew_t_std_pdf((x - p.mu) / p.sigma, p.alpha, p.nu) / p.sigma;
}

[[nodiscard]] inline double cdf(const SkewTParams& p, double x) {
    p.validate();
    return detail::skew_t_std_cdf((x - p.mu) / p.sigma, p.alpha, p.nu);
}

[[nodiscard]] inline double quantile(const SkewTParams& p, double tau) {
    p.validate();
    if (!(tau > 0.0 && tau < 1.0)) throw DomainError("quantile level must lie in (0,1)");
    return p.mu + p.sigma * detail::skew_t_std_quantile(tau, p.alpha, p.nu);
}

struct SkewTFitOptions {
    std::vector<double> levels = {0.25, 0.5, 0.75};
    std::vector<double> nu_grid = {3, 5, 8, 12, 20, 30};
    int shape_grid_points = 81;  ///< coarse grid over eta = asinh(alpha) in [-eta_bound, eta_bound]
    double eta_bound = 5.0;
};

struct SkewTProfileEntry {
    SkewTParams params;
    double objective = 0.0;
};

struct SkewTFit {
    SkewTParams params;
    double objective = 0.0;
    std::vector<SkewTProfileEntry> profile;  ///< best (mu, sigma, alpha) at each grid nu
};

namespace detail {

struct ShapeFit {
    double mu = 0.0;
    double sigma = 1.0;
    double objective = 0.0;
};

/// For fixed shape and nu the target is linear in (mu, sigma): closed-form least squares.
[[nodiscard]] inline ShapeFit fit_location_scale(std::span<const double> values, std::span<const double> z,
                                                 double sigma_floor) {
    const auto n = static_cast<double>(values.size());
    double vbar = 0.0;
    double zbar = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
        vbar += values[j];
        zbar += z[j];
    }
    vbar /= n;
    zbar /= n;
    double szz = 0.0;
    double szv = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
        szz += (z[j] - zbar) * (z[j] - zbar);
        szv += (z[j] - zbar) * (values[j] - vbar);
    }
    ShapeFit out;
    out.sigma = szz > 0.0 ? std::max(szv / szz, sigma_floor) : sigma_floor;
    out.mu = vbar - out.sigma * zbar;
    for (std::size_t j = 0; j < values.size(); ++j) {
        const double e = values[j] - out.mu - out.sigma * z[j];
        out.objective += e * e;
    }
    return out;
}

}  // namespace detail

namespace detail {

/// Standardized quantiles z[k][j] at eta_k on the shape grid, for one nu. Depends only
/// on the options, so it is computed once per process and shared.
struct ShapeGrid {
    std::vector<double> eta;
    std::vector<std::vector<double>> z;
};

[[nodiscard]] inline const ShapeGrid& shape_grid(const std::vector<double>& levels, double nu, int points,
                                                 double bound) {
    using Key = std::tuple<std::vector<double>, double, int, double>;
    static std::mutex mutex;
    static std::map<Key, ShapeGrid> cache;
    const std::lock_guard lock(mutex);
    auto [it, inserted] = cache.try_emplace(Key{levels, nu, points, bound});
    if (inserted) {
        ShapeGrid& grid = it->second;
        const double step = 2.0 * bound / (points - 1);
        for (int k = 0; k < points; ++k) {
            const double eta = -bound + step * k;
            grid.eta.push_back(eta);
            std::vector<double> z;
            for (double tau : levels) z.push_back(skew_t_std_quantile(tau, std::sinh(eta), nu));
            grid.z.push_back(std::move(z));
        }
    }
    return it->second;
}

}  // namespace detail

/// Quantile matching: minimizes sum_j (values_j - quantile(params, levels_j))^2.
///
/// Shape alpha = sinh(eta) is searched on a grid then refined by Brent's method, with
/// (mu, sigma) solved in closed form for each shape; nu is profiled over the grid and the
/// smallest nu within 1e-12 * IQR^2 of the best objective is returned.
[[nodiscard]] inline SkewTFit fit_from_quantiles(std::span<const double> values_in, const SkewTFitOptions& options = {}) {
    const std::size_t n = options.levels.size();
    if (values_in.size() != n) {
        throw LengthError("fit_from_quantiles: " + std::to_string(values_in.size()) + " values for " +
                          std::to_string(n) + " levels");
    }
    if (n < 3) throw LengthError("fit_from_quantiles needs at least three quantiles");
    if (options.nu_grid.empty()) throw DomainError("fit_from_quantiles needs a nonempty nu grid");
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(values_in[j])) throw DomainError("fit_from_quantiles: nonfinite quantile value");
        if (!(options.levels[j] > 0.0 && options.levels[j] < 1.0)) throw DomainError("quantile level must lie in (0,1)");
        if (j > 0 && !(options.levels[j] > options.levels[j - 1])) throw OrderingError("quantile levels must ascend");
    }

    std::vector<double> values(values_in.begin(), values_in.end());
    const double widen = 1e-9 * std::max(1.0, std::abs(values[n / 2]));
    for (std::size_t j = 1; j < n; ++j) {
        if (values_in[j] < values_in[j - 1]) {
            throw OrderingError("fit_from_quantiles: quantile values must be ascending");
        }
        if (values[j] <= values[j - 1]) values[j] = values[j - 1] + widen;
    }
    const double iqr = values.back() - values.front();
    const double sigma_floor = 1e-8 * iqr;

    SkewTFit out;
    std::vector<double> z(n);
    const int points = std::max(3, options.shape_grid_points);
    for (double nu : options.nu_grid) {
        const auto& grid = detail::shape_grid(options.levels, nu, points, options.eta_bound);
        int best_k = 0;
        double best_obj = std::numeric_limits<double>::infinity();
        for (int k = 0; k < points; ++k) {
            const double obj = detail::fit_location_scale(values, grid.z[static_cast<std::size_t>(k)], sigma_floor).objective;
            if (obj < best_obj) {
                best_obj = obj;
                best_k = k;
            }
        }
        // Quantiles increase with the shape, so neighbouring grid rows bracket every z in between.
        const auto k_lo = static_cast<std::size_t>(std::max(0, best_k - 1));
        const auto k_hi = static_cast<std::size_t>(std::min(points - 1, best_k + 1));
        auto standardized = [&](double eta) {
            const double w = (eta - grid.eta[k_lo]) / (grid.eta[k_hi] - grid.eta[k_lo]);
            for (std::size_t j = 0; j < n; ++j) {
                const double a = grid.z[k_lo][j];
                const double b = grid.z[k_hi][j];
                z[j] = detail::skew_t_std_quantile_in(options.levels[j], std::sinh(eta), nu, a, b, a + w * (b - a));
            }
        };
        auto shape_objective = [&](double eta) {
            standardized(eta);
            return detail::fit_location_scale(values, z, sigma_floor).objective;
        };

        double best_eta = grid.eta[static_cast<std::size_t>(best_k)];
        if (best_obj > 0.0) {
            boost::uintmax_t max_iter = 200;
            const auto [eta, obj] = boost::math::tools::brent_find_minima(
                shape_objective, grid.eta[k_lo], grid.eta[k_hi], std::numeric_limits<double>::digits, max_iter);
            if (obj < best_obj) {
                best_obj = obj;
                best_eta = eta;
            }
        }

        if (best_eta == grid.eta[static_cast<std::size_t>(best_k)]) {
            z = grid.z[static_cast<std::size_t>(best_k)];
        } else {
            standardized(best_eta);
        }
        const auto ls = detail::fit_location_scale(values, z, sigma_floor);
        out.profile.push_back({SkewTParams{ls.mu, ls.sigma, std::sinh(best_eta), nu}, ls.objective});
    }

    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : out.profile) best = std::min(best, e.objective);
    const double tie = best + 1e-12 * iqr * iqr;
    const SkewTProfileEntry* chosen = nullptr;
    for (const auto& e : out.profile) {
        if (e.objective <= tie && (chosen == nullptr || e.params.nu < chosen->params.nu)) chosen = &e;
    }
    out.params = chosen->params;
    out.objective = chosen->objective;
    return out;
}

struct DensityPoint {
    double x = 0.0;
    double pdf = 0.0;
};

/// Evenly spaced pdf values covering mu +/- half_width_iqr * IQR and the central 99.8% of mass,
/// with at least 50 points per IQR so heavy tails do not starve the peak of resolution.
[[nodiscard]] inline std::vector<DensityPoint> density_grid(const SkewTParams& p, int points = 401,
                                                            double half_width_iqr = 5.0) {
    p.validate();
    if (points < 2) throw DomainError("density grid needs at least two points");
    const double iqr = quantile(p, 0.75) - quantile(p, 0.25);
    const double lo = std::min(p.mu - half_width_iqr * iqr, quantile(p, 1e-3));
    const double hi = std::max(p.mu + half_width_iqr * iqr, quantile(p, 1.0 - 1e-3));
    const auto n = std::max(static_cast<std::size_t>(points), static_cast<std::size_t>(std::ceil(50.0 * (hi - lo) / iqr)) + 1);
    std::vector<DensityPoint> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
        out[k] = {x, pdf(p, x)};
    }
    return out;
}

}  // namespace nowcast
