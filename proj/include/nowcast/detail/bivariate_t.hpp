#pragma once

#include <cmath>
#include <numbers>

namespace nowcast::detail {

/// P(X < h, Y < k) for a standard bivariate Student-t with integer `nu` degrees of
/// freedom and correlation `r`, by the Dunnett-Sobel finite series (Genz's bvtl).
/// Cost is linear in nu.
[[nodiscard]] inline double bvt_lower(int nu, double h, double k, double r) noexcept {
    constexpr double pi = std::numbers::pi;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double dnu = nu;
    const double snu = std::sqrt(dnu);
    const double ors = 1.0 - r * r;
    const double hrk = h - r * k;
    const double krh = k - r * h;
    double xnhk = 0.0;
    double xnkh = 0.0;
    if (std::abs(hrk) + ors > 0.0) {
        xnhk = hrk * hrk / (hrk * hrk + ors * (dnu + k * k));
        xnkh = krh * krh / (krh * krh + ors * (dnu + h * h));
    }
    const double hs = std::copysign(1.0, h - r * k);
    const double ks = std::copysign(1.0, k - r * h);

    double bvt = 0.0;
    if (nu % 2 == 0) {
        bvt = std::atan2(std::sqrt(ors), -r) / two_pi;
        double gmph = h / std::sqrt(16.0 * (dnu + h * h));
        double gmpk = k / std::sqrt(16.0 * (dnu + k * k));
        double btnckh = 2.0 * std::atan2(std::sqrt(xnkh), std::sqrt(1.0 - xnkh)) / pi;
        double btpdkh = 2.0 * std::sqrt(xnkh * (1.0 - xnkh)) / pi;
        double btnchk = 2.0 * std::atan2(std::sqrt(xnhk), std::sqrt(1.0 - xnhk)) / pi;
        double btpdhk = 2.0 * std::sqrt(xnhk * (1.0 - xnhk)) / pi;
        for (int j = 1; j <= nu / 2; ++j) {
            bvt += gmph * (1.0 + ks * btnckh);
            bvt += gmpk * (1.0 + hs * btnchk);
            btnckh += btpdkh;
            btpdkh = 2.0 * j * btpdkh * (1.0 - xnkh) / (2.0 * j + 1.0);
            btnchk += btpdhk;
            btpdhk = 2.0 * j * btpdhk * (1.0 - xnhk) / (2.0 * j + 1.0);
            gmph = gmph * (2.0 * j - 1.0) / (2.0 * j * (1.0 + h * h / dnu));
            gmpk = gmpk * (2.0 * j - 1.0) / (2.0 * j * (1.0 + k * k / dnu));
        }
    } else {
        const double qhrk = std::sqrt(h * h + k * k - 2.0 * r * h * k + dnu * ors);
        const double hkrn = h * k + r * dnu;
        const double hkn = h * k - dnu;
        const double hpk = h + k;
        bvt = std::atan2(-snu * (hkn * qhrk + hpk * hkrn), hkn * hkrn - dnu * hpk * qhrk) / two_pi;
        if (bvt < -1e-15) bvt += 1.0;
        double gmph = h / (two_pi * snu * (1.0 + h * h / dnu));
        double gmpk = k / (two_pi * snu * (1.0 + k * k / dnu));
        double btnckh = std::sqrt(xnkh);
        double btpdkh = btnckh;
        double btnchk = std::sqrt(xnhk);
        double btpdhk = btnchk;
        for (int j = 1; j <= (nu - 1) / 2; ++j) {
            bvt += gmph * (1.0 + ks * btnckh);
            bvt += gmpk * (1.0 + hs * btnchk);
            btpdkh = (2.0 * j - 1.0) * btpdkh * (1.0 - xnkh) / (2.0 * j);
            btnckh += btpdkh;
            btpdhk = (2.0 * j - 1.0) * btpdhk * (1.0 - xnhk) / (2.0 * j);
            btnchk += btpdhk;
            gmph = 2.0 * j * gmph / ((2.0 * j + 1.0) * (1.0 + h * h / dnu));
            gmpk = 2.0 * j * gmpk / ((2.0 * j + 1.0) * (1.0 + k * k / dnu));
        }
    }
    return bvt;
}

}  // namespace nowcast::detail
