// The extremal functional G(H) = max over alpha and y in [-1,1]^{2H} of
// |sum_{0<|h|<=H} (e(alpha h) - 1)/h * y_h|.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "parallel.hpp"

namespace pvmax {

struct GmaxResult {
    int H = 0;
    double exact = 0;
    double asymptotic = 0;
    std::optional<double> bruteforce;
    double alpha_star = 0;
    double theta_star = 0;
};

/// Closed forms: 2 sum (1 - (-1)^h)/h for odd H, and
/// 2 sum (1/h)(1 - (-1)^h cos(pi h/(H+1))) for even H.
inline double g_exact(int H) {
    if (H < 1) throw std::invalid_argument("g_exact expects H >= 1");
    double acc = 0;
    if (H % 2 == 1) {
        for (int h = H; h >= 1; --h) acc += (h % 2 ? 2.0 : 0.0) / h;
    } else {
        const double c = std::numbers::pi / (H + 1);
        for (int h = H; h >= 1; --h) acc += (1.0 - (h % 2 ? -1.0 : 1.0) * std::cos(c * h)) / h;
    }
    return 2.0 * acc;
}

inline double g_asymptotic(int H) {
    if (H < 1) throw std::invalid_argument("g_asymptotic expects H >= 1");
    return 2.0 * std::log(static_cast<double>(H)) + 2.0 * std::numbers::ln2 + 2.0 * std::numbers::egamma;
}

namespace detail {

/// For fixed alpha, max over theta in the grid of sum_{0<|h|<=H} |Re(e^{-i theta} c_h)|.
/// c holds h > 0 only; c_{-h} = -conj(c_h) contributes |x cos - y sin|.
inline std::pair<double, double> best_theta(const std::vector<std::complex<double>>& c, const std::vector<double>& cos_t,
                                            const std::vector<double>& sin_t) {
    const int theta_grid = static_cast<int>(cos_t.size());
    double best = -1, best_theta = 0;
    for (int j = 0; j < theta_grid; ++j) {
        const double theta = std::numbers::pi * j / theta_grid;
        const double ct = cos_t[static_cast<std::size_t>(j)], st = sin_t[static_cast<std::size_t>(j)];
        double acc = 0;
        for (const auto& z : c) {
            const double xc = z.real() * ct, ys = z.imag() * st;
            acc += std::abs(xc + ys) + std::abs(xc - ys);
        }
        if (acc > best) {
            best = acc;
            best_theta = theta;
        }
    }
    return {best, best_theta};
}

inline std::vector<std::complex<double>> g_coefficients(int H, double alpha) {
    std::vector<std::complex<double>> c(static_cast<std::size_t>(H));
    for (int h = 1; h <= H; ++h) {
        const double a = 2.0 * std::numbers::pi * alpha * h;
        c[static_cast<std::size_t>(h - 1)] = std::complex<double>(std::cos(a) - 1.0, std::sin(a)) / static_cast<double>(h);
    }
    return c;
}

}  // namespace detail

/// Grid lower bound for G(H). The inner box maximum equals
/// max_theta sum_h |Re(e^{-i theta} c_h)|; theta in [0, pi) suffices.
inline GmaxResult g_bruteforce(int H, int alpha_grid = 4096, int theta_grid = 4096) {
    if (H < 1 || H > 64) throw std::invalid_argument("g_bruteforce expects 1 <= H <= 64");
    if (alpha_grid < 4 * H || theta_grid < 4 * H) throw std::invalid_argument("grids must have at least 4H points");
    struct Best {
        double value = -1, alpha = 0, theta = 0;
    };
    std::vector<double> cos_t(static_cast<std::size_t>(theta_grid)), sin_t(cos_t.size());
    for (int j = 0; j < theta_grid; ++j) {
        cos_t[static_cast<std::size_t>(j)] = std::cos(std::numbers::pi * j / theta_grid);
        sin_t[static_cast<std::size_t>(j)] = std::sin(std::numbers::pi * j / theta_grid);
    }
    std::vector<Best> per_alpha(static_cast<std::size_t>(alpha_grid));
    parallel_for(per_alpha.size(), [&](std::size_t j) {
        const double alpha = static_cast<double>(j) / alpha_grid;
        auto [v, th] = detail::best_theta(detail::g_coefficients(H, alpha), cos_t, sin_t);
        per_alpha[j] = {v, alpha, th};
    });
    Best best;
    for (const Best& b : per_alpha)
        if (b.value > best.value) best = b;
    GmaxResult res;
    res.H = H;
    res.exact = g_exact(H);
    res.asymptotic = g_asymptotic(H);
    res.bruteforce = best.value;
    res.alpha_star = best.alpha;
    res.theta_star = best.theta;
    return res;
}

/// Objective at a fixed alpha with y_h = -sign(h); at alpha = 1/2 this attains
/// G(H) for odd H.
inline double g_objective_witness(int H, double alpha) {
    std::complex<double> acc{};
    for (int h = 1; h <= H; ++h) {
        const double a = 2.0 * std::numbers::pi * alpha * h;
        const std::complex<double> c(std::cos(a) - 1.0, std::sin(a));
        const std::complex<double> cm(std::cos(a) - 1.0, -std::sin(a));
        acc += -1.0 * (c / static_cast<double>(h)) + 1.0 * (cm / static_cast<double>(-h));
    }
    return std::abs(acc);
}

/// Checks sum_{h<=H} sin^2(pi alpha h)/h <= sum_{h<=H} (1 - (-1)^h)/(2h) on the
/// grid alpha_j = j / (2 grid), j = 0..grid.
inline bool sin_sum_monotone_check(int H, int grid) {
    if (H < 1 || H % 2 == 0) throw std::invalid_argument("sin_sum_monotone_check expects odd H");
    if (grid < 1) throw std::invalid_argument("grid must be positive");
    double bound = 0;
    for (int h = 1; h <= H; h += 2) bound += 1.0 / h;
    for (int j = 0; j <= grid; ++j) {
        const double alpha = 0.5 * j / grid;
        double acc = 0;
        for (int h = 1; h <= H; ++h) {
            const double s = std::sin(std::numbers::pi * alpha * h);
            acc += s * s / h;
        }
        if (acc > bound + 1e-12) return false;
    }
    return true;
}

}  // namespace pvmax
