// Weyl integration density of USp(2r) on the eigenangle box [0, pi]^r.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace pvmax::weyl {

/// Unnormalized density prod_{j<k} (cos t_k - cos t_j)^2 prod_h sin^2 t_h.
inline double density(std::span<const double> theta) {
    double f = 1.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double cj = std::cos(theta[j]), sj = std::sin(theta[j]);
        f *= sj * sj;
        for (std::size_t k = j + 1; k < theta.size(); ++k) {
            const double d = std::cos(theta[k]) - cj;
            f *= d * d;
        }
    }
    return f;
}

/// Integral of density over [0, pi]^r: r! pi^r / 2^(r^2).
inline double normalization(int r) {
    double z = 1.0;
    for (int i = 1; i <= r; ++i) z *= i * std::numbers::pi;
    return std::ldexp(z, -r * r);
}

inline double trace(std::span<const double> theta) {
    double x = 0;
    for (double t : theta) x += 2.0 * std::cos(t);
    return x;
}

/// Maximum of the density, located by a grid search followed by shrinking
/// coordinate moves. Computed once per r.
inline double density_max(int r) {
    if (r < 1 || r > 3) throw std::invalid_argument("density_max supports 1 <= r <= 3");
    static std::once_flag flags[3];
    static double cache[3];
    std::call_once(flags[r - 1], [r] {
        const int grid = r == 1 ? 2000 : (r == 2 ? 400 : 120);
        std::vector<double> best(static_cast<std::size_t>(r)), cur(static_cast<std::size_t>(r));
        double fbest = -1;
        std::vector<int> idx(static_cast<std::size_t>(r), 0);
        for (;;) {
            for (int i = 0; i < r; ++i) cur[static_cast<std::size_t>(i)] = std::numbers::pi * (idx[static_cast<std::size_t>(i)] + 0.5) / grid;
            const double f = density(cur);
            if (f > fbest) {
                fbest = f;
                best = cur;
            }
            int i = 0;
            while (i < r && ++idx[static_cast<std::size_t>(i)] == grid) idx[static_cast<std::size_t>(i++)] = 0;
            if (i == r) break;
        }
        for (double step = std::numbers::pi / grid; step > 1e-12; step *= 0.5) {
            bool moved = true;
            while (moved) {
                moved = false;
                for (int i = 0; i < r; ++i) {
                    for (double dir : {-1.0, 1.0}) {
                        cur = best;
                        cur[static_cast<std::size_t>(i)] = std::clamp(cur[static_cast<std::size_t>(i)] + dir * step, 0.0, std::numbers::pi);
                        const double f = density(cur);
                        if (f > fbest) {
                            fbest = f;
                            best = cur;
                            moved = true;
                        }
                    }
                }
            }
        }
        cache[r - 1] = fbest;
    });
    return cache[r - 1];
}

}  // namespace pvmax::weyl
