// Moment generating function of the USp(2r) trace and the constants A0, B0
// controlling the Laplace transform of the Psi model.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"
#include "parallel.hpp"
#include "partial_sums.hpp"

namespace pvmax {

namespace detail {

constexpr int max_rank = 3;
using Moments = std::array<double, 2 * max_rank - 1>;

/// M_k(t) = int_0^pi exp(2t(cos th - 1)) sin^2 th (1 - cos th)^k dth, k < 2r-1.
inline Moments weighted_moments(double t, int r) {
    const int K = 2 * r - 1;
    Moments M{};
    auto add_node = [&](double theta, double w) {
        const double s = std::sin(0.5 * theta);
        const double one_minus_cos = 2.0 * s * s;
        const double sin_t = std::sin(theta);
        double v = w * std::exp(-2.0 * t * one_minus_cos) * sin_t * sin_t;
        for (int k = 0; k < K; ++k) {
            M[static_cast<std::size_t>(k)] += v;
            v *= one_minus_cos;
        }
    };
    if (t <= 8.0) {
        using GL = boost::math::quadrature::gauss<double, 64>;
        const auto& x = GL::abscissa();
        const auto& w = GL::weights();
        const double half = 0.5 * std::numbers::pi;
        for (std::size_t i = 0; i < x.size(); ++i) {
            add_node(half * (1 + x[i]), half * w[i]);
            if (x[i] != 0) add_node(half * (1 - x[i]), half * w[i]);
        }
        return M;
    }
    // The weight is concentrated in theta <~ 1/sqrt(t); beyond 40/sqrt(2t) it
    // is below exp(-300) relative to the peak.
    const double upper = std::min(std::numbers::pi, 40.0 / std::sqrt(2.0 * t));
    for (int k = 0; k < K; ++k) {
        auto f = [&](double theta) {
            const double s = std::sin(0.5 * theta);
            const double omc = 2.0 * s * s;
            const double st = std::sin(theta);
            return std::exp(-2.0 * t * omc) * st * st * std::pow(omc, k);
        };
        double err = 0, l1 = 0;
        const double val = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, upper, 20, 1e-13, &err, &l1);
        if (!(err <= 1e-9 * l1) || !std::isfinite(val))
            throw NumericError("mgf", "adaptive quadrature did not converge at t=" + std::to_string(t) + ", k=" + std::to_string(k));
        M[static_cast<std::size_t>(k)] = val;
    }
    return M;
}

/// log det of the r x r Hankel matrix [M_{j+k}], after diagonal equilibration.
inline double log_det_hankel(const Moments& M, int r) {
    if (r == 1) return std::log(M[0]);
    double a[max_rank][max_rank];
    double log_scale = 0;
    for (int j = 0; j < r; ++j) log_scale += std::log(M[static_cast<std::size_t>(2 * j)]);
    for (int j = 0; j < r; ++j)
        for (int k = 0; k < r; ++k)
            a[j][k] = M[static_cast<std::size_t>(j + k)] /
                      std::sqrt(M[static_cast<std::size_t>(2 * j)] * M[static_cast<std::size_t>(2 * k)]);
    double log_det = 0;
    for (int c = 0; c < r; ++c) {
        int piv = c;
        for (int i = c + 1; i < r; ++i)
            if (std::abs(a[i][c]) > std::abs(a[piv][c])) piv = i;
        if (piv != c)
            for (int k = 0; k < r; ++k) std::swap(a[c][k], a[piv][k]);
        if (!(a[c][c] > 0) && !(a[c][c] < 0)) throw NumericError("mgf", "singular moment matrix");
        log_det += std::log(std::abs(a[c][c]));
        for (int i = c + 1; i < r; ++i) {
            const double f = a[i][c] / a[c][c];
            for (int k = c; k < r; ++k) a[i][k] -= f * a[c][k];
        }
    }
    return log_scale + log_det;
}

inline double log_det_at_zero(int r) {
    static const std::array<double, max_rank> cache = [] {
        std::array<double, max_rank> c{};
        for (int q = 1; q <= max_rank; ++q) c[static_cast<std::size_t>(q - 1)] = log_det_hankel(weighted_moments(0.0, q), q);
        return c;
    }();
    return cache[static_cast<std::size_t>(r - 1)];
}

inline void check_rank(int r) {
    if (r < 1 || r > max_rank) throw std::invalid_argument("model rank r must be 1, 2 or 3");
}

}  // namespace detail

/// log E exp(t X), X the trace of a Haar-random USp(2r) matrix. Uses the
/// Andreief identity E prod g(theta_j) = det[int g p_j p_k w] / det[int p_j p_k w]
/// with p_j = (1 - cos)^j and g = exp(2|t|(cos - 1)), so only 1-d integrals
/// are needed and large |t| does not overflow.
inline double log_mgf(double t, int r) {
    detail::check_rank(r);
    if (!(std::abs(t) <= 1e4)) throw std::invalid_argument("mgf expects |t| <= 1e4");
    if (t == 0) return 0;
    const double T = std::abs(t);
    return 2.0 * r * T + detail::log_det_hankel(detail::weighted_moments(T, r), r) - detail::log_det_at_zero(r);
}

inline double mgf(double t, int r) { return std::exp(log_mgf(t, r)); }

/// f_X(t) = log E e^{tX} for |t| < 1 and log E e^{tX} - N|t| for |t| >= 1.
inline double f_x(double t, int r) {
    const double l = log_mgf(t, r);
    return std::abs(t) < 1 ? l : l - 2.0 * r * std::abs(t);
}

struct FIntegral {
    double value = 0;       // int_{-inf}^{inf} f_X(u)/u^2 du
    double error = 0;       // estimated absolute error
    double tail = 0;        // contribution of |u| > U_cut
    double tail_bound = 0;  // monitored bound on |tail|, with slack factor 2
    double log_slope_c = 0; // max |f_X(u)| / log(2u) on [1e2, U_cut]
    double u_cut = 0;
};

inline FIntegral f_integral(int r, double tol = 1e-6, double u_cut = 1e4) {
    detail::check_rank(r);
    if (!(tol >= 1e-10)) throw std::invalid_argument("f_integral tolerance too small");
    if (!(u_cut >= 128)) throw std::invalid_argument("U_cut must be at least 128");
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    FIntegral out;
    out.u_cut = u_cut;
    double quad_err = 0;
    auto integrate = [&](auto&& f, double a, double b, double t) {
        double err = 0, l1 = 0;
        const double v = GK::integrate(f, a, b, 15, t, &err, &l1);
        if (!(err <= std::max(tol * 1e-2, 1e-14 * l1)) || !std::isfinite(v))
            throw NumericError("f_integral", "quadrature on [" + std::to_string(a) + ", " + std::to_string(b) + "] did not converge");
        quad_err += err;
        return v;
    };
    const double rel = std::min(1e-9, tol * 1e-3);
    // (0, 1]: removable singularity, f/u^2 -> E X^2 / 2 = 1/2
    auto inner = [&](double u) { return u < 1e-4 ? 0.5 : f_x(u, r) / (u * u); };
    double half = integrate(inner, 0.0, 1.0, rel);
    // [1, U]: dyadic panels
    auto outer = [&](double u) { return f_x(u, r) / (u * u); };
    for (double a = 1.0; a < u_cut; a *= 2) half += integrate(outer, a, std::min(2 * a, u_cut), rel);
    // tail beyond U from the fit f ~ a + b log u + c/u (Laplace asymptotics of
    // the mgf) on a window below U, integrated in closed form
    auto fit_tail = [&](double lo, double hi) {
        constexpr int K = 17;
        double A[3][4] = {};
        for (int i = 0; i < K; ++i) {
            const double x = std::log(lo) + (std::log(hi) - std::log(lo)) * i / (K - 1);
            const double u = std::min(std::exp(x), hi);
            const double y = f_x(u, r);
            const double basis[3] = {1.0, std::log(u), 1.0 / u};
            for (int j = 0; j < 3; ++j) {
                for (int k = 0; k < 3; ++k) A[j][k] += basis[j] * basis[k];
                A[j][3] += basis[j] * y;
            }
        }
        for (int c = 0; c < 3; ++c)  // Gauss-Jordan on the normal equations
            for (int j = 0; j < 3; ++j) {
                if (j == c) continue;
                const double f = A[j][c] / A[c][c];
                for (int k = c; k < 4; ++k) A[j][k] -= f * A[c][k];
            }
        const double a = A[0][3] / A[0][0], b = A[1][3] / A[1][1], c = A[2][3] / A[2][2];
        return (a + b * (std::log(u_cut) + 1)) / u_cut + c / (2 * u_cut * u_cut);
    };
    const double tail = fit_tail(u_cut / 8, u_cut);
    const double tail_alt = fit_tail(u_cut / 64, u_cut / 8);
    double c = 0;
    for (int i = 0; i <= 32; ++i) {
        const double u = std::min(u_cut, 1e2 * std::pow(u_cut / 1e2, i / 32.0));
        c = std::max(c, std::abs(f_x(u, r)) / std::log(2 * u));
    }
    out.log_slope_c = c;
    out.tail_bound = 2 * (2 * c * (std::log(2 * u_cut) + 1) / u_cut);
    if (2 * std::abs(tail) > out.tail_bound)
        throw NumericError("f_integral", "tail estimate exceeds the monitored log-decay bound");
    half += tail;
    out.tail = 2 * tail;
    out.value = 2 * half;
    out.error = 2 * (quad_err + std::abs(tail - tail_alt));
    if (!(out.error <= tol))
        throw NumericError("f_integral", "error estimate " + std::to_string(out.error) + " exceeds tolerance");
    return out;
}

struct ModelConstants {
    int r = 0;
    int N = 0;
    FIntegral integral;
    double A0 = 0;
    double B0 = 0;
    double B = 0;
};

inline ModelConstants a0_b0(int r, double tol = 1e-6) {
    detail::check_rank(r);
    ModelConstants c;
    c.r = r;
    c.N = 2 * r;
    c.integral = f_integral(r, tol);
    const double N = c.N, I = c.integral.value;
    c.A0 = (N / 2) * std::exp(-std::numbers::egamma - 1 - I / (2 * N));
    c.B0 = (N / std::numbers::pi) * (std::numbers::egamma + std::numbers::ln2 - std::log(std::numbers::pi) + I / (2 * N));
    c.B = std::log(c.A0) + 9;
    return c;
}

/// log E exp(s sum_{h != 0} gamma_m(h) X(h)) = sum_h log E exp(s gamma_m(h) X).
inline double laplace_log_product(double s, std::uint64_t m, int r) {
    detail::check_rank(r);
    if (m < 2) throw std::invalid_argument("laplace_log_product expects m >= 2");
    if (s == 0) return 0;
    const std::int64_t hmin = half_open_min(m);
    const std::size_t count = m;
    return parallel_reduce(
        count, 0.0,
        [&](std::size_t i) {
            const std::int64_t h = static_cast<std::int64_t>(i) + hmin;
            if (h == 0) return 0.0;
            try {
                return log_mgf(s * gamma_m(h, m), r);
            } catch (const NumericError& e) {
                throw NumericError("laplace", std::string(e.what()) + " (h=" + std::to_string(h) + ")");
            }
        },
        [](double a, double b) { return a + b; }, 4096);
}

inline double laplace_asymptotic(double s, const ModelConstants& c) {
    return (c.N / std::numbers::pi) * s * std::log(s) + c.B0 * s;
}

/// s = exp(pi V/N - pi B0/N - 1).
inline double saddle_point(double V, int r, double B0) {
    const double N = 2.0 * r;
    return std::exp(std::numbers::pi * V / N - std::numbers::pi * B0 / N - 1);
}

struct PsiPrediction {
    double value = 0;         // exp(-A0 exp(pi V / N))
    double error_factor = 0;  // V exp(-pi V / (2N))
};

inline PsiPrediction psi_prediction(double V, const ModelConstants& c) {
    const double N = c.N;
    return {std::exp(-c.A0 * std::exp(std::numbers::pi * V / N)), V * std::exp(-std::numbers::pi * V / (2 * N))};
}

}  // namespace pvmax
