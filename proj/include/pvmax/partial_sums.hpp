// Prefix sums, the maximum M(phi), the normalized Fourier transform and the
// Plancherel reconstruction of partial sums.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "fft.hpp"
#include "finite_field.hpp"
#include "trace_families.hpp"

namespace pvmax {

/// coeffs[i] = phi_hat(h) with h = i + h_min, h in (-m/2, m/2].
struct SpectralVector {
    std::uint64_t m = 0;
    std::vector<complex> coeffs;

    std::int64_t h_min() const { return half_open_min(m); }
    std::int64_t h_max() const { return half_open_max(m); }
    std::size_t index(std::int64_t h) const {
        if (h < h_min() || h > h_max()) throw std::out_of_range("frequency outside (-m/2, m/2]");
        return static_cast<std::size_t>(h - h_min());
    }
    const complex& at(std::int64_t h) const { return coeffs[index(h)]; }
};

struct PrefixProfile {
    std::uint64_t m = 0;
    std::vector<complex> prefix;  // prefix[x] = sum_{0<=n<=x} phi(n)
    double max_value = 0;
    std::uint64_t argmax = 0;
    double psi = 0;  // m^(-1/2) Im sum_{0<=n<=floor(m/2)} phi(n)
};

inline PrefixProfile prefix_profile(const PeriodicFunction& phi) {
    PrefixProfile prof;
    prof.m = phi.m;
    prof.prefix.resize(phi.m);
    complex acc{};
    double best = 0;
    for (std::uint64_t x = 0; x < phi.m; ++x) {
        acc += phi.values[x];
        prof.prefix[x] = acc;
        const double v = std::norm(acc);
        if (v > best) {
            best = v;
            prof.argmax = x;
        }
    }
    prof.max_value = std::abs(prof.prefix.empty() ? complex{} : prof.prefix[prof.argmax]);
    if (phi.m > 0) prof.psi = prof.prefix[phi.m / 2].imag() / std::sqrt(static_cast<double>(phi.m));
    return prof;
}

/// Statistics only, without keeping the prefix array.
struct ProfileSummary {
    double max_value = 0;
    std::uint64_t argmax = 0;
    double psi = 0;
};

inline ProfileSummary profile_summary(const PeriodicFunction& phi) {
    ProfileSummary s;
    complex acc{}, at_max{};
    double best = 0;
    for (std::uint64_t x = 0; x < phi.m; ++x) {
        acc += phi.values[x];
        const double v = std::norm(acc);
        if (v > best) {
            best = v;
            s.argmax = x;
            at_max = acc;
        }
        if (x == phi.m / 2) s.psi = acc.imag() / std::sqrt(static_cast<double>(phi.m));
    }
    s.max_value = std::abs(at_max);
    return s;
}

/// Reference transform: direct O(m^2) summation.
inline SpectralVector fourier_transform_direct(const PeriodicFunction& phi) {
    const std::uint64_t m = phi.m;
    if (m < 2) throw std::invalid_argument("fourier_transform expects m >= 2");
    CharacterTable e(m);
    SpectralVector S{m, std::vector<complex>(m)};
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (std::size_t i = 0; i < m; ++i) {
        const std::int64_t h = static_cast<std::int64_t>(i) + S.h_min();
        const std::uint64_t hm = static_cast<std::uint64_t>((h % static_cast<std::int64_t>(m) + static_cast<std::int64_t>(m)) %
                                                            static_cast<std::int64_t>(m));
        complex acc{};
        std::uint64_t k = 0;  // h n mod m
        for (std::uint64_t n = 0; n < m; ++n) {
            acc += phi.values[n] * e[k];
            k += hm;
            if (k >= m) k -= m;
        }
        S.coeffs[i] = acc * scale;
    }
    return S;
}

/// phi_hat(h) = m^(-1/2) sum_n phi(n) e_m(h n), computed with FFTW.
inline SpectralVector fourier_transform(const PeriodicFunction& phi) {
    const std::uint64_t m = phi.m;
    if (m < 2) throw std::invalid_argument("fourier_transform expects m >= 2");
    const auto raw = fft::transform(phi.values, fft::Sign::plus);
    SpectralVector S{m, std::vector<complex>(m)};
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    const std::int64_t hmin = S.h_min();
    for (std::size_t i = 0; i < m; ++i) {
        const std::int64_t h = static_cast<std::int64_t>(i) + hmin;
        S.coeffs[i] = raw[static_cast<std::size_t>(h < 0 ? h + static_cast<std::int64_t>(m) : h)] * scale;
    }
    return S;
}

/// A single coefficient phi_hat(h) in O(m).
inline complex fourier_coefficient(const PeriodicFunction& phi, std::int64_t h, const CharacterTable& e) {
    const std::uint64_t m = phi.m;
    const std::int64_t mm = static_cast<std::int64_t>(m);
    const std::uint64_t hm = static_cast<std::uint64_t>((h % mm + mm) % mm);
    complex acc{};
    std::uint64_t k = 0;
    for (std::uint64_t n = 0; n < m; ++n) {
        acc += phi.values[n] * e[k];
        k += hm;
        if (k >= m) k -= m;
    }
    return acc / std::sqrt(static_cast<double>(m));
}

/// gamma_m(h; x) = m^(-1/2) sum_{0<=n<=x} e_m(n h), by the geometric sum.
inline complex gamma_partial(std::int64_t h, std::uint64_t x, std::uint64_t m) {
    const std::int64_t mm = static_cast<std::int64_t>(m);
    const std::int64_t hm = (h % mm + mm) % mm;
    if (hm == 0) return complex(static_cast<double>(x + 1)) / std::sqrt(static_cast<double>(m));
    // (e_m(h(x+1)) - 1) / (e_m(h) - 1)
    const std::int64_t top = static_cast<std::int64_t>((static_cast<unsigned __int128>(hm) * (x + 1)) % m);
    const complex num = additive_character(top, m) - 1.0;
    const complex den = additive_character(hm, m) - 1.0;
    return num / den / std::sqrt(static_cast<double>(m));
}

/// sum_{0<=n<=x} phi(n) = sum_h conj(gamma_m(h; x)) phi_hat(h).
inline complex plancherel_partial_sum(const SpectralVector& S, std::uint64_t x) {
    if (x >= S.m) throw std::out_of_range("plancherel_partial_sum expects 0 <= x < m");
    complex acc{};
    for (std::size_t i = 0; i < S.m; ++i) {
        const std::int64_t h = static_cast<std::int64_t>(i) + S.h_min();
        acc += std::conj(gamma_partial(h, x, S.m)) * S.coeffs[i];
    }
    return acc;
}

/// gamma_m(h) = -(1/m) Im sum_{0<=n<=floor(m/2)} e_m(n h), closed form.
inline double gamma_m(std::int64_t h, std::uint64_t m) {
    const std::int64_t mm = static_cast<std::int64_t>(m);
    std::int64_t hm = (h % mm + mm) % mm;
    if (hm == 0) return 0.0;
    if (hm > mm / 2) return -gamma_m(mm - hm, m);  // odd in h
    const std::uint64_t K = m / 2;
    const std::int64_t top = static_cast<std::int64_t>((static_cast<unsigned __int128>(hm) * (K + 1)) % m);
    const complex ratio = (additive_character(top, m) - 1.0) / (additive_character(hm, m) - 1.0);
    return -ratio.imag() / static_cast<double>(m);
}

/// max_j |prefix[floor(j m / J)]| for 0 <= j < J.
inline double coarse_grid_max(const PrefixProfile& prof, std::uint64_t J) {
    if (J < 1 || J > prof.m) throw std::invalid_argument("coarse_grid_max expects 1 <= J <= m");
    double best = 0;
    for (std::uint64_t j = 0; j < J; ++j) {
        const auto x = static_cast<std::uint64_t>(static_cast<unsigned __int128>(j) * prof.m / J);
        best = std::max(best, std::abs(prof.prefix[x]));
    }
    return best;
}

inline double coarse_grid_max(const PeriodicFunction& phi, std::uint64_t J) { return coarse_grid_max(prefix_profile(phi), J); }

/// Psi via the spectral identity sum_h gamma_m(h) phi_hat(h) (real part).
inline double psi_from_spectrum(const SpectralVector& S) {
    double acc = 0;
    for (std::size_t i = 0; i < S.m; ++i) {
        const std::int64_t h = static_cast<std::int64_t>(i) + S.h_min();
        acc += gamma_m(h, S.m) * S.coeffs[i].real();
    }
    return acc;
}

}  // namespace pvmax
