// Arithmetic over prime fields F_p and binary fields GF(2^r).
#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace pvmax {

using complex = std::complex<double>;

/// Deterministic Miller-Rabin, exact for every 64-bit input.
constexpr bool is_prime(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t q : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % q == 0) return n == q;
    }
    auto mulmod = [](std::uint64_t a, std::uint64_t b, std::uint64_t m) {
        return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
    };
    auto powmod = [&](std::uint64_t a, std::uint64_t e, std::uint64_t m) {
        std::uint64_t r = 1;
        while (e) {
            if (e & 1) r = mulmod(r, a, m);
            a = mulmod(a, a, m);
            e >>= 1;
        }
        return r;
    };
    std::uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        std::uint64_t x = powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 1; i < s; ++i) {
            x = mulmod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

/// An odd prime modulus. Residues live in [0, p-1].
class PrimeField {
public:
    explicit PrimeField(std::uint64_t p) : p_(p) {
        if (p < 3 || !is_prime(p)) throw std::invalid_argument("p must be an odd prime, got " + std::to_string(p));
        if (p >= (1ull << 31)) throw std::invalid_argument("p must be below 2^31");
    }

    std::uint64_t p() const { return p_; }

    std::uint64_t reduce(std::int64_t x) const {
        std::int64_t r = x % static_cast<std::int64_t>(p_);
        return static_cast<std::uint64_t>(r < 0 ? r + static_cast<std::int64_t>(p_) : r);
    }
    std::uint64_t add(std::uint64_t a, std::uint64_t b) const { return (a + b) % p_; }
    std::uint64_t mul(std::uint64_t a, std::uint64_t b) const { return a * b % p_; }
    std::uint64_t pow(std::uint64_t a, std::uint64_t e) const {
        std::uint64_t r = 1;
        a %= p_;
        while (e) {
            if (e & 1) r = mul(r, a);
            a = mul(a, a);
            e >>= 1;
        }
        return r;
    }

    /// Multiplicative inverse of x; throws for x = 0 mod p.
    std::uint64_t inverse(std::uint64_t x) const {
        x %= p_;
        if (x == 0) throw std::domain_error("0 has no inverse modulo " + std::to_string(p_));
        // extended Euclid on signed values
        std::int64_t r0 = static_cast<std::int64_t>(p_), r1 = static_cast<std::int64_t>(x);
        std::int64_t t0 = 0, t1 = 1;
        while (r1 != 0) {
            std::int64_t q = r0 / r1;
            std::int64_t r2 = r0 - q * r1;
            r0 = r1;
            r1 = r2;
            std::int64_t t2 = t0 - q * t1;
            t0 = t1;
            t1 = t2;
        }
        return reduce(t0);
    }

    /// Table of n -> n^{-1}; entry 0 is 0 by convention.
    std::vector<std::uint32_t> inverse_table() const {
        std::vector<std::uint32_t> inv(p_, 0);
        inv[1] = 1;
        for (std::uint64_t n = 2; n < p_; ++n) inv[n] = static_cast<std::uint32_t>(p_ - (p_ / n) * inv[p_ % n] % p_);
        return inv;
    }

private:
    std::uint64_t p_;
};

inline std::uint64_t mod_inverse(std::uint64_t x, const PrimeField& field) {
    if (x < 1 || x >= field.p()) throw std::domain_error("mod_inverse expects 1 <= x <= p-1");
    return field.inverse(x);
}

/// e_m(n) = exp(2 pi i n / m), with n reduced mod m before scaling so the
/// argument stays in [0, 2 pi).
inline complex additive_character(std::int64_t n, std::uint64_t m) {
    if (m < 2) throw std::invalid_argument("additive_character needs m >= 2");
    std::int64_t r = n % static_cast<std::int64_t>(m);
    if (r < 0) r += static_cast<std::int64_t>(m);
    if (r == 0) return {1.0, 0.0};
    if (2 * static_cast<std::uint64_t>(r) == m) return {-1.0, 0.0};
    if (4 * static_cast<std::uint64_t>(r) == m) return {0.0, 1.0};
    if (4 * static_cast<std::uint64_t>(r) == 3 * m) return {0.0, -1.0};
    double angle = 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(m);
    return {std::cos(angle), std::sin(angle)};
}

/// Precomputed e_m(k) for 0 <= k < m.
class CharacterTable {
public:
    explicit CharacterTable(std::uint64_t m) : m_(m), table_(m) {
        for (std::uint64_t k = 0; k < m; ++k) table_[k] = additive_character(static_cast<std::int64_t>(k), m);
    }
    std::uint64_t modulus() const { return m_; }
    const complex& operator[](std::uint64_t k) const { return table_[k]; }
    complex at(std::int64_t n) const {
        std::int64_t r = n % static_cast<std::int64_t>(m_);
        return table_[static_cast<std::uint64_t>(r < 0 ? r + static_cast<std::int64_t>(m_) : r)];
    }

private:
    std::uint64_t m_;
    std::vector<complex> table_;
};

// ---------------------------------------------------------------------------
// GF(2)[x] helpers. Polynomials are bit vectors, bit i = coefficient of x^i.

namespace gf2poly {

inline int degree(std::uint64_t a) { return a == 0 ? -1 : 63 - std::countl_zero(a); }

/// a mod f, for any a.
inline std::uint64_t mod(std::uint64_t a, std::uint64_t f) {
    const int df = degree(f);
    for (int d = degree(a); d >= df; d = degree(a)) a ^= f << (d - df);
    return a;
}

/// a*b mod f for a, b already reduced (deg f <= 40).
inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t f) {
    const int df = degree(f);
    const std::uint64_t top = 1ull << df;
    std::uint64_t r = 0;
    while (b) {
        if (b & 1) r ^= a;
        b >>= 1;
        a <<= 1;
        if (a & top) a ^= f;
    }
    return r;
}

inline std::uint64_t gcd(std::uint64_t a, std::uint64_t b) {
    while (b) {
        a = mod(a, b);
        std::swap(a, b);
    }
    return a;
}

inline std::vector<int> prime_factors(std::uint64_t n) {
    std::vector<int> out;
    for (std::uint64_t q = 2; q * q <= n; ++q) {
        if (n % q == 0) {
            out.push_back(static_cast<int>(q));
            while (n % q == 0) n /= q;
        }
    }
    if (n > 1) out.push_back(static_cast<int>(n));
    return out;
}

/// Rabin's test: f of degree r is irreducible iff x^(2^r) = x mod f and
/// gcd(x^(2^(r/q)) - x, f) = 1 for every prime q | r.
inline bool is_irreducible(std::uint64_t f) {
    const int r = degree(f);
    if (r < 1) return false;
    if (r == 1) return true;
    const std::uint64_t x = mod(2, f);
    auto frob = [&](int times) {
        std::uint64_t y = x;
        for (int i = 0; i < times; ++i) y = mulmod(y, y, f);
        return y;
    };
    if (frob(r) != x) return false;
    for (int q : prime_factors(static_cast<std::uint64_t>(r))) {
        if (gcd(f, frob(r / q) ^ x) != 1) return false;
    }
    return true;
}

}  // namespace gf2poly

struct BinaryFieldElement {
    std::uint64_t bits = 0;
    friend bool operator==(BinaryFieldElement, BinaryFieldElement) = default;
};

/// GF(2^r) in the polynomial basis modulo a fixed irreducible polynomial.
class BinaryField {
public:
    BinaryField(int r, std::uint64_t modulus) : r_(r), modulus_(modulus) {
        if (r < 1 || r > 40) throw std::invalid_argument("binary field degree must be in [1, 40]");
        if (gf2poly::degree(modulus) != r || !gf2poly::is_irreducible(modulus))
            throw std::invalid_argument("modulus must be irreducible of degree r");
        for (int i = 0; i < r_; ++i) {
            if (trace_by_definition({1ull << i})) trace_mask_ |= 1ull << i;
        }
    }

    int degree() const { return r_; }
    std::uint64_t modulus() const { return modulus_; }
    std::uint64_t size() const { return 1ull << r_; }
    BinaryFieldElement one() const { return {1}; }
    /// The class of X, i.e. the polynomial "x" reduced.
    BinaryFieldElement generator_x() const { return {gf2poly::mod(2, modulus_)}; }

    bool contains(BinaryFieldElement a) const { return a.bits < size(); }
    BinaryFieldElement add(BinaryFieldElement a, BinaryFieldElement b) const { return {a.bits ^ b.bits}; }
    BinaryFieldElement mul(BinaryFieldElement a, BinaryFieldElement b) const {
        return {gf2poly::mulmod(a.bits, b.bits, modulus_)};
    }
    BinaryFieldElement square(BinaryFieldElement a) const { return mul(a, a); }
    BinaryFieldElement pow(BinaryFieldElement a, std::uint64_t e) const {
        BinaryFieldElement r = one();
        while (e) {
            if (e & 1) r = mul(r, a);
            a = mul(a, a);
            e >>= 1;
        }
        return r;
    }

    /// Tr(x) = x + x^2 + ... + x^(2^(r-1)), evaluated in the field.
    int trace_by_definition(BinaryFieldElement a) const {
        std::uint64_t acc = 0, y = a.bits;
        for (int i = 0; i < r_; ++i) {
            acc ^= y;
            y = gf2poly::mulmod(y, y, modulus_);
        }
        if (acc > 1) throw std::logic_error("trace left GF(2): modulus arithmetic is broken");
        return static_cast<int>(acc);
    }
    /// Same value via linearity: parity of the bits selected by Tr(x^i).
    int trace(BinaryFieldElement a) const { return std::popcount(a.bits & trace_mask_) & 1; }
    std::uint64_t trace_mask() const { return trace_mask_; }

private:
    int r_;
    std::uint64_t modulus_;
    std::uint64_t trace_mask_ = 0;
};

/// Lexicographically first irreducible of degree r with constant term 1.
inline BinaryField find_irreducible(int r) {
    if (r < 1 || r > 40) throw std::invalid_argument("find_irreducible expects 1 <= r <= 40");
    const std::uint64_t lo = (1ull << r) | 1ull, hi = 1ull << (r + 1);
    for (std::uint64_t f = lo; f < hi; f += 2) {
        if (gf2poly::is_irreducible(f)) return BinaryField(r, f);
    }
    throw std::logic_error("no irreducible polynomial found");  // unreachable
}

inline int gf2_trace(const BinaryField& field, BinaryFieldElement x) { return field.trace(x); }

/// psi(x) = (-1)^Tr(x), the canonical non-trivial additive character.
inline int gf2_char_psi(const BinaryField& field, BinaryFieldElement x) { return field.trace(x) ? -1 : 1; }

/// An element of order 2^r - 1.
inline BinaryFieldElement find_primitive_element(const BinaryField& field) {
    const std::uint64_t order = field.size() - 1;
    if (order == 1) return field.one();
    const auto factors = gf2poly::prime_factors(order);
    for (std::uint64_t g = 2; g < field.size(); ++g) {
        bool primitive = true;
        for (int q : factors) {
            if (field.pow({g}, order / static_cast<std::uint64_t>(q)) == field.one()) {
                primitive = false;
                break;
            }
        }
        if (primitive) return {g};
    }
    throw std::logic_error("no primitive element found");  // unreachable
}

}  // namespace pvmax
