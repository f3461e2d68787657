// Concrete m-periodic families: Birch sums, (generalized) Kloosterman sums,
// hyper-Kloosterman twists and the GF(2^r) extremal family.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fft.hpp"
#include "finite_field.hpp"

namespace pvmax {

/// One period of an m-periodic function; values[n] = phi(n), 0 <= n < m.
struct PeriodicFunction {
    std::uint64_t m = 0;
    std::vector<complex> values;
};

enum class FamilyKind { birch, kloosterman, gen_kloosterman, hyper_kloosterman_twist, extremal };

inline std::string to_string(FamilyKind k) {
    switch (k) {
        case FamilyKind::birch: return "birch";
        case FamilyKind::kloosterman: return "kloosterman";
        case FamilyKind::gen_kloosterman: return "gen-kloosterman";
        case FamilyKind::hyper_kloosterman_twist: return "hyper-kloosterman-twist";
        case FamilyKind::extremal: return "extremal";
    }
    return "?";
}

inline FamilyKind family_kind_from_string(const std::string& s) {
    for (FamilyKind k : {FamilyKind::birch, FamilyKind::kloosterman, FamilyKind::gen_kloosterman,
                         FamilyKind::hyper_kloosterman_twist, FamilyKind::extremal}) {
        if (to_string(k) == s) return k;
    }
    throw std::invalid_argument("unknown family kind '" + s + "'");
}

/// Descriptor of a family. g holds Birch coefficients c_0..c_deg; d is the
/// GenKloosterman exponent; r the hyper-Kloosterman rank.
struct FamilySpec {
    FamilyKind kind = FamilyKind::kloosterman;
    std::uint64_t m = 0;
    std::vector<std::int64_t> g{0, 0, 0, 1};
    int d = 1;
    int r = 3;

    int degree_g() const {
        for (int i = static_cast<int>(g.size()) - 1; i >= 0; --i)
            if (g[static_cast<std::size_t>(i)] != 0) return i;
        return -1;
    }

    /// Symmetry constant: the Fourier coefficients are bounded by N.
    int N() const {
        switch (kind) {
            case FamilyKind::birch: return degree_g() - 1;
            case FamilyKind::kloosterman: return 2;
            case FamilyKind::gen_kloosterman: return d + 1;
            case FamilyKind::hyper_kloosterman_twist: return r + 1;
            case FamilyKind::extremal: return 1;
        }
        return 0;
    }

    std::string parameter_space() const {
        switch (kind) {
            case FamilyKind::birch: return "a in F_p^*";
            case FamilyKind::kloosterman:
            case FamilyKind::gen_kloosterman:
            case FamilyKind::hyper_kloosterman_twist: return "(a,b) in F_p^* x F_p^*";
            case FamilyKind::extremal: return "a in GF(2^r)^*";
        }
        return "";
    }
};

/// Raises unless g is an admissible Birch polynomial for p.
inline void check_birch_polynomial(const std::vector<std::int64_t>& g, std::uint64_t p) {
    int deg = -1;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i] < -100 || g[i] > 100) throw std::invalid_argument("Birch coefficients must lie in [-100, 100]");
        if (g[i] != 0 && i % 2 == 0) throw std::invalid_argument("Birch polynomial must be odd");
        if (g[i] != 0) deg = static_cast<int>(i);
    }
    if (deg < 3) throw std::invalid_argument("Birch polynomial must have odd degree >= 3");
    if (static_cast<std::uint64_t>(deg) >= p) throw std::invalid_argument("Birch polynomial degree must be below p");
    if (g[static_cast<std::size_t>(deg)] % static_cast<std::int64_t>(p) == 0)
        throw std::invalid_argument("leading Birch coefficient vanishes mod p");
}

/// Per-prime lookup tables shared by all members of a family.
struct PrimeTables {
    PrimeField field;
    CharacterTable e;
    std::vector<std::uint32_t> inv;
    explicit PrimeTables(std::uint64_t p) : field(p), e(p), inv(field.inverse_table()) {}
    std::uint64_t p() const { return field.p(); }
};

inline PeriodicFunction birch_function(std::uint64_t a, const std::vector<std::int64_t>& g, const PrimeTables& t) {
    const std::uint64_t p = t.p();
    if (a < 1 || a >= p) throw std::invalid_argument("birch_function expects 1 <= a <= p-1");
    check_birch_polynomial(g, p);
    std::vector<std::uint64_t> coeff(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) coeff[i] = t.field.reduce(g[i]);
    PeriodicFunction phi{p, std::vector<complex>(p)};
    for (std::uint64_t n = 0; n < p; ++n) {
        std::uint64_t v = 0;
        for (std::size_t i = coeff.size(); i-- > 0;) v = (v * n + coeff[i]) % p;
        phi.values[n] = t.e[(v + a * n) % p];
    }
    return phi;
}

/// values[n] = e_p(g(n) + a n).
inline PeriodicFunction birch_function(std::uint64_t a, std::uint64_t p, const std::vector<std::int64_t>& g) {
    return birch_function(a, g, PrimeTables(p));
}

inline PeriodicFunction kloosterman_function(std::uint64_t a, std::uint64_t b, int d, const PrimeTables& t) {
    const std::uint64_t p = t.p();
    if (a < 1 || a >= p || b < 1 || b >= p) throw std::invalid_argument("kloosterman_function expects 1 <= a, b <= p-1");
    if (d < 1 || d % 2 == 0) throw std::invalid_argument("d must be odd");
    PeriodicFunction phi{p, std::vector<complex>(p)};
    std::uint64_t bn = 0;
    for (std::uint64_t n = 1; n < p; ++n) {
        bn += b;
        if (bn >= p) bn -= p;
        const std::uint64_t x = a * t.inv[n] % p;
        std::uint64_t u = x;
        for (int k = 1; k < d; ++k) u = u * x % p;
        phi.values[n] = t.e[(bn + u) % p];
    }
    return phi;
}

/// values[n] = e_p(b n + (a nbar)^d), values[0] = 0.
inline PeriodicFunction kloosterman_function(std::uint64_t a, std::uint64_t b, std::uint64_t p, int d) {
    return kloosterman_function(a, b, d, PrimeTables(p));
}

/// Kl_r(n;p) for every n. Entry 0 is 0. Iterated multiplicative convolution
/// of n -> e_p(n) over F_p^*, then the normalization (-1)^(r-1) p^(-(r-1)/2).
/// Values are complex in general: conj Kl_r(n) = Kl_r((-1)^r n).
inline std::vector<complex> hyper_kloosterman_all(int r, std::uint64_t p) {
    if (r < 2 || r > 9) throw std::invalid_argument("hyper_kloosterman_all expects 2 <= r <= 9");
    if (p < 5 || !is_prime(p)) throw std::invalid_argument("hyper_kloosterman_all expects a prime p >= 5");
    CharacterTable e(p);
    std::vector<complex> v(p), w(p);
    for (std::uint64_t n = 1; n < p; ++n) v[n] = e[n];
    for (int step = 1; step < r; ++step) {
        std::fill(w.begin(), w.end(), complex{});
        for (std::uint64_t x = 1; x < p; ++x) {
            const complex vx = v[x];
            std::uint64_t n = x;  // n = x*y, advanced by x each step
            for (std::uint64_t y = 1; y < p; ++y) {
                w[n] += vx * e[y];
                n += x;
                if (n >= p) n -= p;
            }
        }
        std::swap(v, w);
    }
    const double scale = ((r - 1) % 2 ? -1.0 : 1.0) / std::pow(static_cast<double>(p), 0.5 * (r - 1));
    for (auto& z : v) z *= scale;
    for (std::uint64_t n = 1; n < p; ++n) {
        if (std::abs(v[n]) > r + 1e-9)
            throw std::runtime_error("Deligne bound violated by Kl_" + std::to_string(r) + "(" + std::to_string(n) + ")");
    }
    return v;
}

/// values[n] = Kl_r(conj(a n); p) e_p(b n), values[0] = 0, with kl the table
/// returned by hyper_kloosterman_all(r, p).
inline PeriodicFunction hyper_kloosterman_twist_function(std::uint64_t a, std::uint64_t b, const std::vector<complex>& kl,
                                                         const PrimeTables& t) {
    const std::uint64_t p = t.p();
    if (a < 1 || a >= p || b < 1 || b >= p) throw std::invalid_argument("twist expects 1 <= a, b <= p-1");
    if (kl.size() != p) throw std::invalid_argument("Kl table has the wrong size");
    PeriodicFunction phi{p, std::vector<complex>(p)};
    for (std::uint64_t n = 1; n < p; ++n) phi.values[n] = kl[t.inv[a * n % p]] * t.e[b * n % p];
    return phi;
}

inline PeriodicFunction hyper_kloosterman_twist_function(std::uint64_t a, std::uint64_t b, std::uint64_t p, int r) {
    if (r < 3 || r % 2 == 0) throw std::invalid_argument("twist rank r must be odd and >= 3");
    return hyper_kloosterman_twist_function(a, b, hyper_kloosterman_all(r, p), PrimeTables(p));
}

// ---------------------------------------------------------------------------
// Extremal family over GF(2^r).

/// Largest r with 2^r <= m^3, i.e. floor(3 log m / log 2) without rounding
/// trouble.
inline int extremal_degree(std::uint64_t m) {
    const unsigned __int128 cube = static_cast<unsigned __int128>(m) * m * m;
    int r = 0;
    while ((static_cast<unsigned __int128>(1) << (r + 1)) <= cube) ++r;
    return r;
}

struct ExtremalFamily {
    std::uint64_t m = 0;
    int r = 0;
    BinaryField field{1, 3};
    std::int64_t h_min = 0;   // J = [h_min, h_max]
    std::int64_t h_max = 0;
    std::vector<BinaryFieldElement> alphas;  // alphas[h - h_min]

    BinaryFieldElement alpha(std::int64_t h) const { return alphas.at(static_cast<std::size_t>(h - h_min)); }

    /// P(x) = sum_{k=1}^{r} x^(2k-1).
    BinaryFieldElement P(BinaryFieldElement x) const {
        const BinaryFieldElement x2 = field.square(x);
        BinaryFieldElement term = x, acc{0};
        for (int k = 1; k <= r; ++k) {
            acc = field.add(acc, term);
            term = field.mul(term, x2);
        }
        return acc;
    }
    int psi_P(BinaryFieldElement x) const { return gf2_char_psi(field, P(x)); }
};

/// J = (-m/2, m/2] as [h_min, h_max].
inline std::int64_t half_open_min(std::uint64_t m) { return -static_cast<std::int64_t>((m - 1) / 2); }
inline std::int64_t half_open_max(std::uint64_t m) { return static_cast<std::int64_t>(m / 2); }

/// Nonzero elements are scanned in increasing bit order; those with
/// psi(P) = +1 go to h = 1, 2, ..., h_max and those with psi(P) = -1 to
/// h = 0, -1, ..., h_min.
inline ExtremalFamily build_extremal_family(std::uint64_t m) {
    if (m < 7) throw std::invalid_argument("build_extremal_family expects m >= 7");
    const int r = extremal_degree(m);
    if (r > 40) throw std::invalid_argument("m too large: 2^r exceeds the binary field limit");
    ExtremalFamily fam;
    fam.m = m;
    fam.r = r;
    fam.field = find_irreducible(r);
    fam.h_min = half_open_min(m);
    fam.h_max = half_open_max(m);
    fam.alphas.assign(m, BinaryFieldElement{0});
    const std::uint64_t plus_needed = static_cast<std::uint64_t>(fam.h_max);
    const std::uint64_t minus_needed = m - plus_needed;
    std::uint64_t plus = 0, minus = 0;
    for (std::uint64_t bits = 1; bits < fam.field.size() && (plus < plus_needed || minus < minus_needed); ++bits) {
        BinaryFieldElement x{bits};
        if (fam.psi_P(x) == 1) {
            if (plus < plus_needed) fam.alphas[static_cast<std::size_t>(1 + static_cast<std::int64_t>(plus++) - fam.h_min)] = x;
        } else if (minus < minus_needed) {
            fam.alphas[static_cast<std::size_t>(-static_cast<std::int64_t>(minus++) - fam.h_min)] = x;
        }
    }
    if (plus < plus_needed || minus < minus_needed)
        throw std::logic_error("extremal construction ran out of elements of one sign class");
    return fam;
}

/// Spectrum s(h) = psi(P(alpha_h a)), indexed by h - h_min.
inline std::vector<int> extremal_spectrum(const ExtremalFamily& fam, BinaryFieldElement a) {
    std::vector<int> s(fam.m);
    for (std::size_t i = 0; i < fam.m; ++i) s[i] = fam.psi_P(fam.field.mul(fam.alphas[i], a));
    return s;
}

/// phi_a(n) = m^(-1/2) sum_{h in J} psi(P(alpha_h a)) e_m(-n h).
inline PeriodicFunction extremal_function(const ExtremalFamily& fam, BinaryFieldElement a) {
    if (a.bits == 0 || !fam.field.contains(a)) throw std::invalid_argument("extremal_function expects a nonzero field element");
    const auto s = extremal_spectrum(fam, a);
    const std::uint64_t m = fam.m;
    std::vector<complex> spec(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::int64_t h = static_cast<std::int64_t>(i) + fam.h_min;
        spec[static_cast<std::size_t>((h % static_cast<std::int64_t>(m) + static_cast<std::int64_t>(m)) % static_cast<std::int64_t>(m))] = s[i];
    }
    auto vals = fft::transform(spec, fft::Sign::minus);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (auto& v : vals) v *= scale;
    return {m, std::move(vals)};
}

// ---------------------------------------------------------------------------
// Uniform access to a whole family, used by scans and audits.

class Family {
public:
    explicit Family(FamilySpec spec) : spec_(std::move(spec)) {
        switch (spec_.kind) {
            case FamilyKind::birch:
                if (!is_prime(spec_.m) || spec_.m < 3) throw std::invalid_argument("p not prime");
                check_birch_polynomial(spec_.g, spec_.m);
                break;
            case FamilyKind::kloosterman:
                if (!is_prime(spec_.m) || spec_.m < 3) throw std::invalid_argument("p not prime");
                break;
            case FamilyKind::gen_kloosterman:
                if (!is_prime(spec_.m) || spec_.m < 3) throw std::invalid_argument("p not prime");
                if (spec_.d < 1 || spec_.d % 2 == 0) throw std::invalid_argument("d must be odd");
                break;
            case FamilyKind::hyper_kloosterman_twist:
                if (spec_.r < 3 || spec_.r % 2 == 0) throw std::invalid_argument("r must be odd and >= 3");
                kl_ = hyper_kloosterman_all(spec_.r, spec_.m);
                break;
            case FamilyKind::extremal:
                extremal_ = std::make_shared<ExtremalFamily>(build_extremal_family(spec_.m));
                break;
        }
        if (spec_.kind != FamilyKind::extremal) tables_ = std::make_shared<PrimeTables>(spec_.m);
    }

    const FamilySpec& spec() const { return spec_; }
    std::uint64_t m() const { return spec_.m; }

    std::uint64_t size() const {
        const std::uint64_t p = spec_.m;
        switch (spec_.kind) {
            case FamilyKind::birch: return p - 1;
            case FamilyKind::extremal: return extremal_->field.size() - 1;
            default: return (p - 1) * (p - 1);
        }
    }

    /// Member parameters for an index in [0, size()): (a) or (a, b) with
    /// a = index / (p-1) + 1, b = index % (p-1) + 1; extremal a has bits index+1.
    std::pair<std::uint64_t, std::uint64_t> parameters(std::uint64_t index) const {
        const std::uint64_t p = spec_.m;
        switch (spec_.kind) {
            case FamilyKind::birch: return {index + 1, 0};
            case FamilyKind::extremal: return {index + 1, 0};
            default: return {index / (p - 1) + 1, index % (p - 1) + 1};
        }
    }

    PeriodicFunction member(std::uint64_t index) const {
        auto [a, b] = parameters(index);
        switch (spec_.kind) {
            case FamilyKind::birch: return birch_function(a, spec_.g, *tables_);
            // classical: phi_(a,b)(n) = e_p(a n + b nbar)
            case FamilyKind::kloosterman: return kloosterman_function(b, a, 1, *tables_);
            case FamilyKind::gen_kloosterman: return kloosterman_function(a, b, spec_.d, *tables_);
            case FamilyKind::hyper_kloosterman_twist: return hyper_kloosterman_twist_function(a, b, kl_, *tables_);
            case FamilyKind::extremal: return extremal_function(*extremal_, BinaryFieldElement{a});
        }
        throw std::logic_error("unreachable");
    }

    const ExtremalFamily* extremal() const { return extremal_.get(); }
    const PrimeTables* tables() const { return tables_.get(); }
    const std::vector<complex>& kl_table() const { return kl_; }

private:
    FamilySpec spec_;
    std::vector<complex> kl_;
    std::shared_ptr<const ExtremalFamily> extremal_;
    std::shared_ptr<const PrimeTables> tables_;
};

}  // namespace pvmax
