// Family scans, empirical tails Phi(V) and Psi(V), the assumption audits and
// the double-log tail slope.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "partial_sums.hpp"
#include "rng.hpp"
#include "trace_families.hpp"

namespace pvmax {

/// Exhaustive scan, or `count` members drawn without replacement from `seed`.
struct SampleMode {
    bool exhaustive = true;
    std::uint64_t count = 0;
    std::uint64_t seed = 0;

    static SampleMode all() { return {}; }
    static SampleMode subsample(std::uint64_t count, std::uint64_t seed) { return {false, count, seed}; }
};

/// Member indices selected by a sample mode, ascending.
inline std::vector<std::uint64_t> select_members(const Family& fam, const SampleMode& mode) {
    const std::uint64_t n = fam.size();
    if (mode.exhaustive) {
        if (n > 10'000'000) throw std::invalid_argument("exhaustive scans are limited to 1e7 members; use a subsample");
        std::vector<std::uint64_t> idx(n);
        for (std::uint64_t i = 0; i < n; ++i) idx[i] = i;
        return idx;
    }
    return sample_without_replacement(n, std::min<std::uint64_t>(mode.count, n), mode.seed);
}

struct EmpiricalTail {
    std::vector<double> stats;  // ascending
    FamilySpec family;
    SampleMode mode;
    std::size_t count() const { return stats.size(); }
};

inline EmpiricalTail make_tail(std::vector<double> stats, FamilySpec family = {}, SampleMode mode = {}) {
    std::sort(stats.begin(), stats.end());
    return {std::move(stats), std::move(family), mode};
}

/// Phi(V) = #{stat > V} / count.
inline double phi_at(const EmpiricalTail& t, double V) {
    if (t.stats.empty()) throw std::invalid_argument("phi_at on an empty tail");
    const auto it = std::upper_bound(t.stats.begin(), t.stats.end(), V);
    return static_cast<double>(t.stats.end() - it) / static_cast<double>(t.stats.size());
}

/// #{stat < -V} / count, the lower tail used for Psi^-.
inline double lower_tail_at(const EmpiricalTail& t, double V) {
    if (t.stats.empty()) throw std::invalid_argument("lower_tail_at on an empty tail");
    const auto it = std::lower_bound(t.stats.begin(), t.stats.end(), -V);
    return static_cast<double>(it - t.stats.begin()) / static_cast<double>(t.stats.size());
}

inline double binomial_stderr(double p, std::size_t n) { return n ? std::sqrt(p * (1 - p) / static_cast<double>(n)) : 0.0; }

struct MemberStats {
    std::uint64_t index = 0;
    std::uint64_t a = 0, b = 0;
    double max_norm = 0;     // M(phi_a) / sqrt(m)
    double argmax_frac = 0;  // argmax / m
    double psi = 0;          // m^(-1/2) Im sum_{n <= m/2}
    double half_abs = 0;     // m^(-1/2) |sum_{n <= m/2}|
};

struct ScanResult {
    FamilySpec family;
    SampleMode mode;
    std::vector<MemberStats> members;  // in index order
    EmpiricalTail max_tail;
    EmpiricalTail psi_tail;
};

inline MemberStats member_stats(const Family& fam, std::uint64_t index) {
    const auto phi = fam.member(index);
    const double sq = std::sqrt(static_cast<double>(phi.m));
    MemberStats s;
    s.index = index;
    std::tie(s.a, s.b) = fam.parameters(index);
    complex acc{}, half{}, at_max{};
    double best = 0;
    std::uint64_t argmax = 0;
    for (std::uint64_t x = 0; x < phi.m; ++x) {
        acc += phi.values[x];
        const double v = std::norm(acc);
        if (v > best) {
            best = v;
            argmax = x;
            at_max = acc;
        }
        if (x == phi.m / 2) half = acc;
    }
    s.max_norm = std::abs(at_max) / sq;
    s.argmax_frac = static_cast<double>(argmax) / static_cast<double>(phi.m);
    s.psi = half.imag() / sq;
    s.half_abs = std::abs(half) / sq;
    return s;
}

inline ScanResult scan_family(const Family& fam, const SampleMode& mode) {
    const auto idx = select_members(fam, mode);
    ScanResult res;
    res.family = fam.spec();
    res.mode = mode;
    res.members.resize(idx.size());
    parallel_for(idx.size(), [&](std::size_t i) { res.members[i] = member_stats(fam, idx[i]); });
    std::vector<double> mx(idx.size()), ps(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        mx[i] = res.members[i].max_norm;
        ps[i] = res.members[i].psi;
    }
    res.max_tail = make_tail(std::move(mx), fam.spec(), mode);
    res.psi_tail = make_tail(std::move(ps), fam.spec(), mode);
    return res;
}

inline ScanResult scan_family(const FamilySpec& spec, const SampleMode& mode) { return scan_family(Family(spec), mode); }

/// V = 0.0, 0.1, ..., 3.0.
inline std::vector<double> standard_v_grid() {
    std::vector<double> v;
    for (int i = 0; i <= 30; ++i) v.push_back(i / 10.0);
    return v;
}

// ---------------------------------------------------------------------------

struct AuditReport {
    std::string id;
    std::string assumption;
    double measured = 0;
    double bound = 0;
    double constant = 0;
    bool pass = false;
    bool skipped = false;
    std::string details;
    std::vector<std::pair<std::string, double>> values;
};

/// E X^k for one USp trace or one fair coin, k <= 3: 1, 0, 1, 0.
inline double single_model_moment(int k) {
    switch (k) {
        case 0: return 1;
        case 1: return 0;
        case 2: return 1;
        case 3: return 0;
    }
    throw std::invalid_argument("model moments tabulated for k <= 3 only");
}

/// Model moment of X(h_1)...X(h_k) with independent X(h): product over
/// distinct frequencies of single moments of the multiplicities.
inline double model_joint_moment(const std::vector<std::int64_t>& tuple) {
    std::map<std::int64_t, int> mult;
    for (auto h : tuple) ++mult[h];
    double v = 1;
    for (auto [h, k] : mult) v *= single_model_moment(k);
    return v;
}

inline AuditReport joint_moment_audit(const Family& fam, const std::vector<std::vector<std::int64_t>>& tuples,
                                      const SampleMode& mode = SampleMode::all(), double constant = 50) {
    const std::uint64_t m = fam.m();
    std::vector<std::int64_t> freqs;
    for (const auto& t : tuples) {
        if (t.empty() || t.size() > 3) throw std::invalid_argument("joint moments need 1 <= k <= 3");
        for (auto h : t) {
            if (h == 0) throw std::invalid_argument("joint moment frequencies must be nonzero");
            if (h < half_open_min(m) || h > half_open_max(m)) throw std::invalid_argument("frequency outside (-m/2, m/2]");
            freqs.push_back(h);
        }
    }
    std::sort(freqs.begin(), freqs.end());
    freqs.erase(std::unique(freqs.begin(), freqs.end()), freqs.end());
    std::unordered_map<std::int64_t, std::size_t> slot;
    for (std::size_t i = 0; i < freqs.size(); ++i) slot[freqs[i]] = i;
    const auto idx = select_members(fam, mode);
    const CharacterTable e(m);
    std::vector<std::vector<double>> coeff(idx.size());
    parallel_for(idx.size(), [&](std::size_t i) {
        const auto phi = fam.member(idx[i]);
        coeff[i].resize(freqs.size());
        for (std::size_t j = 0; j < freqs.size(); ++j) coeff[i][j] = fourier_coefficient(phi, freqs[j], e).real();
    }, 16);
    AuditReport rep;
    rep.id = "joint_moment";
    rep.assumption = "joint moments of Fourier coefficients";
    rep.constant = constant;
    rep.bound = constant;
    double worst = 0;
    for (const auto& t : tuples) {
        double acc = 0;
        for (const auto& c : coeff) {
            double prod = 1;
            for (auto h : t) prod *= c[slot[h]];
            acc += prod;
        }
        const double emp = acc / static_cast<double>(coeff.size());
        const double gap = std::abs(emp - model_joint_moment(t)) * std::sqrt(static_cast<double>(m));
        std::string name = "(";
        for (std::size_t i = 0; i < t.size(); ++i) name += (i ? "," : "") + std::to_string(t[i]);
        rep.values.emplace_back(name + ")", gap);
        worst = std::max(worst, gap);
    }
    rep.measured = worst;
    rep.pass = worst <= constant;
    rep.details = "max over tuples of |empirical - model| * sqrt(m); model moments of independent traces are exact";
    return rep;
}

// ---------------------------------------------------------------------------
// Extremal family joint moments over the whole field, by sign histograms.

struct ExtremalMomentResult {
    std::vector<std::int64_t> hs;                        // the chosen frequencies
    std::vector<std::pair<std::vector<int>, double>> moments;  // tuple of positions in hs -> average
    double worst = 0;
    double weil = 0;  // (2r - 2) 2^(r/2) / 2^r
};

/// Averages over every a in GF(2^r), including a = 0, of products of
/// psi(P(alpha_h a)) for all tuples of 1..3 distinct frequencies from hs.
inline ExtremalMomentResult extremal_joint_moments(const ExtremalFamily& fam, const std::vector<std::int64_t>& hs) {
    if (hs.empty() || hs.size() > 16) throw std::invalid_argument("choose between 1 and 16 frequencies");
    const BinaryField& F = fam.field;
    const int r = fam.r;
    const std::uint64_t q = F.size();
    // psi(P(x)) for all x through a primitive element g: Tr(P(g^i)) = sum_k Tr(g^(i(2k-1))).
    const auto g = find_primitive_element(F);
    const std::uint64_t order = q - 1;
    std::vector<std::uint8_t> tr_pow(order);
    std::vector<std::uint32_t> bits_of(order);
    {
        BinaryFieldElement x = F.one();
        for (std::uint64_t i = 0; i < order; ++i) {
            tr_pow[i] = static_cast<std::uint8_t>(F.trace(x));
            bits_of[i] = static_cast<std::uint32_t>(x.bits);
            x = F.mul(x, g);
        }
    }
    std::vector<std::uint8_t> sign_bit(q, 0);  // 1 means psi(P(x)) = -1
    parallel_chunks(order, 1 << 16, [&](std::size_t b, std::size_t e, std::size_t) {
        for (std::size_t i = b; i < e; ++i) {
            int t = 0;
            for (int k = 1; k <= r; ++k)
                t ^= tr_pow[static_cast<std::size_t>((static_cast<unsigned __int128>(i) * (2 * k - 1)) % order)];
            sign_bit[bits_of[i]] = static_cast<std::uint8_t>(t);
        }
    });
    sign_bit[0] = 0;  // P(0) = 0
    // Gray-code walk over a: alpha_h * a updated by XOR with alpha_h * x^j.
    const std::size_t H = hs.size();
    std::vector<std::vector<std::uint64_t>> basis(H, std::vector<std::uint64_t>(static_cast<std::size_t>(r)));
    for (std::size_t i = 0; i < H; ++i)
        for (int j = 0; j < r; ++j) basis[i][static_cast<std::size_t>(j)] = F.mul(fam.alpha(hs[i]), {1ull << j}).bits;
    std::vector<std::uint64_t> hist(1ull << H, 0);
    std::vector<std::uint64_t> prod(H, 0);  // alpha_h * gray(0) = 0
    for (std::uint64_t step = 0; step < q; ++step) {
        std::uint64_t mask = 0;
        for (std::size_t i = 0; i < H; ++i) mask |= static_cast<std::uint64_t>(sign_bit[prod[i]]) << i;
        ++hist[mask];
        if (step + 1 == q) break;
        const int j = std::countr_zero(step + 1);
        for (std::size_t i = 0; i < H; ++i) prod[i] ^= basis[i][static_cast<std::size_t>(j)];
    }
    ExtremalMomentResult res;
    res.hs = hs;
    res.weil = (2.0 * r - 2) * std::pow(2.0, r / 2.0) / static_cast<double>(q);
    auto moment = [&](const std::vector<int>& pos) {
        std::int64_t acc = 0;
        for (std::uint64_t mask = 0; mask < hist.size(); ++mask) {
            int parity = 0;
            for (int p : pos) parity ^= static_cast<int>((mask >> p) & 1);
            acc += (parity ? -1 : 1) * static_cast<std::int64_t>(hist[mask]);
        }
        return static_cast<double>(acc) / static_cast<double>(q);
    };
    const int n = static_cast<int>(H);
    for (int i = 0; i < n; ++i) {
        res.moments.push_back({{i}, moment({i})});
        for (int j = i + 1; j < n; ++j) {
            res.moments.push_back({{i, j}, moment({i, j})});
            for (int k = j + 1; k < n; ++k) res.moments.push_back({{i, j, k}, moment({i, j, k})});
        }
    }
    for (const auto& [pos, v] : res.moments) res.worst = std::max(res.worst, std::abs(v));
    return res;
}

// ---------------------------------------------------------------------------

/// #{(n1,n2,m1,m2) in [1,L]^4 : n1+n2 = m1+m2, u(n1)+u(n2) = u(m1)+u(m2)} with u(n) = nbar^d.
inline std::uint64_t short_sum_solution_count(std::uint64_t p, int d, std::uint64_t L) {
    PrimeField F(p);
    std::vector<std::uint64_t> u(L + 1);
    for (std::uint64_t n = 1; n <= L; ++n) u[n] = F.pow(F.inverse(n), static_cast<std::uint64_t>(d));
    std::unordered_map<std::uint64_t, std::uint64_t> hist;
    for (std::uint64_t a = 1; a <= L; ++a)
        for (std::uint64_t b = 1; b <= L; ++b) ++hist[((a + b) % p) * p + (u[a] + u[b]) % p];
    std::uint64_t total = 0;
    for (auto& [k, c] : hist) total += c * c;
    return total;
}

/// (1/p^2) sum over (c, b) in F_p x F_p of |p^(-1/2) sum_{n=1}^{L} e_p(b n + c nbar^d)|^4.
inline double short_sum_full_average(std::uint64_t p, int d, std::uint64_t L) {
    PrimeTables t(p);
    std::vector<std::uint64_t> u(L + 1);
    for (std::uint64_t n = 1; n <= L; ++n) u[n] = t.field.pow(t.inv[n], static_cast<std::uint64_t>(d));
    const double total = parallel_reduce(
        p, 0.0,
        [&](std::size_t c) {
            double acc = 0;
            for (std::uint64_t b = 0; b < p; ++b) {
                complex s{};
                for (std::uint64_t n = 1; n <= L; ++n) s += t.e[(b * n + c * u[n]) % p];
                acc += std::norm(s) * std::norm(s);
            }
            return acc;
        },
        [](double x, double y) { return x + y; }, 8);
    return total / (static_cast<double>(p) * static_cast<double>(p)) / (static_cast<double>(p) * static_cast<double>(p));
}

/// M_4 = mean over members of |p^(-1/2) sum_{n in I} phi_a(n)|^4, I = [1, |I|],
/// reported as M_4 p^2 / |I|^2 against 4d. For the generalized Kloosterman
/// kinds the solution count gives the exact value of the average over all
/// (c, b) in F_p^2, checked against direct summation.
inline AuditReport short_sum_moment_audit(const Family& fam, const std::vector<std::uint64_t>& lengths,
                                          const SampleMode& mode = SampleMode::all(), int alpha = 4,
                                          bool cross_check = true) {
    if (alpha != 4) throw std::invalid_argument("short_sum_moment_audit implements alpha = 4");
    const std::uint64_t p = fam.m();
    const int d = fam.spec().N() - 1;
    const bool kloosterman_kind = fam.spec().kind == FamilyKind::kloosterman || fam.spec().kind == FamilyKind::gen_kloosterman;
    const auto idx = select_members(fam, mode);
    AuditReport rep;
    rep.id = "short_sum";
    rep.assumption = "fourth moment of short sums";
    rep.constant = 4.0 * d;
    rep.bound = 4.0 * d;
    rep.pass = true;
    double worst = 0;
    for (std::uint64_t L : lengths) {
        if (L >= p) throw std::invalid_argument("interval longer than the period");
        if (L == 0) {
            rep.values.emplace_back("ratio@" + std::to_string(L), 0.0);
            continue;
        }
        const double total = parallel_reduce(
            idx.size(), 0.0,
            [&](std::size_t i) {
                const auto phi = fam.member(idx[i]);
                complex s{};
                for (std::uint64_t n = 1; n <= L; ++n) s += phi.values[n];
                const double v = std::norm(s) / static_cast<double>(p);
                return v * v;
            },
            [](double x, double y) { return x + y; }, 256);
        const double m4 = total / static_cast<double>(idx.size());
        const double ratio = m4 * static_cast<double>(p) * static_cast<double>(p) / (static_cast<double>(L) * static_cast<double>(L));
        rep.values.emplace_back("ratio@" + std::to_string(L), ratio);
        worst = std::max(worst, ratio);
        if (ratio > rep.bound) rep.pass = false;
        if (cross_check && kloosterman_kind) {
            const int dd = fam.spec().kind == FamilyKind::kloosterman ? 1 : fam.spec().d;
            const double count = static_cast<double>(short_sum_solution_count(p, dd, L));
            const double exact = count / (static_cast<double>(p) * static_cast<double>(p));
            const double direct = short_sum_full_average(p, dd, L);
            rep.values.emplace_back("full_average_count@" + std::to_string(L), exact);
            rep.values.emplace_back("full_average_direct@" + std::to_string(L), direct);
            rep.values.emplace_back("count_ratio@" + std::to_string(L), count / (static_cast<double>(L) * static_cast<double>(L)));
            if (std::abs(exact - direct) > 1e-9 * std::max(1.0, exact)) {
                rep.pass = false;
                rep.details += "solution count disagrees with direct summation at |I|=" + std::to_string(L) + "; ";
            }
        }
    }
    rep.measured = worst;
    if (rep.details.empty()) rep.details = "M4 p^2/|I|^2 over I=[1,|I|]";
    return rep;
}

// ---------------------------------------------------------------------------

/// Per-member maximum over intervals I = [x, y] in [0, m) with |I| <= L of
/// |m^(-1/2) sum_{n in I} phi(n)|. Exact O(mL) unless step > 1, in which case
/// endpoints are restricted to multiples of `step` (the box cover).
inline double max_short_sum(const PeriodicFunction& phi, std::uint64_t L, std::uint64_t step = 1) {
    const std::uint64_t m = phi.m;
    std::vector<complex> P(m + 1);  // P[k] = sum_{n<k} phi(n)
    for (std::uint64_t k = 0; k < m; ++k) P[k + 1] = P[k] + phi.values[k];
    double best = 0;
    for (std::uint64_t x = 0; x < m; x += step)
        for (std::uint64_t len = step; len <= L && x + len <= m; len += step) best = std::max(best, std::norm(P[x + len] - P[x]));
    return std::sqrt(best / static_cast<double>(m));
}

inline AuditReport max_short_sum_audit(const Family& fam, std::uint64_t L, const SampleMode& mode = SampleMode::all(),
                                       int alpha = 4, double work_budget = 2e9) {
    const double m = static_cast<double>(fam.m());
    const double delta = 1.0 / 6;
    if (static_cast<double>(L) > std::pow(m, 0.5 + delta / 2) + 1e-9) throw std::invalid_argument("L exceeds m^(1/2+delta/2)");
    const auto idx = select_members(fam, mode);
    std::uint64_t step = 1;
    AuditReport rep;
    rep.id = "max_short_sum";
    rep.assumption = "moments of short-interval maxima";
    if (static_cast<double>(idx.size()) * m * static_cast<double>(L) > work_budget) {
        step = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::pow(m, 0.5 - delta / 4)));
        rep.details = "work budget exceeded: endpoints restricted to multiples of " + std::to_string(step) + " (box cover approximation); ";
    }
    const double total = parallel_reduce(
        idx.size(), 0.0, [&](std::size_t i) { return std::pow(max_short_sum(fam.member(idx[i]), L, step), alpha); },
        [](double x, double y) { return x + y; }, 64);
    const double moment = total / static_cast<double>(idx.size());
    const double shape = static_cast<double>(L) * std::pow(m, -0.5 - delta / 2) + std::pow(m, -delta / 4);
    rep.measured = moment;
    rep.bound = shape;
    rep.constant = moment / shape;
    rep.pass = std::isfinite(moment);
    rep.values = {{"moment", moment}, {"shape", shape}, {"ratio", moment / shape}, {"step", static_cast<double>(step)}};
    rep.details += "alpha-moment of the max over intervals of length <= L; constant = moment / shape";
    return rep;
}

// ---------------------------------------------------------------------------

/// Empirical E max_{alpha in S} |sum_{y<=|h|<m/2} ((e(alpha h)-1)/h) phi_hat(h)|^{2k},
/// S = {j/|S|}. y <= 0 selects y = 1e5 N^2 k, skipped when above m/4.
inline AuditReport tail_moment_audit(const Family& fam, int k, double y, std::size_t grid_size,
                                     const SampleMode& mode = SampleMode::all()) {
    if (k < 1 || k > 4) throw std::invalid_argument("tail_moment_audit expects 1 <= k <= 4");
    if (grid_size < 1) throw std::invalid_argument("grid S must be non-empty");
    const std::uint64_t m = fam.m();
    const double N = fam.spec().N();
    const double nominal_y = 1e5 * N * N * k;
    AuditReport rep;
    rep.id = "tail_moment";
    rep.assumption = "moments of the spectral tail";
    rep.bound = std::exp(-2.0 * k);
    rep.values.emplace_back("nominal_y", nominal_y);
    const bool surrogate = y > 0 && y < nominal_y;
    if (y <= 0) {
        if (nominal_y > static_cast<double>(m) / 4) {
            rep.skipped = true;
            rep.pass = true;
            rep.details = "y = 1e5 N^2 k exceeds m/4: out of asymptotic range, skipped";
            return rep;
        }
        y = nominal_y;
    }
    rep.values.emplace_back("y", y);
    std::vector<std::int64_t> hs;
    for (std::int64_t h = half_open_min(m); h <= half_open_max(m); ++h) {
        const double ah = std::abs(static_cast<double>(h));
        if (ah >= y && ah < static_cast<double>(m) / 2) hs.push_back(h);
    }
    if (hs.empty()) {
        rep.measured = 0;
        rep.pass = true;
        rep.details = "empty frequency range";
        return rep;
    }
    // weights w[j][i] = (e(alpha_j h_i) - 1) / h_i
    std::vector<std::vector<complex>> w(grid_size, std::vector<complex>(hs.size()));
    for (std::size_t j = 0; j < grid_size; ++j) {
        const double alpha = static_cast<double>(j) / static_cast<double>(grid_size);
        for (std::size_t i = 0; i < hs.size(); ++i) {
            const double a = 2 * std::numbers::pi * std::fmod(alpha * static_cast<double>(hs[i]), 1.0);
            w[j][i] = (complex(std::cos(a), std::sin(a)) - 1.0) / static_cast<double>(hs[i]);
        }
    }
    const auto idx = select_members(fam, mode);
    const double total = parallel_reduce(
        idx.size(), 0.0,
        [&](std::size_t t) {
            const auto S = fourier_transform(fam.member(idx[t]));
            std::vector<complex> c(hs.size());
            for (std::size_t i = 0; i < hs.size(); ++i) c[i] = S.at(hs[i]);
            double best = 0;
            for (std::size_t j = 0; j < grid_size; ++j) {
                complex acc{};
                for (std::size_t i = 0; i < hs.size(); ++i) acc += w[j][i] * c[i];
                best = std::max(best, std::norm(acc));
            }
            return std::pow(best, k);
        },
        [](double a, double b) { return a + b; }, 16);
    rep.measured = total / static_cast<double>(idx.size());
    rep.constant = rep.measured / rep.bound;
    rep.pass = std::isfinite(rep.measured);
    rep.details = surrogate ? "surrogate y below 1e5 N^2 k (desk scale)" : "y = 1e5 N^2 k";
    rep.values.emplace_back("grid", static_cast<double>(grid_size));
    return rep;
}

// ---------------------------------------------------------------------------

struct CoarseGridParams {
    double delta = 1.0 / 6;
    double alpha = 4;
    double slack = 3;
};

/// Exceedance fraction of members with |M - grid max| > slack m^(1/2 - delta/(8 alpha));
/// passes iff the fraction is at most slack m^(-delta/10). J = 0 selects
/// floor(m^(1/2 - delta/5)).
inline AuditReport coarse_grid_audit(const Family& fam, const SampleMode& mode, std::uint64_t J = 0,
                                     CoarseGridParams prm = {}) {
    const double m = static_cast<double>(fam.m());
    if (J == 0) J = static_cast<std::uint64_t>(std::floor(std::pow(m, 0.5 - prm.delta / 5)));
    J = std::clamp<std::uint64_t>(J, 1, fam.m());
    const double threshold = prm.slack * std::pow(m, 0.5 - prm.delta / (8 * prm.alpha));
    const auto idx = select_members(fam, mode);
    std::vector<double> gap(idx.size());
    parallel_for(idx.size(), [&](std::size_t i) {
        const auto prof = prefix_profile(fam.member(idx[i]));
        gap[i] = prof.max_value - coarse_grid_max(prof, J);
    }, 16);
    std::size_t exceed = 0;
    double worst = 0;
    for (double g : gap) {
        exceed += g > threshold;
        worst = std::max(worst, g);
    }
    AuditReport rep;
    rep.id = "coarse_grid";
    rep.assumption = "maximum on a coarse grid";
    rep.measured = static_cast<double>(exceed) / static_cast<double>(idx.size());
    rep.bound = prm.slack * std::pow(m, -prm.delta / 10);
    rep.constant = prm.slack;
    rep.pass = rep.measured <= rep.bound;
    rep.values = {{"J", static_cast<double>(J)},
                  {"threshold_over_sqrt_m", threshold / std::sqrt(m)},
                  {"max_gap_over_sqrt_m", worst / std::sqrt(m)},
                  {"members", static_cast<double>(idx.size())}};
    rep.details = "exceedance fraction of |M - max_j |S(x_j)|| > slack m^(1/2-delta/(8 alpha))";
    return rep;
}

// ---------------------------------------------------------------------------

struct SlopeFit {
    bool refused = false;
    bool caveat = false;  // V window shorter than 1
    double slope = 0, stderr_ = 0, intercept = 0;
    std::size_t points = 0;
    double window = 0;
    std::string message;
};

/// Least squares of log log(1/Phi(V)) on V over grid points with
/// Phi(V) in (10/count, 0.5).
inline SlopeFit loglog_slope(const EmpiricalTail& tail, const std::vector<double>& V_grid = standard_v_grid()) {
    SlopeFit fit;
    const double lo = 10.0 / static_cast<double>(tail.count());
    std::vector<double> xs, ys;
    for (double V : V_grid) {
        const double p = phi_at(tail, V);
        if (p > lo && p < 0.5) {
            xs.push_back(V);
            ys.push_back(std::log(std::log(1 / p)));
        }
    }
    fit.points = xs.size();
    if (xs.size() < 4) {
        fit.refused = true;
        fit.message = "fewer than 4 resolvable grid points";
        return fit;
    }
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double den = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / den;
    fit.intercept = (sy - fit.slope * sx) / n;
    double rss = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = ys[i] - fit.intercept - fit.slope * xs[i];
        rss += d * d;
    }
    fit.stderr_ = std::sqrt(rss / (n - 2) * n / den);
    fit.window = xs.back() - xs.front();
    fit.caveat = fit.window < 1;
    if (fit.caveat) fit.message = "resolvable V window shorter than 1";
    return fit;
}

}  // namespace pvmax
