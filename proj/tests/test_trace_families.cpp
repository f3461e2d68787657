#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "pvmax/partial_sums.hpp"
#include "pvmax/trace_families.hpp"

using namespace pvmax;

namespace {

complex e(double num, double den) { return std::polar(1.0, 2 * std::numbers::pi * num / den); }

std::uint64_t inv_search(std::uint64_t x, std::uint64_t p) {
    for (std::uint64_t y = 1; y < p; ++y)
        if (x * y % p == 1) return y;
    return 0;
}

// Kl_r(n; p) straight from the definition: sum over y_1..y_{r-1}, y_r forced.
complex kl_direct(int r, std::uint64_t n, std::uint64_t p) {
    complex acc{};
    std::vector<std::uint64_t> y(static_cast<std::size_t>(r - 1), 1);
    for (;;) {
        std::uint64_t prod = 1, sum = 0;
        for (auto v : y) {
            prod = prod * v % p;
            sum += v;
        }
        const std::uint64_t last = n * inv_search(prod, p) % p;
        acc += e(static_cast<double>((sum + last) % p), static_cast<double>(p));
        std::size_t i = 0;
        while (i < y.size() && ++y[i] == p) y[i++] = 1;
        if (i == y.size()) break;
    }
    return acc * (((r - 1) % 2) ? -1.0 : 1.0) / std::pow(static_cast<double>(p), 0.5 * (r - 1));
}

}  // namespace

TEST(Birch, CubicExamples) {
    const auto phi = birch_function(1, 7, {0, 0, 0, 1});
    EXPECT_EQ(phi.values[0], complex(1, 0));
    complex acc{};
    for (auto v : phi.values) {
        EXPECT_NEAR(std::abs(v), 1.0, 1e-14);
        acc += v;
    }
    EXPECT_NEAR(acc.real() / std::sqrt(7.0), -0.639524, 1e-6);
    EXPECT_NEAR(acc.imag(), 0, 1e-12);
    for (std::uint64_t n = 0; n < 7; ++n) EXPECT_NEAR(std::abs(phi.values[n] - e(static_cast<double>(n * n * n + n), 7)), 0, 1e-12);
}

TEST(Birch, RejectsDegeneratePolynomials) {
    EXPECT_THROW(birch_function(1, 5, {0, 0, 0, 0, 0, 1}), std::invalid_argument);  // degree 5 >= p
    EXPECT_THROW(birch_function(1, 7, {0, 0, 1, 1}), std::invalid_argument);        // even term
    EXPECT_THROW(birch_function(1, 7, {0, 0, 0, 101}), std::invalid_argument);      // coefficient range
    EXPECT_THROW(birch_function(0, 7, {0, 0, 0, 1}), std::invalid_argument);
    EXPECT_NO_THROW(birch_function(3, 11, {0, 2, 0, -1, 0, 5}));
}

TEST(Kloosterman, ClassicalExample) {
    const auto phi = kloosterman_function(1, 1, 5, 1);
    EXPECT_EQ(phi.values[0], complex(0, 0));
    complex acc{};
    for (std::uint64_t n = 1; n < 5; ++n) {
        EXPECT_NEAR(std::abs(phi.values[n]), 1.0, 1e-14);
        acc += phi.values[n];
    }
    EXPECT_NEAR(acc.real() / std::sqrt(5.0), 0.170820, 1e-6);
}

TEST(Kloosterman, GeneralizedMatchesDefinition) {
    const std::uint64_t p = 31;
    for (int d : {1, 3, 5})
        for (std::uint64_t a : {1ull, 7ull, 30ull})
            for (std::uint64_t b : {2ull, 19ull}) {
                const auto phi = kloosterman_function(a, b, p, d);
                for (std::uint64_t n = 1; n < p; ++n) {
                    std::uint64_t u = 1, x = a * inv_search(n, p) % p;
                    for (int k = 0; k < d; ++k) u = u * x % p;
                    ASSERT_NEAR(std::abs(phi.values[n] - e(static_cast<double>((b * n + u) % p), static_cast<double>(p))), 0, 1e-12);
                }
            }
    EXPECT_THROW(kloosterman_function(1, 1, 7, 2), std::invalid_argument);
}

TEST(HyperKloosterman, RankTwoExampleAndIdentity) {
    const auto kl = hyper_kloosterman_all(2, 5);
    EXPECT_NEAR(kl[1].real(), -0.170820, 1e-6);
    EXPECT_EQ(kl[0], complex(0, 0));
    for (std::uint64_t p : {5ull, 7ull, 31ull, 101ull}) {
        const auto k2 = hyper_kloosterman_all(2, p);
        for (std::uint64_t n = 1; n < p; ++n) {
            complex acc{};
            for (std::uint64_t y = 1; y < p; ++y)
                acc += e(static_cast<double>((y + n * inv_search(y, p)) % p), static_cast<double>(p));
            ASSERT_NEAR(std::abs(k2[n] + acc / std::sqrt(static_cast<double>(p))), 0, 1e-10);
            ASSERT_NEAR(k2[n].imag(), 0, 1e-10);
        }
    }
}

TEST(HyperKloosterman, MatchesDirectSumsAndDeligne) {
    for (int r : {3, 4}) {
        for (std::uint64_t p : {7ull, 11ull, 13ull}) {
            const auto kl = hyper_kloosterman_all(r, p);
            for (std::uint64_t n = 1; n < p; ++n) {
                ASSERT_NEAR(std::abs(kl[n] - kl_direct(r, n, p)), 0, 1e-9) << r << " " << p << " " << n;
                ASSERT_LE(std::abs(kl[n]), r + 1e-12);
            }
        }
    }
}

TEST(HyperKloosterman, OddRankIsComplexWithConjugateSymmetry) {
    const std::uint64_t p = 7;
    const auto kl = hyper_kloosterman_all(3, p);
    EXPECT_GT(std::abs(kl[1].imag()), 0.1);
    for (std::uint64_t n = 1; n < p; ++n) EXPECT_NEAR(std::abs(std::conj(kl[n]) - kl[p - n]), 0, 1e-10);
}

TEST(HyperKloosterman, RejectsOutOfRange) {
    EXPECT_THROW(hyper_kloosterman_all(1, 7), std::invalid_argument);
    EXPECT_THROW(hyper_kloosterman_all(10, 7), std::invalid_argument);
    EXPECT_THROW(hyper_kloosterman_all(2, 3), std::invalid_argument);
    EXPECT_THROW(hyper_kloosterman_all(2, 9), std::invalid_argument);
}

TEST(HyperKloostermanTwist, ValuesAndFourierIdentity) {
    const std::uint64_t p = 7;
    const auto phi = hyper_kloosterman_twist_function(1, 1, p, 3);
    EXPECT_EQ(phi.values[0], complex(0, 0));
    for (std::uint64_t n = 1; n < p; ++n) {
        ASSERT_NEAR(std::abs(phi.values[n] - kl_direct(3, inv_search(n, p), p) * e(static_cast<double>(n), 7)), 0, 1e-9);
        ASSERT_LE(std::abs(phi.values[n]), 3 + 1e-12);
    }
    // phi_hat(h) = -Kl_{r+1}(abar (b + h)); a fixed sign of -1 for every (a, b)
    for (std::uint64_t q : {11ull, 13ull}) {
        const auto kl4 = hyper_kloosterman_all(4, q);
        for (std::uint64_t a : {1ull, 2ull, 5ull})
            for (std::uint64_t b : {1ull, 3ull}) {
                const auto S = fourier_transform(hyper_kloosterman_twist_function(a, b, q, 3));
                for (std::int64_t h = S.h_min(); h <= S.h_max(); ++h) {
                    const std::uint64_t arg = inv_search(a, q) * ((b + static_cast<std::uint64_t>(h + 100 * static_cast<std::int64_t>(q))) % q) % q;
                    if (arg == 0) {
                        // h = -b: sum of Kl_3 over F_p^*, which is -p^(-3/2)
                        ASSERT_NEAR(S.at(h).real(), -std::pow(static_cast<double>(q), -1.5), 1e-12);
                        continue;
                    }
                    ASSERT_NEAR(std::abs(S.at(h) + kl4[arg]), 0, 1e-9);
                    ASSERT_NEAR(S.at(h).imag(), 0, 1e-9);
                }
            }
    }
}

TEST(FamilySpec, SymmetryConstants) {
    FamilySpec s;
    s.kind = FamilyKind::birch;
    s.g = {0, 0, 0, 1};
    EXPECT_EQ(s.N(), 2);
    s.g = {0, 1, 0, 0, 0, 3};
    EXPECT_EQ(s.N(), 4);
    s.kind = FamilyKind::kloosterman;
    EXPECT_EQ(s.N(), 2);
    s.kind = FamilyKind::gen_kloosterman;
    s.d = 3;
    EXPECT_EQ(s.N(), 4);
    s.kind = FamilyKind::hyper_kloosterman_twist;
    s.r = 5;
    EXPECT_EQ(s.N(), 6);
    s.kind = FamilyKind::extremal;
    EXPECT_EQ(s.N(), 1);
    for (auto k : {FamilyKind::birch, FamilyKind::kloosterman, FamilyKind::gen_kloosterman,
                   FamilyKind::hyper_kloosterman_twist, FamilyKind::extremal})
        EXPECT_EQ(family_kind_from_string(to_string(k)), k);
}

TEST(Family, FourierSpectraAreRealAndBounded) {
    FamilySpec specs[4];
    specs[0].kind = FamilyKind::birch;
    specs[0].m = 101;
    specs[1].kind = FamilyKind::kloosterman;
    specs[1].m = 53;
    specs[2].kind = FamilyKind::gen_kloosterman;
    specs[2].m = 53;
    specs[2].d = 3;
    specs[3].kind = FamilyKind::hyper_kloosterman_twist;
    specs[3].m = 29;
    specs[3].r = 3;
    for (const auto& spec : specs) {
        Family fam(spec);
        for (std::uint64_t i = 0; i < fam.size(); i += 7) {
            const auto S = fourier_transform(fam.member(i));
            for (const auto& c : S.coeffs) {
                ASSERT_NEAR(c.imag(), 0, 1e-9) << to_string(spec.kind);
                ASSERT_LE(std::abs(c), spec.N() + 1e-9) << to_string(spec.kind);
            }
        }
    }
}

TEST(Family, ClassicalKloostermanFourierIdentity) {
    const std::uint64_t p = 31;
    FamilySpec spec;
    spec.kind = FamilyKind::kloosterman;
    spec.m = p;
    Family fam(spec);
    for (std::uint64_t i = 0; i < fam.size(); i += 37) {
        auto [a, b] = fam.parameters(i);
        const auto S = fourier_transform(fam.member(i));
        for (std::int64_t h = S.h_min(); h <= S.h_max(); ++h) {
            const std::uint64_t ah = (a + static_cast<std::uint64_t>(h + 31 * 31)) % p;
            if (ah == 0) continue;
            complex kl{};
            for (std::uint64_t n = 1; n < p; ++n) kl += e(static_cast<double>((ah * n + b * inv_search(n, p)) % p), 31);
            ASSERT_NEAR(std::abs(S.at(h) - kl / std::sqrt(31.0)), 0, 1e-9);
        }
    }
}

TEST(Extremal, DegreeAndStructure) {
    EXPECT_EQ(extremal_degree(7), 8);
    EXPECT_EQ(extremal_degree(101), 19);
    EXPECT_EQ(extremal_degree(211), 23);
    for (std::uint64_t m : {7ull, 8ull, 50ull, 101ull}) {
        const auto fam = build_extremal_family(m);
        EXPECT_EQ(fam.alphas.size(), m);
        std::set<std::uint64_t> distinct;
        for (std::int64_t h = fam.h_min; h <= fam.h_max; ++h) {
            const auto a = fam.alpha(h);
            EXPECT_NE(a.bits, 0u);
            distinct.insert(a.bits);
            EXPECT_EQ(fam.psi_P(a), h >= 1 ? 1 : -1);
        }
        EXPECT_EQ(distinct.size(), m);
    }
    const auto f7 = build_extremal_family(7);
    EXPECT_EQ(f7.h_min, -3);
    EXPECT_EQ(f7.h_max, 3);
    EXPECT_THROW(build_extremal_family(6), std::invalid_argument);
}

TEST(Extremal, SignClassesAtM101AreLarge) {
    const auto fam = build_extremal_family(101);
    std::uint64_t plus = 0, minus = 0;
    for (std::uint64_t b = 1; b < fam.field.size(); ++b) (fam.psi_P({b}) == 1 ? plus : minus)++;
    EXPECT_GT(plus, 50u);
    EXPECT_GT(minus, 51u);
    // Weil: |sum_x psi(P(x))| <= (2r - 2) 2^(r/2)
    const double weil = (2 * 19 - 2) * std::pow(2.0, 19 / 2.0);
    EXPECT_LE(std::abs(static_cast<double>(plus) + 1 - static_cast<double>(minus)), weil);
}

TEST(Extremal, SpectrumParsevalAndLowerBound) {
    const auto fam = build_extremal_family(101);
    const auto phi = extremal_function(fam, {1});
    const auto S = fourier_transform(phi);
    for (std::int64_t h = S.h_min(); h <= S.h_max(); ++h) {
        ASSERT_NEAR(S.at(h).real(), h >= 1 ? 1.0 : -1.0, 1e-9);
        ASSERT_NEAR(S.at(h).imag(), 0, 1e-9);
    }
    double energy = 0;
    for (auto v : phi.values) energy += std::norm(v);
    EXPECT_NEAR(energy, 101, 1e-8);
    complex half{};
    for (std::uint64_t n = 0; n <= 50; ++n) half += phi.values[n];
    const double gap = std::abs(half) / std::sqrt(101.0) - std::log(101.0) / std::numbers::pi;
    EXPECT_GE(gap, -3);
    EXPECT_LE(gap, 3);
    // values from the definition
    for (std::uint64_t n = 0; n < 101; n += 10) {
        complex acc{};
        for (std::int64_t h = fam.h_min; h <= fam.h_max; ++h)
            acc += static_cast<double>(h >= 1 ? 1 : -1) * e(-static_cast<double>(static_cast<std::int64_t>(n) * h), 101);
        ASSERT_NEAR(std::abs(phi.values[n] - acc / std::sqrt(101.0)), 0, 1e-10);
    }
    EXPECT_THROW(extremal_function(fam, {0}), std::invalid_argument);
}
