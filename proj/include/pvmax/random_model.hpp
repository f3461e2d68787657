// Random model: traces of Haar-random USp(2r) matrices, the random Fourier
// maximum M_X and the Psi-model sum.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "fft.hpp"
#include "parallel.hpp"
#include "partial_sums.hpp"
#include "rng.hpp"
#include "weyl.hpp"

namespace pvmax {

/// Rejection sampler for the trace of USp(2r), 1 <= r <= 3, against the
/// uniform law on [0, pi]^r.
class TraceSampler {
public:
    static constexpr double envelope_safety = 1.001;

    explicit TraceSampler(int r) : r_(r) {
        if (r < 1 || r > 3) throw std::invalid_argument("trace sampler supports 1 <= r <= 3");
        envelope_ = weyl::density_max(r) * envelope_safety;
    }

    int r() const { return r_; }
    int N() const { return 2 * r_; }
    double envelope() const { return envelope_; }

    double operator()(Stream& rng) const {
        if (r_ == 1) {
            // In x = cos(theta) the density sin^2(theta) dtheta becomes
            // sqrt(1 - x^2) dx, bounded by 1 on [-1, 1]; no trigonometry needed.
            for (;;) {
                const double x = 2.0 * rng.uniform() - 1.0;
                const double u = rng.uniform();
                if (u * u < 1.0 - x * x) return 2.0 * x;
            }
        }
        std::array<double, 3> theta{};
        std::span<double> t(theta.data(), static_cast<std::size_t>(r_));
        for (;;) {
            for (double& x : t) x = std::numbers::pi * rng.uniform();
            const double f = weyl::density(t);
            if (f > envelope_) throw std::runtime_error("rejection envelope violated for r=" + std::to_string(r_));
            if (rng.uniform() * envelope_ < f) return weyl::trace(t);
        }
    }

private:
    int r_;
    double envelope_;
};

/// A sampler bound to a seed; successive calls continue one stream.
struct SeededTraceSampler {
    TraceSampler sampler;
    std::uint64_t seed;
    Stream stream;
    SeededTraceSampler(int r, std::uint64_t s) : sampler(r), seed(s), stream(s, 0) {}
};

inline double sample_trace(SeededTraceSampler& s) { return s.sampler(s.stream); }

/// count traces; block b of 4096 samples uses Stream(seed, b).
inline std::vector<double> sample_traces(int r, std::size_t count, std::uint64_t seed) {
    constexpr std::size_t block = 4096;
    const TraceSampler sampler(r);
    std::vector<double> out(count);
    parallel_chunks(count, block, [&](std::size_t b, std::size_t e, std::size_t c) {
        Stream rng(seed, c);
        for (std::size_t i = b; i < e; ++i) out[i] = sampler(rng);
    });
    return out;
}

/// P(Theta <= theta) for the Sato-Tate angle.
inline double sato_tate_angle_cdf(double theta) { return (theta - std::sin(theta) * std::cos(theta)) / std::numbers::pi; }

/// P(X <= x) for X = 2 cos Theta.
inline double sato_tate_cdf(double x) {
    if (x <= -2) return 0;
    if (x >= 2) return 1;
    return 1.0 - sato_tate_angle_cdf(std::acos(x / 2));
}

// ---------------------------------------------------------------------------

struct TraceProbeResult {
    std::vector<double> epsilons;
    std::vector<double> probability;
    std::vector<double> stderr_;
    std::vector<std::uint64_t> hits;
    double slope = 0;
    double slope_stderr = 0;
    bool ok = true;
    std::string failure;
};

/// Estimates P(X > 2r - eps). The event forces every angle into
/// [0, theta_max], theta_max = 2 arcsin(sqrt(eps)/2), so angles are drawn
/// uniformly in that box and weighted by the density; the estimator is
/// unbiased for the same probability plain sampling would target.
inline TraceProbeResult trace_lower_bound_probe(int r, const std::vector<double>& epsilons, std::uint64_t samples,
                                                std::uint64_t seed) {
    if (r < 1 || r > 3) throw std::invalid_argument("trace probe supports 1 <= r <= 3");
    if (epsilons.size() < 2) throw std::invalid_argument("trace probe needs at least two epsilons");
    for (double e : epsilons)
        if (!(e > 0 && e <= 0.5)) throw std::invalid_argument("epsilons must lie in (0, 0.5]");
    TraceProbeResult res;
    res.epsilons = epsilons;
    const double Z = weyl::normalization(r);
    const double N = 2.0 * r;
    constexpr std::size_t block = 1 << 16;
    for (std::size_t ei = 0; ei < epsilons.size(); ++ei) {
        const double eps = epsilons[ei];
        const double tmax = 2.0 * std::asin(std::sqrt(eps) / 2.0);
        const double vol = std::pow(tmax, r);
        struct Acc {
            double sum = 0, sum2 = 0;
            std::uint64_t hits = 0;
        };
        const std::size_t chunks = (samples + block - 1) / block;
        std::vector<Acc> part(chunks);
        parallel_chunks(samples, block, [&](std::size_t b, std::size_t e, std::size_t c) {
            Stream rng(seed, (static_cast<std::uint64_t>(ei) << 40) | c);
            Acc acc;
            std::array<double, 3> theta{};
            std::span<double> t(theta.data(), static_cast<std::size_t>(r));
            for (std::size_t i = b; i < e; ++i) {
                for (double& x : t) x = tmax * rng.uniform();
                if (weyl::trace(t) > N - eps) {
                    const double w = weyl::density(t) * vol / Z;
                    acc.sum += w;
                    acc.sum2 += w * w;
                    ++acc.hits;
                }
            }
            part[c] = acc;
        });
        Acc tot;
        for (const Acc& a : part) {
            tot.sum += a.sum;
            tot.sum2 += a.sum2;
            tot.hits += a.hits;
        }
        const double n = static_cast<double>(samples);
        const double mean = tot.sum / n;
        const double var = std::max(0.0, tot.sum2 / n - mean * mean);
        res.probability.push_back(mean);
        res.stderr_.push_back(std::sqrt(var / n));
        res.hits.push_back(tot.hits);
        if (tot.hits < 100 && res.ok) {
            res.ok = false;
            res.failure = "epsilon " + std::to_string(eps) + " received only " + std::to_string(tot.hits) + " hits";
        }
    }
    // least squares of log P against log eps
    const std::size_t k = epsilons.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> lx(k), ly(k);
    for (std::size_t i = 0; i < k; ++i) {
        lx[i] = std::log(epsilons[i]);
        ly[i] = res.probability[i] > 0 ? std::log(res.probability[i]) : -1e300;
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double kk = static_cast<double>(k);
    const double den = kk * sxx - sx * sx;
    res.slope = (kk * sxy - sx * sy) / den;
    const double intercept = (sy - res.slope * sx) / kk;
    if (k > 2) {
        double rss = 0;
        for (std::size_t i = 0; i < k; ++i) {
            const double d = ly[i] - intercept - res.slope * lx[i];
            rss += d * d;
        }
        res.slope_stderr = std::sqrt(rss / (kk - 2) * kk / den);
    }
    if (!std::isfinite(res.slope) && res.ok) {
        res.ok = false;
        res.failure = "slope is not finite";
    }
    return res;
}

// ---------------------------------------------------------------------------

struct RandomMaxSample {
    double value = 0;
    int H = 0;
    std::size_t alpha_grid = 0;
    double alpha_star = 0;
};

/// Coefficients X(0), X(h), X(-h) for h = 1..H, in this draw order.
struct ModelCoefficients {
    double x0 = 0;
    std::vector<double> plus, minus;  // plus[h-1] = X(h), minus[h-1] = X(-h)
};

inline ModelCoefficients draw_coefficients(const TraceSampler& sampler, int H, Stream& rng) {
    ModelCoefficients c;
    c.x0 = sampler(rng);
    c.plus.resize(static_cast<std::size_t>(H));
    c.minus.resize(static_cast<std::size_t>(H));
    for (int h = 1; h <= H; ++h) {
        c.plus[static_cast<std::size_t>(h - 1)] = sampler(rng);
        c.minus[static_cast<std::size_t>(h - 1)] = sampler(rng);
    }
    return c;
}

/// max over alpha_j = j/G of |alpha X(0) + sum_{0<|h|<=H} (e(alpha h)-1)/(2 pi i h) X(h)|,
/// using the first H coefficient pairs of c.
inline RandomMaxSample evaluate_m_x(const ModelCoefficients& c, int H, std::size_t G) {
    if (H < 0 || static_cast<std::size_t>(H) > c.plus.size()) throw std::invalid_argument("truncation exceeds the drawn coefficients");
    if (G < static_cast<std::size_t>(2 * H + 1)) throw std::invalid_argument("alpha grid too coarse for the truncation");
    std::vector<complex> a(G);
    complex total{};
    for (int h = 1; h <= H; ++h) {
        const complex cp = c.plus[static_cast<std::size_t>(h - 1)] / (complex(0, 2 * std::numbers::pi * h));
        const complex cm = c.minus[static_cast<std::size_t>(h - 1)] / (complex(0, -2 * std::numbers::pi * h));
        a[static_cast<std::size_t>(h)] += cp;
        a[G - static_cast<std::size_t>(h)] += cm;
        total += cp + cm;
    }
    const auto s = fft::transform(a, fft::Sign::plus);
    RandomMaxSample out;
    out.H = H;
    out.alpha_grid = G;
    double best = -1;
    for (std::size_t j = 0; j < G; ++j) {
        const double alpha = static_cast<double>(j) / static_cast<double>(G);
        const double v = std::norm(alpha * c.x0 + s[j] - total);
        if (v > best) {
            best = v;
            out.alpha_star = alpha;
        }
    }
    out.value = std::sqrt(best);
    return out;
}

inline RandomMaxSample sample_m_x(int r, int H, std::size_t alpha_grid, Stream& rng) {
    if (H < 64) throw std::invalid_argument("sample_m_x expects H >= 64");
    if (alpha_grid < 8 * static_cast<std::size_t>(H)) throw std::invalid_argument("sample_m_x expects alpha_grid >= 8H");
    const TraceSampler sampler(r);
    return evaluate_m_x(draw_coefficients(sampler, H, rng), H, alpha_grid);
}

/// count samples of M_X; sample i uses Stream(seed, i).
inline std::vector<double> sample_m_x_many(int r, int H, std::size_t alpha_grid, std::size_t count, std::uint64_t seed) {
    if (H < 64) throw std::invalid_argument("sample_m_x expects H >= 64");
    if (alpha_grid < 8 * static_cast<std::size_t>(H)) throw std::invalid_argument("sample_m_x expects alpha_grid >= 8H");
    const TraceSampler sampler(r);
    std::vector<double> out(count);
    parallel_for(count, [&](std::size_t i) {
        Stream rng(seed, i);
        out[i] = evaluate_m_x(draw_coefficients(sampler, H, rng), H, alpha_grid).value;
    }, 16);
    return out;
}

// ---------------------------------------------------------------------------

struct MomentCheck {
    int k = 0;
    double y = 0, z = 0;
    double estimate = 0;
    double stderr_ = 0;
    double bound = 0;
    bool pass = false;
};

/// Monte Carlo k-th moment of |sum_{y<=|h|<z} c(h) X(h)|, c(h) = (e(alpha h)-1)/h,
/// compared with (8 (c0 N)^2 k / y)^(k/2), c0 = 2.
inline MomentCheck random_sum_moment_check(int k, double y, std::size_t samples, std::uint64_t seed, int r = 1,
                                           double z = 2048, double alpha = 0.3) {
    if (k < 2 || k > 12 || k % 2) throw std::invalid_argument("k must be even and at most 12");
    if (y < 1) throw std::invalid_argument("y must be at least 1");
    MomentCheck res;
    res.k = k;
    res.y = y;
    res.z = z;
    const double N = 2.0 * r, c0 = 2.0;
    res.bound = std::pow(8.0 * (c0 * N) * (c0 * N) * k / y, k / 2.0);
    std::vector<std::int64_t> hs;
    for (std::int64_t h = static_cast<std::int64_t>(std::ceil(y)); static_cast<double>(h) < z; ++h) hs.push_back(h);
    if (hs.empty()) {
        res.pass = true;
        return res;
    }
    std::vector<complex> cp(hs.size()), cm(hs.size());
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const double h = static_cast<double>(hs[i]);
        const double a = 2 * std::numbers::pi * alpha * h;
        cp[i] = (complex(std::cos(a), std::sin(a)) - 1.0) / h;
        cm[i] = (complex(std::cos(a), -std::sin(a)) - 1.0) / (-h);
    }
    const TraceSampler sampler(r);
    std::vector<double> values(samples);
    parallel_for(samples, [&](std::size_t s) {
        Stream rng(seed, s);
        complex acc{};
        for (std::size_t i = 0; i < hs.size(); ++i) {
            acc += cp[i] * sampler(rng);
            acc += cm[i] * sampler(rng);
        }
        values[s] = std::pow(std::abs(acc), k);
    }, 64);
    double sum = 0, sum2 = 0;
    for (double v : values) {
        sum += v;
        sum2 += v * v;
    }
    const double n = static_cast<double>(samples);
    res.estimate = sum / n;
    res.stderr_ = std::sqrt(std::max(0.0, sum2 / n - res.estimate * res.estimate) / n);
    res.pass = res.estimate <= res.bound + 3 * res.stderr_;
    return res;
}

struct TailEstimate {
    double probability = 0;
    double stderr_ = 0;
    std::size_t samples = 0;
};

/// Samples of sum_{h != 0, -m/2 < h <= m/2} gamma_m(h) X(h); sample i uses Stream(seed, i).
inline std::vector<double> psi_model_samples(int r, std::uint64_t m, std::size_t samples, std::uint64_t seed) {
    if (m < 1000) throw std::invalid_argument("psi model expects m >= 1000");
    std::vector<double> gamma;
    for (std::int64_t h = half_open_min(m); h <= half_open_max(m); ++h)
        if (h != 0) gamma.push_back(gamma_m(h, m));
    const TraceSampler sampler(r);
    std::vector<double> out(samples);
    parallel_for(samples, [&](std::size_t s) {
        Stream rng(seed, s);
        double acc = 0;
        for (double g : gamma) acc += g * sampler(rng);
        out[s] = acc;
    }, 16);
    return out;
}

inline TailEstimate tail_fraction(const std::vector<double>& values, double V) {
    TailEstimate t;
    t.samples = values.size();
    if (values.empty()) return t;
    std::size_t above = 0;
    for (double v : values) above += v > V;
    t.probability = static_cast<double>(above) / static_cast<double>(values.size());
    t.stderr_ = std::sqrt(t.probability * (1 - t.probability) / static_cast<double>(values.size()));
    return t;
}

inline TailEstimate psi_model_tail(int r, std::uint64_t m, double V, std::size_t samples, std::uint64_t seed) {
    if (V < 0) throw std::invalid_argument("psi_model_tail expects V >= 0");
    return tail_fraction(psi_model_samples(r, m, samples, seed), V);
}

}  // namespace pvmax
