// Reproducible random streams: every stream is keyed by (seed, stream index),
// so results never depend on which thread consumed which stream.
#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace pvmax {

class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t index) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x70766d78u};
        engine_.seed(seq);
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), unbiased.
    std::uint64_t below(std::uint64_t n) {
        std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
        return dist(engine_);
    }

private:
    std::mt19937_64 engine_;
};

/// k distinct indices from [0, n), sorted, chosen by a partial Fisher-Yates
/// shuffle on a sparse map.
inline std::vector<std::uint64_t> sample_without_replacement(std::uint64_t n, std::uint64_t k, std::uint64_t seed) {
    if (k > n) throw std::invalid_argument("cannot draw more indices than the population holds");
    std::vector<std::uint64_t> out;
    out.reserve(k);
    if (k == n) {
        for (std::uint64_t i = 0; i < n; ++i) out.push_back(i);
        return out;
    }
    Stream rng(seed, 0x5ab5ab5ab5ull);
    std::unordered_map<std::uint64_t, std::uint64_t> swapped;
    auto value_at = [&](std::uint64_t i) {
        auto it = swapped.find(i);
        return it == swapped.end() ? i : it->second;
    };
    for (std::uint64_t i = 0; i < k; ++i) {
        std::uint64_t j = i + rng.below(n - i);
        std::uint64_t vi = value_at(i), vj = value_at(j);
        swapped[j] = vi;
        out.push_back(vj);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace pvmax
