// Thin FFTW wrapper. Plans are cached per (size, direction) and executed with
// the new-array interface on per-thread buffers, so concurrent transforms are safe.
#pragma once

#include <algorithm>
#include <complex>
#include <new>
#include <cstddef>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include <fftw3.h>

namespace pvmax::fft {

enum class Sign { minus = FFTW_FORWARD, plus = FFTW_BACKWARD };

namespace detail {

class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }
    fftw_plan get(std::size_t n, Sign sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(n, static_cast<int>(sign));
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        fftw_complex* in = fftw_alloc_complex(n);
        fftw_complex* out = fftw_alloc_complex(n);
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), in, out, static_cast<int>(sign), FFTW_ESTIMATE);
        fftw_free(in);
        fftw_free(out);
        if (!plan) throw std::runtime_error("FFTW plan creation failed");
        plans_.emplace(key, plan);
        return plan;
    }
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

struct Buffers {
    fftw_complex* in = nullptr;
    fftw_complex* out = nullptr;
    std::size_t size = 0;
    void reserve(std::size_t n) {
        if (n <= size) return;
        release();
        in = fftw_alloc_complex(n);
        out = fftw_alloc_complex(n);
        if (!in || !out) throw std::bad_alloc();
        size = n;
    }
    void release() {
        fftw_free(in);
        fftw_free(out);
        in = out = nullptr;
        size = 0;
    }
    Buffers() = default;
    Buffers(const Buffers&) = delete;
    Buffers& operator=(const Buffers&) = delete;
    ~Buffers() { release(); }
};

}  // namespace detail

/// out[k] = sum_n in[n] exp(s 2 pi i k n / size), s = -1 or +1. Unnormalized.
inline std::vector<std::complex<double>> transform(const std::vector<std::complex<double>>& in, Sign sign) {
    const std::size_t n = in.size();
    std::vector<std::complex<double>> out(n);
    if (n == 0) return out;
    fftw_plan plan = detail::PlanCache::instance().get(n, sign);
    // Plans assume SIMD-aligned arrays, so data passes through per-thread
    // buffers from fftw_alloc.
    thread_local detail::Buffers buf;
    buf.reserve(n);
    std::copy(in.begin(), in.end(), reinterpret_cast<std::complex<double>*>(buf.in));
    fftw_execute_dft(plan, buf.in, buf.out);
    const auto* res = reinterpret_cast<const std::complex<double>*>(buf.out);
    std::copy(res, res + n, out.begin());
    return out;
}

}  // namespace pvmax::fft
