#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace trendcast {

inline constexpr const char* kVersion = "0.1.0";

// Error taxonomy shared by the library and the CLI exit-code mapping
// (2 = config/usage, 3 = data integrity, 4 = numerical failure).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Deterministic RNG. Wraps mt19937_64 with explicit uniform/normal
/// mappings so draws do not depend on libstdc++ distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // uniform integer in [0, n)
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
    }

    // Box-Muller, one value per call (no cached state).
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
        return mean + stddev * z;
    }

    /// Fisher-Yates partial shuffle: fills `out` with `k` distinct indices
    /// drawn uniformly from [0, n).
    void sample_indices(std::size_t n, std::size_t k, std::vector<std::size_t>& out) {
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        out.clear();
        out.reserve(k);
        for (std::size_t i = 0; i < k && i < n; ++i) {
            const std::size_t j = i + uniform_index(n - i);
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// Worker count: TRENDCAST_THREADS caps it; defaults to 1 (deterministic).
inline unsigned worker_count() {
    if (const char* env = std::getenv("TRENDCAST_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return 1;
}

/// Runs fn(worker_id, begin, end) over contiguous chunks of [0, n).
/// Results must be merged by the caller in worker order to stay deterministic
/// for a fixed thread count.
inline void parallel_chunks(std::size_t n, unsigned threads,
                            const std::function<void(unsigned, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        fn(0, 0, n);
        return;
    }
    const unsigned t = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(t);
    const std::size_t base = n / t;
    const std::size_t rem = n % t;
    std::size_t begin = 0;
    for (unsigned w = 0; w < t; ++w) {
        const std::size_t len = base + (w < rem ? 1 : 0);
        pool.emplace_back(fn, w, begin, begin + len);
        begin += len;
    }
    for (auto& th : pool) th.join();
}

}  // namespace trendcast
