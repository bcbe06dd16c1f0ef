#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string_view>
#include <utility>
#include <vector>

namespace selm {

namespace detail {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_name(std::string_view name) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace detail

/// Counter-based generator: the i-th draw is a pure function of (key, i).
///
/// Streams are derived from a user seed plus a stream name, so every consumer
/// (projection, anchors, pairs, triplets, splits) gets an independent,
/// reproducible sequence without sharing mutable state. The output is
/// identical across platforms and standard libraries, unlike the
/// distributions in <random>.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) noexcept : key_(detail::mix64(key ^ detail::kGolden)) {}

    /// Named substream of `seed`.
    static CounterRng stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) noexcept {
        return CounterRng(detail::mix64(seed ^ detail::hash_name(name)) + index * detail::kGolden);
    }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t c = counter_++;
        return detail::mix64(detail::mix64(key_ + c * detail::kGolden) ^ c);
    }

    /// Uniform on the open interval (0, 1).
    double uniform01() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform on the open interval (lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller (one value per two uniforms, no caching).
    double normal() noexcept {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Unbiased integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) noexcept {
        const std::uint64_t limit = (~bound + 1) % bound;  // 2^64 mod bound
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= limit) return r % bound;
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

    /// `count` distinct indices from [0, n), in draw order (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count) {
        std::vector<std::size_t> pool(n);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        if (count > n) count = n;
        for (std::size_t i = 0; i < count; ++i) {
            const auto j = i + static_cast<std::size_t>(below(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(count);
        return pool;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Child seed for a named sub-task, so one user seed drives a whole experiment.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) noexcept {
    return CounterRng::stream(seed, name, index).next_u64();
}

}  // namespace selm
