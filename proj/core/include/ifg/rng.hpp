#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <vector>

#include "ifg/errors.hpp"

namespace ifg {

// Deterministic random source. std::mt19937_64's raw output is fixed by the
// standard, but the std distributions are not, so the distribution transforms
// here are hand-rolled to keep every draw reproducible across toolchains.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi], rejection-sampled to avoid modulo bias.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (lo > hi) throw InputError("uniform_int: empty range");
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(engine_());  // full 64-bit range
        std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
        std::uint64_t draw;
        do {
            draw = engine_();
        } while (draw >= limit);
        return lo + static_cast<std::int64_t>(draw % span);
    }

    // Standard normal via Box-Muller (one draw used, the pair partner discarded).
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool coin() { return (engine_() & 1) != 0; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices from [0, n), in draw order (partial Fisher-Yates).
    std::vector<int> sample_without_replacement(int n, int k) {
        if (k > n) throw InputError("sample_without_replacement: k exceeds population");
        std::vector<int> pool(n);
        for (int i = 0; i < n; ++i) pool[i] = i;
        std::vector<int> out(k);
        for (int i = 0; i < k; ++i) {
            int j = static_cast<int>(uniform_int(i, n - 1));
            std::swap(pool[i], pool[j]);
            out[i] = pool[i];
        }
        return out;
    }

    // Independent child stream identified by a tag; children with different
    // tags (or parents with different seeds) do not collide.
    Rng fork(std::string_view tag) const;

  private:
    std::mt19937_64 engine_;
};

// splitmix64 finalizer; used for seed derivation and content hashing.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
    return mix64(root ^ fnv1a64(tag));
}

inline Rng Rng::fork(std::string_view tag) const {
    Rng copy = *this;  // does not disturb this stream
    return Rng(mix64(copy.engine_() ^ fnv1a64(tag)));
}

}  // namespace ifg
