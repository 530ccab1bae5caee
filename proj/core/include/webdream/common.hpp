#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace webdream {

// Stable 64-bit hashing. std::hash is not stable across standard libraries,
// and every hashed quantity here ends up in checkpoints or feature indices.
constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr uint64_t fnv1a(std::string_view s, uint64_t h = kFnvOffset) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

constexpr uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr uint64_t hash_combine(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b)); }

/// Small deterministic generator (splitmix64 stream). Distributions are
/// implemented by hand so that sequences are identical on every platform.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    /// Named substream: the same (seed, name, index) always yields the same stream.
    static Rng substream(uint64_t seed, std::string_view name, uint64_t index = 0) {
        return Rng(hash_combine(hash_combine(seed, fnv1a(name)), index));
    }

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be > 0.
    uint64_t below(uint64_t n) {
        // Lemire-free rejection; n is always small here.
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

    uint64_t state() const { return state_; }

private:
    uint64_t state_;
};

/// Thrown for invalid sizes / arguments at public entry points.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Lowercased alphanumeric word tokens ("$12.50" -> {"12", "50"}).
std::vector<std::string> word_tokens(std::string_view text);

/// True if needle occurs in haystack delimited by non-alphanumeric boundaries.
bool contains_phrase(std::string_view haystack, std::string_view needle);

std::string to_lower(std::string_view s);

}  // namespace webdream
