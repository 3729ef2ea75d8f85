#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gph {

// SplitMix64 finalizer: full-avalanche 64-bit mixer.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based hash of a word sequence under a seed.  Pure function of its
// arguments: no tables, no state, safe to evaluate from any thread.
inline std::uint64_t hash_words(std::uint64_t seed, std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc908ULL);
    for (std::uint64_t w : words) h = mix64(h ^ w);
    return h;
}

// Derive an independent stream seed (per sample, per level, ...) from a master seed.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
    return hash_words(master, {0x5eedULL, stream});
}

inline double uniform01(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53; // 53 mantissa bits in [0,1)
}

// Standard normal via Box-Muller on two hashed uniforms.
inline double gaussian(std::uint64_t seed, std::uint64_t counter) {
    const double u1 = uniform01(hash_words(seed, {counter, 1}));
    const double u2 = uniform01(hash_words(seed, {counter, 2}));
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

// Seeds on the command line may be decimal or 0x-prefixed hex.
inline std::uint64_t parse_seed(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty seed string");
    std::size_t pos = 0;
    const bool hex = s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X');
    const std::uint64_t v = std::stoull(s, &pos, hex ? 16 : 10);
    if (pos != s.size()) throw std::invalid_argument("trailing characters in seed: " + s);
    return v;
}

} // namespace gph
