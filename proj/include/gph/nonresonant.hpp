#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <gph/lattice.hpp>

namespace gph {

// ---------------------------------------------------------------------------
// Non-resonant density matrices: support restricted to keys whose 2m
// frequencies have strictly decreasing moduli
//   |xi_1| > |xi_2| > ... > |xi_m| > |xi'_1| > ... > |xi'_m|
// (compared exactly as integers |xi|^2; ties violate the strict chain).
// ---------------------------------------------------------------------------

inline bool modulus_chain_ok(const Key& key, int d, int order) {
    std::int64_t prev = -1;
    bool first = true;
    for (int half = 0; half < 2; ++half)
        for (int s = 0; s < order; ++s) {
            const std::int64_t a = abs2(key_slot(key, d, order, s, half == 1));
            if (!first && a >= prev) return false;
            prev = a;
            first = false;
        }
    return true;
}

// Keep exactly the coefficients on strictly modulus-ordered keys.
inline DensityMatrix project_N(const DensityMatrix& m) {
    DensityMatrix out(m.order, m.box);
    for (const auto& [k, c] : m.coeffs)
        if (modulus_chain_ok(k, m.box.d, m.order)) out.accumulate(k, c);
    return out;
}

// The distinct squared moduli available in the box, descending.
inline std::vector<std::int64_t> modulus_classes(const LatticeBox& box) {
    std::map<std::int64_t, int> seen;
    for (const Freq& f : box.all()) ++seen[abs2(f)];
    std::vector<std::int64_t> values;
    for (auto it = seen.rbegin(); it != seen.rend(); ++it) values.push_back(it->first);
    return values;
}

// Random matrix supported on admissible chains, rescaled so that
// || S^(m,alpha) . || = C1^m exactly.  Each stored key picks 2m distinct
// modulus classes in descending order and a random member of each class.
inline DensityMatrix sample_N(int order, const LatticeBox& box, double alpha, double C1,
                              std::uint64_t seed, std::size_t target_support = 64) {
    if (order < 1) throw std::invalid_argument("sample_N: order must be >= 1");
    if (C1 <= 0.0) throw std::invalid_argument("sample_N: C1 must be positive");
    const std::vector<std::int64_t> classes = modulus_classes(box);
    const int slots = 2 * order;
    if (int(classes.size()) < slots)
        throw std::invalid_argument(
            "sample_N: box too small — only " + std::to_string(classes.size()) +
            " distinct moduli available, need " + std::to_string(slots) +
            " for a strict chain of length " + std::to_string(slots));

    // members per class, each sorted (box.all() is ordered)
    std::map<std::int64_t, std::vector<Freq>> members;
    for (const Freq& f : box.all()) members[abs2(f)].push_back(f);

    DensityMatrix m(order, box);
    std::vector<Freq> left(order), right(order);
    for (std::size_t i = 0; i < target_support; ++i) {
        // descending choice of 'slots' distinct class indices: sample without
        // replacement by repeated hashing, then sort
        std::vector<int> picks;
        std::uint64_t attempt = 0;
        while (int(picks.size()) < slots) {
            const int cand = int(hash_words(seed, {1, i, attempt++}) % classes.size());
            if (std::find(picks.begin(), picks.end(), cand) == picks.end())
                picks.push_back(cand);
        }
        std::sort(picks.begin(), picks.end()); // classes[] is descending already
        for (int s = 0; s < slots; ++s) {
            const std::vector<Freq>& cls = members.at(classes[picks[s]]);
            const Freq f = cls[hash_words(seed, {2, i, std::uint64_t(s)}) % cls.size()];
            (s < order ? left[s] : right[s - order]) = f;
        }
        const Key key = make_key(box.d, left, right);
        m.coeffs.try_emplace(key, Complex(gaussian(hash_words(seed, {3, i}), 0),
                                          gaussian(hash_words(seed, {3, i}), 1)));
    }

    const double norm = weighted_norm(m, alpha);
    if (norm == 0.0) throw std::logic_error("sample_N: degenerate sample");
    scale_matrix(m, Complex(std::pow(C1, order) / norm, 0.0));
    return m;
}

} // namespace gph
