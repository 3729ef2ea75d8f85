#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <gph/lattice.hpp>

namespace gph {

// ---------------------------------------------------------------------------
// Deterministic random test ensembles (pure functions of their seeds)
// ---------------------------------------------------------------------------

enum class ProfileKind { flat, decaying };

struct Profile {
    ProfileKind kind = ProfileKind::flat;
    double beta = 0.0;

    static Profile flat() { return {ProfileKind::flat, 0.0}; }
    static Profile decaying(double beta) {
        if (beta < 0.0) throw std::invalid_argument("Profile: decay exponent must be >= 0");
        return {ProfileKind::decaying, beta};
    }
};

// Deterministic magnitude envelope: flat = 1; decaying = <max_j |xi_j|>^{-beta}
// over all 2k slots of the key.
inline double profile_weight(const Profile& p, const Key& key, int d) {
    if (p.kind == ProfileKind::flat) return 1.0;
    std::int64_t max2 = 0;
    Freq f;
    for (int base = 0; base < key.len; base += d) {
        for (int i = 0; i < d; ++i) f.c[i] = key.v[base + i];
        for (int i = d; i < 3; ++i) f.c[i] = 0;
        max2 = std::max(max2, abs2(f));
    }
    return std::pow(1.0 + double(max2), -p.beta / 2.0);
}

// Complex Gaussian attached to a key, independent of how the key was reached:
// hash the seed through the key's integers, then Box-Muller.
inline Complex key_gaussian(std::uint64_t seed, const Key& key) {
    std::uint64_t h = hash_words(seed, {std::uint64_t(key.len)});
    for (int i = 0; i < key.len; ++i)
        h = hash_words(h, {std::uint64_t(std::uint32_t(key.v[i]))});
    return {gaussian(h, 0), gaussian(h, 1)};
}

// Random order-k matrix over the box.  target_support = 0 fills the whole
// box (guarded), otherwise that many hashed keys are drawn (duplicates merge,
// so the realized support can be slightly smaller).  Coefficients are
// key-hashed Gaussians scaled by the profile envelope, so the same key gets
// the same coefficient regardless of target_support.
inline DensityMatrix random_ensemble(int order, const LatticeBox& box, std::uint64_t seed,
                                     const Profile& profile, std::size_t target_support = 0) {
    DensityMatrix m(order, box);
    const int d = box.d;
    const int slots = 2 * order;

    auto emit = [&](const std::vector<Freq>& left, const std::vector<Freq>& right) {
        const Key key = make_key(d, left, right);
        const Complex g = key_gaussian(seed, key);
        m.coeffs.try_emplace(key, g * profile_weight(profile, key, d));
    };

    if (target_support == 0) {
        double total = std::pow(double(box.size()), double(slots));
        if (total > double(1 << 21))
            throw std::invalid_argument(
                "random_ensemble: dense fill over " + std::to_string(total) +
                " keys is too large; pass a target support size");
        const std::vector<Freq> all = box.all();
        std::vector<int> idx(slots, 0);
        std::vector<Freq> left(order), right(order);
        while (true) {
            for (int s = 0; s < order; ++s) left[s] = all[idx[s]];
            for (int s = 0; s < order; ++s) right[s] = all[idx[order + s]];
            emit(left, right);
            int pos = slots - 1;
            while (pos >= 0 && ++idx[pos] == int(all.size())) idx[pos--] = 0;
            if (pos < 0) break;
        }
    } else {
        const int span = 2 * box.K + 1;
        std::vector<Freq> left(order), right(order);
        for (std::size_t i = 0; i < target_support; ++i) {
            for (int s = 0; s < slots; ++s) {
                Freq f;
                for (int c = 0; c < d; ++c)
                    f.c[c] = int(hash_words(seed, {0xd7a3, i, std::uint64_t(s),
                                                   std::uint64_t(c)}) %
                                 std::uint64_t(span)) -
                             box.K;
                (s < order ? left[s] : right[s - order]) = f;
            }
            emit(left, right);
        }
    }
    return m;
}

// Random single-particle data for the NLS bridge: hashed Gaussian
// coefficients scaled by <n>^{-beta} and by an overall amplitude.
inline ModeFunction random_mode_function(const LatticeBox& box, std::uint64_t seed,
                                         double amplitude = 1.0, double beta = 2.0) {
    ModeFunction phi(box);
    std::uint64_t counter = 0;
    for (const Freq& f : box.all()) {
        const Complex g(gaussian(seed, counter), gaussian(seed, counter + 1));
        counter += 2;
        phi.accumulate(f, amplitude * std::pow(bracket2(f), -beta / 2.0) * g);
    }
    return phi;
}

// Average over simultaneous permutations of the unprimed and primed slots:
// the bosonic symmetry gamma(xi_sigma; xi'_sigma) = gamma(xi; xi').
inline DensityMatrix symmetrize(const DensityMatrix& m) {
    const int d = m.box.d;
    const int order = m.order;
    std::vector<int> perm(order);
    DensityMatrix out(order, m.box);
    std::size_t count = 0;
    for (int s = 0; s < order; ++s) perm[s] = s;
    std::vector<Freq> left(order), right(order);
    do {
        ++count;
        for (const auto& [key, coeff] : m.coeffs) {
            for (int s = 0; s < order; ++s) {
                left[s] = key_slot(key, d, order, perm[s], false);
                right[s] = key_slot(key, d, order, perm[s], true);
            }
            out.accumulate(make_key(d, left, right), coeff);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    scale_matrix(out, Complex(1.0 / double(count), 0.0));
    return out;
}

// ---------------------------------------------------------------------------
// Adversarially concentrated ensemble
//
// Order-(k+1) matrices built so that the PLUS channel of B_{1,k+1} sends
// every stored key to one output key with sign product exactly +1: keys
// have unprimed slot 1 = v, contracted unprimed slot = zeta, contracted
// primed slot = v, so the convolution gives v + zeta - v = zeta for every v
// and the four signs are h_zeta h_v h_zeta h_v = 1.  The coherent sum grows
// like sum_v a_v while the norm only controls sqrt(sum_v a_v^2); with
// magnitudes a_v = <v>^{-4 alpha} the ratio grows with the cutoff for small
// alpha and saturates once alpha exceeds d/4.
// ---------------------------------------------------------------------------

inline DensityMatrix adversarial_ensemble(int k, const LatticeBox& box, double alpha,
                                          std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("adversarial_ensemble: need k >= 1");
    const int order = k + 1;
    DensityMatrix m(order, box);
    const Freq zeta = freq(0), zetap = freq(0), filler = freq(0);
    std::uint64_t counter = 0;
    for (const Freq& v : box.all()) {
        std::vector<Freq> left(order, filler), right(order, filler);
        left[0] = v;
        left[order - 1] = zeta;
        right[0] = zetap;
        right[order - 1] = v;
        // positive random magnitude keeps the coherent alignment
        const double r = 0.25 + std::abs(gaussian(seed, counter++));
        const double a = std::pow(bracket2(v), -2.0 * alpha);
        m.accumulate(make_key(box.d, left, right), Complex(r * a, 0.0));
    }
    return m;
}

} // namespace gph
