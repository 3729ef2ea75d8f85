#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <gph/lattice.hpp>
#include <gph/omega.hpp>
#include <gph/operators.hpp>
#include <gph/simplex.hpp>

namespace gph {

// ---------------------------------------------------------------------------
// Iterated Duhamel terms
//
//   sigma^(k)_n(t) = (-i)^n  Int_{t >= t_{k+1} >= ... >= t_{n+k} >= 0}
//       U^(k)(t - t_{k+1}) [B^(k+1)]^w  U^(k+1)(t_{k+1} - t_{k+2}) ...
//       [B^(n+k)]^w  gamma^(n+k)(t_{n+k})  dt_{k+1} ... dt_{n+k}
//
// The level tag of each full collision is the order of the matrix it acts
// on; independent randomization gives every level its own field (tag = r),
// dependent randomization evaluates every level on one shared field (tag 0).
// ---------------------------------------------------------------------------

// A priori data: (order, time) -> matrix of that order.
using GammaSequence = std::function<DensityMatrix(int order, double time)>;

struct DuhamelMode {
    enum class Kind { deterministic, dependent, independent } kind = Kind::deterministic;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> seeds; // optional explicit per-level seeds
    std::uint32_t first_tag = 0;      // tag of seeds[0] when the list is used

    static DuhamelMode deterministic() { return {}; }
    static DuhamelMode dependent(std::uint64_t seed) {
        return {Kind::dependent, seed, {}, 0};
    }
    static DuhamelMode independent(std::uint64_t master_seed) {
        return {Kind::independent, master_seed, {}, 0};
    }
    static DuhamelMode independent_list(std::vector<std::uint64_t> seeds,
                                        std::uint32_t first_tag) {
        return {Kind::independent, 0, std::move(seeds), first_tag};
    }
};

inline std::unique_ptr<SignBank> make_bank(const DuhamelMode& mode) {
    switch (mode.kind) {
    case DuhamelMode::Kind::deterministic:
        return std::make_unique<ConstBank>(1.0);
    case DuhamelMode::Kind::dependent:
        return std::make_unique<FieldBank>(mode.seed);
    case DuhamelMode::Kind::independent:
        if (!mode.seeds.empty())
            return std::make_unique<SeedListBank>(mode.first_tag, mode.seeds);
        return std::make_unique<IndependentBank>(mode.seed);
    }
    throw std::logic_error("make_bank: unknown mode");
}

inline Complex minus_i_power(int n) {
    switch (((n % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, -1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, 1.0};
    }
}

// Apply the full-collision/free-evolution chain for one time configuration:
// start from gamma^{(n+k)}(t_{n+k}) and walk levels r = n+k .. k+1.
// times[i] = t_{k+1+i}, descending; the outer time is t.
template <class C, class HookFor>
DensityMatrixT<C> collision_chain(DensityMatrixT<C> sigma, int k, double t,
                                  const std::vector<double>& times, const HookFor& hook_for) {
    const int n = int(times.size());
    for (int r = n + k; r >= k + 1; --r) {
        sigma = full_collision_with(sigma, hook_for(std::uint32_t(r)));
        const double upper = (r == k + 1) ? t : times[r - k - 2];
        sigma = free_evolve(std::move(sigma), upper - times[r - k - 1]);
    }
    return sigma;
}

namespace detail {

template <class C, class HookFor>
DensityMatrixT<C> duhamel_accumulate(int k, int n, double t, const SimplexScheme& scheme,
                                     const std::function<DensityMatrixT<C>(double)>& top,
                                     const HookFor& hook_for) {
    if (k < 1) throw std::invalid_argument("duhamel_term: need k >= 1");
    if (n < 1) throw std::invalid_argument("duhamel_term: need n >= 1");
    DensityMatrixT<C> probe = top(t); // fixes box and validates the top order
    if (probe.order != n + k)
        throw std::invalid_argument("duhamel_term: gamma sequence returned order " +
                                    std::to_string(probe.order) + ", expected " +
                                    std::to_string(n + k));
    DensityMatrixT<C> acc(k, probe.box);
    simplex_visit(t, n, scheme, [&](const std::vector<double>& times, double w) {
        DensityMatrixT<C> sigma = top(times[n - 1]);
        if (sigma.order != n + k)
            throw std::invalid_argument("duhamel_term: gamma sequence returned order " +
                                        std::to_string(sigma.order) + ", expected " +
                                        std::to_string(n + k));
        sigma = collision_chain(std::move(sigma), k, t, times, hook_for);
        add_scaled(acc, sigma, Complex(w, 0.0));
    });
    scale_matrix(acc, minus_i_power(n));
    return acc;
}

} // namespace detail

inline DensityMatrix duhamel_term(int k, int n, const DuhamelMode& mode,
                                  const GammaSequence& gamma, double t,
                                  const SimplexScheme& scheme) {
    std::function<DensityMatrix(double)> top = [&](double s) { return gamma(n + k, s); };
    if (mode.kind == DuhamelMode::Kind::deterministic)
        return detail::duhamel_accumulate<Complex>(k, n, t, scheme, top,
                                                   [](std::uint32_t) { return NoSigns{}; });
    auto bank = make_bank(mode);
    const bool dependent = mode.kind == DuhamelMode::Kind::dependent;
    return detail::duhamel_accumulate<Complex>(
        k, n, t, scheme, top, [&](std::uint32_t r) {
            return BankSigns{*bank, dependent ? 0u : r};
        });
}

// Symbolic form of the same term: coefficients carry their sign monomials,
// so E || S^alpha sigma ||^2 is weighted_sq_norm of the result — the exact
// Omega-average of the quadrature-level term.
inline TrackedMatrix duhamel_term_tracked(int k, int n, bool dependent,
                                          const GammaSequence& gamma, double t,
                                          const SimplexScheme& scheme) {
    std::function<TrackedMatrix(double)> top = [&](double s) {
        return to_tracked(gamma(n + k, s));
    };
    return detail::duhamel_accumulate<SignPoly>(
        k, n, t, scheme, top, [&](std::uint32_t r) {
            return TrackedSigns{dependent ? 0u : r};
        });
}

// Both presentations bundled for the averaging layer.  The numeric builder
// queries tag 0 at every level in dependent mode and tag r in independent
// mode, matching the tracked form.
inline OmegaBuilder duhamel_builder(int k, int n, bool dependent, GammaSequence gamma, double t,
                                    SimplexScheme scheme) {
    OmegaBuilder b;
    b.numeric = [=](const SignBank& bank) {
        std::function<DensityMatrix(double)> top = [&](double s) { return gamma(n + k, s); };
        return detail::duhamel_accumulate<Complex>(
            k, n, t, scheme, top, [&](std::uint32_t r) {
                return BankSigns{bank, dependent ? 0u : r};
            });
    };
    b.tracked = [=] { return duhamel_term_tracked(k, n, dependent, gamma, t, scheme); };
    return b;
}

// ---------------------------------------------------------------------------
// Explicit Duhamel words: a fixed choice of collision at every level
// ---------------------------------------------------------------------------

// steps are stored in display order, mirroring
//   U^(n)(t_1-t_2) B[0] U^(n+1)(t_2-t_3) B[1] ... B[ell-1] gamma_top(t_{ell+1}),
// so steps[i] maps order n+i+1 to n+i and is applied (ell-1-i)-th from the
// start.  The level tag of steps[i] is n+i+1.
struct DuhamelWord {
    int base_order = 1; // n, the output order
    std::vector<CollisionIndex> steps;
};

inline int word_top_order(const DuhamelWord& w) { return w.base_order + int(w.steps.size()); }

inline void validate_word(const DuhamelWord& w) {
    if (w.base_order < 1) throw std::invalid_argument("DuhamelWord: base order must be >= 1");
    for (std::size_t i = 0; i < w.steps.size(); ++i) {
        const CollisionIndex& c = w.steps[i];
        const int order = w.base_order + int(i) + 1;
        if (c.j < 1 || c.k <= c.j || c.k > order)
            throw std::invalid_argument(
                "DuhamelWord: step " + std::to_string(i + 1) + " has indices (j=" +
                std::to_string(c.j) + ", k=" + std::to_string(c.k) +
                ") invalid for a collision acting at order " + std::to_string(order));
    }
}

template <class C, class HookFor>
DensityMatrixT<C> word_chain(const DuhamelWord& w, const std::vector<double>& times,
                             DensityMatrixT<C> sigma, const HookFor& hook_for) {
    validate_word(w);
    const int ell = int(w.steps.size());
    const int n = w.base_order;
    if (int(times.size()) != ell + 1)
        throw std::invalid_argument("duhamel_integrand: need " + std::to_string(ell + 1) +
                                    " times, got " + std::to_string(times.size()));
    if (sigma.order != n + ell)
        throw std::invalid_argument("duhamel_integrand: top matrix has order " +
                                    std::to_string(sigma.order) + ", expected " +
                                    std::to_string(n + ell));
    for (int i = ell - 1; i >= 0; --i) {
        sigma = collide_with(sigma, w.steps[i], hook_for(std::uint32_t(n + i + 1)));
        sigma = free_evolve(std::move(sigma), times[i] - times[i + 1]);
    }
    return sigma;
}

inline DensityMatrix duhamel_integrand(const DuhamelWord& w, const std::vector<double>& times,
                                       const DensityMatrix& gamma_top) {
    return word_chain(w, times, gamma_top, [](std::uint32_t) { return NoSigns{}; });
}

inline DensityMatrix duhamel_integrand(const DuhamelWord& w, const std::vector<double>& times,
                                       const DensityMatrix& gamma_top, const SignBank& bank,
                                       bool dependent = false) {
    return word_chain(w, times, gamma_top, [&](std::uint32_t r) {
        return BankSigns{bank, dependent ? 0u : r};
    });
}

inline TrackedMatrix duhamel_integrand_tracked(const DuhamelWord& w,
                                               const std::vector<double>& times,
                                               const TrackedMatrix& gamma_top, bool dependent) {
    return word_chain(w, times, gamma_top, [&](std::uint32_t r) {
        return TrackedSigns{dependent ? 0u : r};
    });
}

// ---------------------------------------------------------------------------
// Expansion bookkeeping: which output frequencies were hit by collisions,
// and their signed decompositions into top-order argument slots
// ---------------------------------------------------------------------------

struct SignedAtom {
    int coeff = 1;       // +1 or -1
    bool primed = false; // refers to a primed top-order slot
    int slot = 1;        // 1-based slot index at the top order
    friend bool operator==(const SignedAtom&, const SignedAtom&) = default;
};

struct ExpansionBookkeeping {
    int base_order = 1;
    int length = 0;
    std::vector<int> collided_unprimed; // final unprimed slots hit by a collision (1-based)
    std::vector<int> collided_primed;
    std::vector<std::vector<SignedAtom>> unprimed; // decomposition per final slot
    std::vector<std::vector<SignedAtom>> primed;
};

inline ExpansionBookkeeping expansion_bookkeeping(const DuhamelWord& w) {
    validate_word(w);
    const int n = w.base_order;
    const int ell = int(w.steps.size());
    const int m = n + ell;

    // integer combination of the 2m top-order atoms, indexed
    // [0..m) = unprimed slots, [m..2m) = primed slots
    using Expr = std::vector<int>;
    std::vector<Expr> u(m, Expr(2 * m, 0)), p(m, Expr(2 * m, 0));
    std::vector<char> touched_u(m, 0), touched_p(m, 0);
    for (int s = 0; s < m; ++s) {
        u[s][s] = 1;
        p[s][m + s] = 1;
    }

    for (int i = ell - 1; i >= 0; --i) {
        const CollisionIndex& c = w.steps[i];
        const Expr eta = u[c.k - 1];
        const Expr etap = p[c.k - 1];
        if (c.sign == Channel::plus) {
            for (int a = 0; a < 2 * m; ++a) u[c.j - 1][a] += eta[a] - etap[a];
            touched_u[c.j - 1] = 1;
        } else {
            for (int a = 0; a < 2 * m; ++a) p[c.j - 1][a] += etap[a] - eta[a];
            touched_p[c.j - 1] = 1;
        }
        u.erase(u.begin() + (c.k - 1));
        p.erase(p.begin() + (c.k - 1));
        touched_u.erase(touched_u.begin() + (c.k - 1));
        touched_p.erase(touched_p.begin() + (c.k - 1));
    }

    auto decompose = [&](const Expr& e) {
        std::vector<SignedAtom> atoms;
        for (int a = 0; a < 2 * m; ++a) {
            if (e[a] == 0) continue;
            if (e[a] != 1 && e[a] != -1)
                throw std::logic_error("expansion_bookkeeping: non-unit atom coefficient");
            atoms.push_back(SignedAtom{e[a], a >= m, (a % m) + 1});
        }
        return atoms;
    };

    ExpansionBookkeeping out;
    out.base_order = n;
    out.length = ell;
    out.unprimed.resize(n);
    out.primed.resize(n);
    for (int s = 0; s < n; ++s) {
        out.unprimed[s] = decompose(u[s]);
        out.primed[s] = decompose(p[s]);
        if (touched_u[s]) out.collided_unprimed.push_back(s + 1);
        if (touched_p[s]) out.collided_primed.push_back(s + 1);
    }
    return out;
}

} // namespace gph
