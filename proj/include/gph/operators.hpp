#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include <gph/lattice.hpp>
#include <gph/sign_field.hpp>
#include <gph/sign_poly.hpp>

namespace gph {

// ---------------------------------------------------------------------------
// Fractional derivative weight S^(k,alpha)
// ---------------------------------------------------------------------------

// Multiply each coefficient by prod_j <xi_j>^alpha <xi'_j>^alpha.
// key_weight(k, d, a) is prod <slot>^{2a}, so the multiplier uses alpha/2.
template <class C>
DensityMatrixT<C> apply_fractional_derivative(DensityMatrixT<C> m, double alpha) {
    if (alpha < 0.0)
        throw std::invalid_argument("apply_fractional_derivative: alpha must be >= 0");
    if (alpha == 0.0) return m;
    scale_by_key(m, [&](const Key& k) { return Complex(key_weight(k, m.box.d, alpha / 2.0), 0.0); });
    return m;
}

// ---------------------------------------------------------------------------
// Free evolution U^(k)(t)
// ---------------------------------------------------------------------------

// Coefficient at (xi_vec; xi'_vec) multiplied by exp(-i t (sum |xi_j|^2 - sum |xi'_j|^2)).
template <class C>
DensityMatrixT<C> free_evolve(DensityMatrixT<C> m, double t) {
    if (t == 0.0) return m;
    const int d = m.box.d;
    const int order = m.order;
    scale_by_key(m, [&](const Key& k) {
        std::int64_t phase = 0;
        for (int s = 0; s < order; ++s) phase += abs2(key_slot(k, d, order, s, false));
        for (int s = 0; s < order; ++s) phase -= abs2(key_slot(k, d, order, s, true));
        return std::polar(1.0, -t * double(phase));
    });
    return m;
}

// ---------------------------------------------------------------------------
// Collision operators B^{+-}_{j,k}
// ---------------------------------------------------------------------------

enum class Channel { plus, minus };

struct CollisionIndex {
    int j = 1;
    int k = 2;
    Channel sign = Channel::plus;
};

inline void validate_collision(const CollisionIndex& c, int order) {
    if (c.j < 1 || c.k <= c.j)
        throw std::invalid_argument("collide: need 1 <= j < k, got j=" + std::to_string(c.j) +
                                    " k=" + std::to_string(c.k));
    if (c.k > order)
        throw std::invalid_argument("collide: index k=" + std::to_string(c.k) +
                                    " exceeds matrix order " + std::to_string(order));
    if (order < 2) throw std::invalid_argument("collide: input order must be >= 2");
}

// The four frequencies whose signs multiply a randomized summand:
// plus:  (xi_j - eta + eta', xi_j, eta, eta')  on the unprimed side,
// minus: (xi'_j + eta - eta', xi'_j, eta, eta') on the primed side,
// where (eta, eta') is the contracted pair (slot k unprimed / primed).
using SignQuad = std::array<Freq, 4>;

// Hook contract: C operator()(const C& coeff, const SignQuad&) — what to do
// with each summand's coefficient.  NoSigns = deterministic operator.
struct NoSigns {
    template <class C>
    C operator()(const C& coeff, const SignQuad&) const {
        return coeff;
    }
};

// Multiply by the four +-1 signs from a bank at a fixed tag.
struct BankSigns {
    const SignBank& bank;
    std::uint32_t tag = 0;
    Complex operator()(const Complex& coeff, const SignQuad& q) const {
        double s = 1.0;
        for (const Freq& f : q) s *= bank.sign(SignVar{tag, f});
        return coeff * s;
    }
};

// Append the four sign variables symbolically (even powers cancel).
struct TrackedSigns {
    std::uint32_t tag = 0;
    SignPoly operator()(const SignPoly& coeff, const SignQuad& q) const {
        const SignMonomial m = canonical_monomial(
            {SignVar{tag, q[0]}, SignVar{tag, q[1]}, SignVar{tag, q[2]}, SignVar{tag, q[3]}});
        return monomial_times(coeff, m, Complex(1.0, 0.0));
    }
};

// General contraction B^{+-}_{j,k} on a matrix of order m (k <= m):
// the contracted pair is slot k on both sides; it is removed, higher slots
// shift down, and the convolution lands in slot j:
//   plus:  xi_j  -> xi_j  + eta - eta'
//   minus: xi'_j -> xi'_j - eta + eta'
// Implemented as a scatter over the input support: each stored coefficient
// contributes to exactly one output key (outputs leaving the box drop).
template <class C, class Hook>
DensityMatrixT<C> collide_with(const DensityMatrixT<C>& in, const CollisionIndex& c,
                               const Hook& hook) {
    validate_collision(c, in.order);
    const int d = in.box.d;
    const int m = in.order;
    DensityMatrixT<C> out(m - 1, in.box);
    out.coeffs.reserve(in.coeffs.size());

    std::vector<Freq> ou(m - 1), op(m - 1);
    for (const auto& [key, coeff] : in.coeffs) {
        const Freq eta = key_slot(key, d, m, c.k - 1, false);
        const Freq etap = key_slot(key, d, m, c.k - 1, true);
        // drop the contracted pair; higher slots shift down
        int w = 0;
        for (int s = 0; s < m; ++s) {
            if (s == c.k - 1) continue;
            ou[w] = key_slot(key, d, m, s, false);
            op[w] = key_slot(key, d, m, s, true);
            ++w;
        }
        SignQuad quad;
        if (c.sign == Channel::plus) {
            const Freq nu = ou[c.j - 1] + eta - etap;
            if (!in.box.contains(nu)) continue;
            quad = {nu, ou[c.j - 1], eta, etap};
            ou[c.j - 1] = nu;
        } else {
            const Freq np = op[c.j - 1] - eta + etap;
            if (!in.box.contains(np)) continue;
            quad = {np, op[c.j - 1], eta, etap};
            op[c.j - 1] = np;
        }
        out.accumulate(make_key(d, ou, op), hook(coeff, quad));
    }
    return out;
}

inline DensityMatrix collide(const DensityMatrix& in, const CollisionIndex& c) {
    return collide_with(in, c, NoSigns{});
}

inline DensityMatrix randomized_collide(const DensityMatrix& in, const CollisionIndex& c,
                                        const SignBank& bank, std::uint32_t tag = 0) {
    return collide_with(in, c, BankSigns{bank, tag});
}

inline DensityMatrix randomized_collide(const DensityMatrix& in, const CollisionIndex& c,
                                        const SignField& field) {
    FieldBank bank(field);
    return collide_with(in, c, BankSigns{bank, 0});
}

inline TrackedMatrix tracked_collide(const TrackedMatrix& in, const CollisionIndex& c,
                                     std::uint32_t tag) {
    return collide_with(in, c, TrackedSigns{tag});
}

// ---------------------------------------------------------------------------
// Full collision operator B^{(m)} = sum_{j=1}^{m-1} (B^+_{j,m} - B^-_{j,m})
// contracting the last slot pair of an order-m matrix
// ---------------------------------------------------------------------------

template <class C, class Hook>
DensityMatrixT<C> full_collision_with(const DensityMatrixT<C>& in, const Hook& hook) {
    if (in.order < 2) throw std::invalid_argument("full_collision: input order must be >= 2");
    DensityMatrixT<C> out(in.order - 1, in.box);
    for (int j = 1; j < in.order; ++j) {
        add_scaled(out, collide_with(in, CollisionIndex{j, in.order, Channel::plus}, hook),
                   Complex(1.0, 0.0));
        add_scaled(out, collide_with(in, CollisionIndex{j, in.order, Channel::minus}, hook),
                   Complex(-1.0, 0.0));
    }
    return out;
}

inline DensityMatrix full_collision(const DensityMatrix& in) {
    return full_collision_with(in, NoSigns{});
}

inline DensityMatrix full_randomized_collision(const DensityMatrix& in, const SignBank& bank,
                                               std::uint32_t tag = 0) {
    return full_collision_with(in, BankSigns{bank, tag});
}

inline DensityMatrix full_randomized_collision(const DensityMatrix& in, const SignField& field) {
    FieldBank bank(field);
    return full_collision_with(in, BankSigns{bank, 0});
}

inline TrackedMatrix full_tracked_collision(const TrackedMatrix& in, std::uint32_t tag) {
    return full_collision_with(in, TrackedSigns{tag});
}

// ---------------------------------------------------------------------------
// Randomization maps T^omega
// ---------------------------------------------------------------------------

// (T^w f)^(xi) = h_xi f^(xi); an involution and an isometry in every
// weighted norm.
inline ModeFunction randomize_function(const ModeFunction& f, const SignField& field) {
    ModeFunction out(f.box);
    for (const auto& [xi, v] : f.coeffs) out.accumulate(xi, field(xi) * v);
    return out;
}

inline ModeFunction randomize_function(const ModeFunction& f, const SignBank& bank,
                                       std::uint32_t tag = 0) {
    ModeFunction out(f.box);
    for (const auto& [xi, v] : f.coeffs) out.accumulate(xi, bank.sign(SignVar{tag, xi}) * v);
    return out;
}

// Conjugated randomization of a density matrix: coefficient times the
// product of field values over all 2k key frequencies.  For factorized
// matrices this is exactly |T^w phi><T^w phi|^{tensor k}.
inline DensityMatrix randomize_density(const DensityMatrix& m, const SignField& field) {
    DensityMatrix out = m;
    const int d = m.box.d;
    const int order = m.order;
    scale_by_key(out, [&](const Key& k) {
        double s = 1.0;
        for (int slot = 0; slot < order; ++slot) {
            s *= field(key_slot(k, d, order, slot, false));
            s *= field(key_slot(k, d, order, slot, true));
        }
        return Complex(s, 0.0);
    });
    return out;
}

inline DensityMatrix randomize_density(const DensityMatrix& m, const SignBank& bank,
                                       std::uint32_t tag = 0) {
    DensityMatrix out = m;
    const int d = m.box.d;
    const int order = m.order;
    scale_by_key(out, [&](const Key& k) {
        double s = 1.0;
        for (int slot = 0; slot < order; ++slot) {
            s *= bank.sign(SignVar{tag, key_slot(k, d, order, slot, false)});
            s *= bank.sign(SignVar{tag, key_slot(k, d, order, slot, true)});
        }
        return Complex(s, 0.0);
    });
    return out;
}

} // namespace gph
