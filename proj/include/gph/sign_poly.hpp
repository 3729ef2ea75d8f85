#pragma once

#include <map>
#include <vector>

#include <gph/lattice.hpp>
#include <gph/sign_field.hpp>

namespace gph {

// ---------------------------------------------------------------------------
// Symbolic coefficients over the sign algebra
//
// Since h^2 = 1 for +-1 signs, every product of sign variables collapses to
// a product of DISTINCT variables; a monomial is that sorted list.  Distinct
// monomials are orthonormal in L^2(Omega):  E[m1 * m2] = [m1 == m2].  A
// matrix whose coefficients are polynomials in the signs therefore has an
// exactly computable expected squared norm: sum of |coefficient|^2 over
// monomials — no sampling and no 2^M enumeration.
// ---------------------------------------------------------------------------

using SignMonomial = std::vector<SignVar>; // strictly sorted, distinct entries

// Canonical form of an arbitrary multiset of variables (even powers drop).
inline SignMonomial canonical_monomial(std::vector<SignVar> vars) {
    std::sort(vars.begin(), vars.end());
    SignMonomial out;
    std::size_t i = 0;
    while (i < vars.size()) {
        std::size_t j = i;
        while (j < vars.size() && vars[j] == vars[i]) ++j;
        if ((j - i) % 2 != 0) out.push_back(vars[i]);
        i = j;
    }
    return out;
}

// Product of two canonical monomials = symmetric difference of sorted lists.
inline SignMonomial monomial_product(const SignMonomial& a, const SignMonomial& b) {
    SignMonomial out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            out.push_back(a[i++]);
        } else {
            out.push_back(b[j++]);
        }
    }
    out.insert(out.end(), a.begin() + i, a.end());
    out.insert(out.end(), b.begin() + j, b.end());
    return out;
}

inline double monomial_value(const SignMonomial& m, const SignBank& bank) {
    double s = 1.0;
    for (const SignVar& v : m) s *= bank.sign(v);
    return s;
}

struct SignPoly {
    std::map<SignMonomial, Complex> terms; // ordered: deterministic iteration

    static SignPoly constant(Complex c) {
        SignPoly p;
        if (!coeff_is_zero(c)) p.terms.emplace(SignMonomial{}, c);
        return p;
    }

    void add_term(const SignMonomial& m, Complex c) {
        if (coeff_is_zero(c)) return;
        auto [it, inserted] = terms.try_emplace(m, c);
        if (!inserted) {
            it->second += c;
            if (coeff_is_zero(it->second)) terms.erase(it);
        }
    }

    SignPoly& operator+=(const SignPoly& o) {
        for (const auto& [m, c] : o.terms) add_term(m, c);
        return *this;
    }
};

inline bool coeff_is_zero(const SignPoly& p) { return p.terms.empty(); }

// E |p|^2 by orthonormality of distinct monomials.
inline double coeff_sq_expectation(const SignPoly& p) {
    KahanSum acc;
    for (const auto& [m, c] : p.terms) acc.add(std::norm(c));
    return acc.value();
}

inline void coeff_scale(SignPoly& p, const Complex& s) {
    if (coeff_is_zero(s)) {
        p.terms.clear();
        return;
    }
    for (auto& [m, c] : p.terms) c *= s;
}

inline SignPoly coeff_scaled(const SignPoly& p, const Complex& s) {
    SignPoly out = p;
    coeff_scale(out, s);
    return out;
}

// p * (scalar * monomial): multiplication by a fixed monomial is a bijection
// on monomials, so terms stay distinct.
inline SignPoly monomial_times(const SignPoly& p, const SignMonomial& m, Complex scalar) {
    SignPoly out;
    for (const auto& [list, c] : p.terms) out.add_term(monomial_product(list, m), c * scalar);
    return out;
}

inline Complex evaluate(const SignPoly& p, const SignBank& bank) {
    Complex z = 0.0;
    for (const auto& [m, c] : p.terms) z += c * monomial_value(m, bank);
    return z;
}

// E p = coefficient of the empty monomial.
inline Complex expectation(const SignPoly& p) {
    auto it = p.terms.find(SignMonomial{});
    return it == p.terms.end() ? Complex(0.0, 0.0) : it->second;
}

// ---------------------------------------------------------------------------
// Density matrices with sign-tracking coefficients
// ---------------------------------------------------------------------------

using TrackedMatrix = DensityMatrixT<SignPoly>;

inline TrackedMatrix to_tracked(const DensityMatrix& m) {
    TrackedMatrix t(m.order, m.box);
    for (const auto& [k, c] : m.coeffs) t.coeffs.emplace(k, SignPoly::constant(c));
    return t;
}

// Realize the symbolic matrix at a concrete sign assignment.
inline DensityMatrix tracked_realize(const TrackedMatrix& t, const SignBank& bank) {
    DensityMatrix m(t.order, t.box);
    for (const auto& [k, p] : t.coeffs) m.accumulate(k, evaluate(p, bank));
    return m;
}

// E over the signs, entry by entry.
inline DensityMatrix tracked_expectation(const TrackedMatrix& t) {
    DensityMatrix m(t.order, t.box);
    for (const auto& [k, p] : t.coeffs) m.accumulate(k, expectation(p));
    return m;
}

} // namespace gph
