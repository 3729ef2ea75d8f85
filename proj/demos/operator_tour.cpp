// A guided tour of the spectral-space operator set on a tiny torus lattice:
// density matrices as sparse frequency maps, the collision operators, free
// evolution, the fractional derivative weight, and the sign-randomized
// collision with its closed-form average.  Everything prints to stdout.

#include <gph/duhamel.hpp>
#include <gph/ensemble.hpp>
#include <gph/omega.hpp>
#include <gph/operators.hpp>

#include <cstdio>
#include <memory>

using namespace gph;

namespace {

void print_matrix(const char* label, const DensityMatrix& m) {
    std::printf("%s  (order %d, d=%d, K=%d, %zu terms)\n", label, m.order, m.box.d, m.box.K,
                m.coeffs.size());
    for (const Key& key : m.sorted_keys()) {
        std::printf("  (");
        for (int s = 0; s < m.order; ++s)
            std::printf("%s%d", s ? "," : "", key_slot(key, m.box.d, m.order, s, false).c[0]);
        std::printf(" ; ");
        for (int s = 0; s < m.order; ++s)
            std::printf("%s%d", s ? "," : "", key_slot(key, m.box.d, m.order, s, true).c[0]);
        const Complex v = m.coeffs.at(key);
        std::printf(")  ->  %+.6f %+.6fi\n", v.real(), v.imag());
    }
}

} // namespace

int main() {
    // An order-2 delta on the d=1 box {-4..4}: unprimed frequencies (2, 1),
    // primed (0, 3).  The primed side enters every phase with opposite sign.
    LatticeBox box(1, 4);
    DensityMatrix g(2, box);
    g.accumulate(make_key(1, {freq(2), freq(1)}, {freq(0), freq(3)}), Complex(1.0, 0.0));
    print_matrix("initial delta", g);

    // One collision in the plus channel: slot 2 contracts into slot 1, the
    // landing frequency becomes xi_1 + eta - eta' = 2 + 1 - 3 = 0.
    DensityMatrix c = collide(g, CollisionIndex{1, 2, Channel::plus});
    print_matrix("\nafter B+_{1,2}", c);

    // The difference collision B = B+ - B-, composed from the two channels.
    DensityMatrix diff = collide(g, CollisionIndex{1, 2, Channel::plus});
    add_scaled(diff, collide(g, CollisionIndex{1, 2, Channel::minus}), Complex(-1.0, 0.0));
    print_matrix("\nafter B_{1,2} = B+ - B-", diff);

    // Free evolution multiplies each term by a unimodular phase and keeps
    // every weighted norm; the fractional weight scales by the bracket
    // product of all 2k frequencies.
    const DensityMatrix u = free_evolve(g, 0.37);
    std::printf("\nfree evolution t=0.37: |coeff| stays 1 -> %.12f\n",
                std::abs(u.coeffs.begin()->second));
    for (double alpha : {0.0, 0.5, 1.0})
        std::printf("weighted norm alpha=%.1f: before %.6f after %.6f\n", alpha,
                    weighted_norm(g, alpha), weighted_norm(u, alpha));

    // Randomization: every collision summand picks up the product of four
    // signs (landing, old, contracted pair).  Under a constant field the
    // product is +1 and the deterministic operator returns.
    DensityMatrix r = random_ensemble(2, box, 11, Profile::flat(), 6);
    const DensityMatrix det = full_collision(r);
    const DensityMatrix con = full_randomized_collision(r, ConstBank(-1.0), 2);
    DensityMatrix gap = det;
    add_scaled(gap, con, Complex(-1.0, 0.0));
    std::printf("\nconstant-field randomized collision vs deterministic: gap %.3g\n",
                weighted_norm(gap, 0.0));

    // The omega-averaged squared norm has a closed form (even-multiplicity
    // pairing of sign variables); enumeration of all 2^M sign choices
    // confirms it.
    auto shared = std::make_shared<DensityMatrix>(r);
    OmegaBuilder builder;
    builder.numeric = [shared](const SignBank& bank) {
        return full_randomized_collision(*shared, bank, 2);
    };
    builder.tracked = [shared]() { return full_tracked_collision(to_tracked(*shared), 2); };
    std::printf("omega-averaged squared norm: exact %.12f  enumeration %.12f\n",
                omega_averaged_sq_norm(builder, 0.5, OmegaMethod::exact()),
                omega_averaged_sq_norm(builder, 0.5, OmegaMethod::enumeration()));

    // Expansion bookkeeping: after a word of collisions, each surviving slot
    // is a signed sum of top-order frequencies.
    DuhamelWord w{2,
                  {CollisionIndex{1, 2, Channel::plus}, CollisionIndex{2, 3, Channel::minus},
                   CollisionIndex{4, 5, Channel::minus}}};
    ExpansionBookkeeping bk = expansion_bookkeeping(w);
    std::printf("\nthree-step word on base order 2: collided unprimed slot %d, primed slot %d\n",
                bk.collided_unprimed.front(), bk.collided_primed.front());
    std::printf("xi_1 decomposes into %zu signed top-order atoms:", bk.unprimed[0].size());
    for (const SignedAtom& a : bk.unprimed[0])
        std::printf(" %c%s%d", a.coeff > 0 ? '+' : '-', a.primed ? "p" : "u", a.slot);
    std::printf("\n");
    return 0;
}
