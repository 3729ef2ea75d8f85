#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include <gph/ensemble.hpp>
#include <gph/lattice.hpp>
#include <gph/operators.hpp>

using namespace gph;

namespace {

// Independent reference for the contraction, written in the gather form:
// for every candidate output key, sum the input coefficients over all
// contracted pairs (eta, eta') in the box, using the substitution rules
//   plus:  xi_j (output) = xi_j (input) + eta - eta'   [input slot j = out - eta + eta']
//   minus: xi'_j (output) = xi'_j (input) - eta + eta' [input slot j = out + eta - eta']
// with (eta, eta') inserted at slot k of both sides.
DensityMatrix collide_reference(const DensityMatrix& in, const CollisionIndex& c) {
    const int d = in.box.d;
    const int m = in.order;
    // candidate outputs: image of the support under the forward map
    std::vector<Key> candidates;
    {
        std::vector<Freq> ou(m - 1), op(m - 1);
        for (const auto& [key, coeff] : in.coeffs) {
            int w = 0;
            for (int s = 0; s < m; ++s) {
                if (s == c.k - 1) continue;
                ou[w] = key_slot(key, d, m, s, false);
                op[w] = key_slot(key, d, m, s, true);
                ++w;
            }
            const Freq eta = key_slot(key, d, m, c.k - 1, false);
            const Freq etap = key_slot(key, d, m, c.k - 1, true);
            if (c.sign == Channel::plus)
                ou[c.j - 1] = ou[c.j - 1] + eta - etap;
            else
                op[c.j - 1] = op[c.j - 1] - eta + etap;
            if (in.box.contains(ou[c.j - 1]) && in.box.contains(op[c.j - 1]))
                candidates.push_back(make_key(d, ou, op));
        }
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    }

    DensityMatrix out(m - 1, in.box);
    std::vector<Freq> iu(m), ip(m);
    for (const Key& okey : candidates) {
        Complex total(0.0, 0.0);
        for (const Freq& eta : in.box.all()) {
            for (const Freq& etap : in.box.all()) {
                // rebuild the input key that maps to okey under (eta, eta')
                int w = 0;
                for (int s = 0; s < m; ++s) {
                    if (s == c.k - 1) {
                        iu[s] = eta;
                        ip[s] = etap;
                        continue;
                    }
                    iu[s] = key_slot(okey, d, m - 1, w, false);
                    ip[s] = key_slot(okey, d, m - 1, w, true);
                    ++w;
                }
                int slot = c.j - 1 + (c.j - 1 >= c.k - 1 ? 1 : 0); // j < k, so just j-1
                if (c.sign == Channel::plus)
                    iu[slot] = iu[slot] - eta + etap;
                else
                    ip[slot] = ip[slot] + eta - etap;
                if (!in.box.contains(iu[slot]) || !in.box.contains(ip[slot])) continue;
                auto it = in.coeffs.find(make_key(d, iu, ip));
                if (it != in.coeffs.end()) total += it->second;
            }
        }
        out.accumulate(okey, total);
    }
    return out;
}

DensityMatrix random_sparse(int order, const LatticeBox& box, std::uint64_t seed,
                            std::size_t support) {
    return random_ensemble(order, box, seed, Profile::flat(), support);
}

bool matrices_close(const DensityMatrix& a, const DensityMatrix& b, double tol) {
    DensityMatrix diff = a;
    add_scaled(diff, b, Complex(-1.0, 0.0));
    const double scale = std::max(weighted_norm(a, 0.0), weighted_norm(b, 0.0));
    return weighted_norm(diff, 0.0) <= tol * std::max(1.0, scale);
}

} // namespace

TEST_CASE("fractional derivative weight on frozen deltas") {
    LatticeBox box(1, 4);
    DensityMatrix m = delta_matrix(box, {freq(2)}, {freq(1)}, Complex(1.0, 0.0));
    DensityMatrix s = apply_fractional_derivative(m, 1.0);
    const Complex v = s.coeffs.at(make_key(1, {freq(2)}, {freq(1)}));
    CHECK(v.real() == Catch::Approx(std::sqrt(5.0) * std::sqrt(2.0)).epsilon(1e-15));
    CHECK(v.imag() == 0.0);

    // alpha = 0 is the identity
    DensityMatrix id = apply_fractional_derivative(m, 0.0);
    CHECK(id.coeffs.at(make_key(1, {freq(2)}, {freq(1)})) == Complex(1.0, 0.0));

    // all-zero frequencies: unchanged at any alpha
    DensityMatrix z = delta_matrix(box, {freq(0), freq(0)}, {freq(0), freq(0)},
                                   Complex(0.5, -0.25));
    DensityMatrix sz = apply_fractional_derivative(z, 1.75);
    CHECK(sz.coeffs.at(make_key(1, {freq(0), freq(0)}, {freq(0), freq(0)})) ==
          Complex(0.5, -0.25));

    // norm identity: || S^a g ||_0 = weighted_norm(g, a)
    DensityMatrix r = random_sparse(2, box, 101, 40);
    CHECK(weighted_norm(apply_fractional_derivative(r, 0.75), 0.0) ==
          Catch::Approx(weighted_norm(r, 0.75)).epsilon(1e-13));
    CHECK_THROWS_AS(apply_fractional_derivative(r, -1.0), std::invalid_argument);
}

TEST_CASE("free evolution phases") {
    LatticeBox box(1, 4);
    // delta at (1;0), t = pi: multiplier exp(-i pi (1-0)) = -1
    DensityMatrix m = delta_matrix(box, {freq(1)}, {freq(0)}, Complex(1.0, 0.0));
    DensityMatrix e = free_evolve(m, M_PI);
    const Complex v = e.coeffs.at(make_key(1, {freq(1)}, {freq(0)}));
    CHECK(v.real() == Catch::Approx(-1.0).epsilon(1e-14));
    CHECK(std::abs(v.imag()) < 1e-14);

    // diagonal keys are fixed points for every t
    DensityMatrix diag = delta_matrix(box, {freq(3)}, {freq(3)}, Complex(0.25, 0.5));
    DensityMatrix ed = free_evolve(diag, 1.7);
    CHECK(ed.coeffs.at(make_key(1, {freq(3)}, {freq(3)})) == Complex(0.25, 0.5));

    // t = 0 identity
    DensityMatrix r = random_sparse(2, box, 33, 30);
    CHECK(matrices_close(free_evolve(r, 0.0), r, 0.0));
}

TEST_CASE("free evolution is unitary and commutes with the derivative weight") {
    LatticeBox box(1, 4);
    DensityMatrix r = random_sparse(2, box, 57, 50);
    for (double alpha : {0.0, 0.5, 1.0})
        CHECK(weighted_norm(free_evolve(r, 0.83), alpha) ==
              Catch::Approx(weighted_norm(r, alpha)).epsilon(1e-13));

    // group law
    CHECK(matrices_close(free_evolve(free_evolve(r, 0.4), 0.35), free_evolve(r, 0.75), 1e-12));

    // S^alpha U(t) = U(t) S^alpha
    DensityMatrix a = apply_fractional_derivative(free_evolve(r, 0.61), 0.5);
    DensityMatrix b = free_evolve(apply_fractional_derivative(r, 0.5), 0.61);
    CHECK(matrices_close(a, b, 1e-13));
}

TEST_CASE("collision on frozen single-mode examples") {
    // plus: gamma^2 = delta (2,1;0,3) under B+_{1,2}: xi_1 = 2 + 1 - 3 = 0,
    // primed side keeps 0 -> delta at (0;0), value 1
    LatticeBox box(1, 4);
    DensityMatrix g = delta_matrix(box, {freq(2), freq(1)}, {freq(0), freq(3)},
                                   Complex(1.0, 0.0));
    DensityMatrix out = collide(g, CollisionIndex{1, 2, Channel::plus});
    REQUIRE(out.order == 1);
    REQUIRE(out.support_size() == 1);
    CHECK(out.coeffs.at(make_key(1, {freq(0)}, {freq(0)})) == Complex(1.0, 0.0));

    // minus: gamma^2 = delta (1,5;2,3) under B-_{1,2}: xi'_1 = 2 - 5 + 3 = 0,
    // unprimed side keeps 1 -> delta at (1;0), value 1
    LatticeBox big(1, 5);
    DensityMatrix h = delta_matrix(big, {freq(1), freq(5)}, {freq(2), freq(3)},
                                   Complex(1.0, 0.0));
    DensityMatrix hout = collide(h, CollisionIndex{1, 2, Channel::minus});
    REQUIRE(hout.support_size() == 1);
    CHECK(hout.coeffs.at(make_key(1, {freq(1)}, {freq(0)})) == Complex(1.0, 0.0));
}

TEST_CASE("collision equals the gather-form reference") {
    // d = 1 at several orders and index choices
    LatticeBox box(1, 2);
    for (int order : {2, 3, 4}) {
        DensityMatrix g = random_sparse(order, box, 7000 + order, 60);
        for (int j = 1; j < order; ++j)
            for (int k = j + 1; k <= order; ++k)
                for (Channel ch : {Channel::plus, Channel::minus}) {
                    CollisionIndex c{j, k, ch};
                    CHECK(matrices_close(collide(g, c), collide_reference(g, c), 1e-13));
                }
    }
    // d = 2
    LatticeBox box2(2, 1);
    DensityMatrix g2 = random_sparse(2, box2, 91, 40);
    for (Channel ch : {Channel::plus, Channel::minus})
        CHECK(matrices_close(collide(g2, CollisionIndex{1, 2, ch}),
                             collide_reference(g2, CollisionIndex{1, 2, ch}), 1e-13));
}

TEST_CASE("collision index validation") {
    LatticeBox box(1, 2);
    DensityMatrix g = random_sparse(2, box, 5, 10);
    CHECK_THROWS_AS(collide(g, CollisionIndex{1, 3, Channel::plus}), std::invalid_argument);
    CHECK_THROWS_AS(collide(g, CollisionIndex{2, 2, Channel::plus}), std::invalid_argument);
    CHECK_THROWS_AS(collide(g, CollisionIndex{0, 2, Channel::plus}), std::invalid_argument);
    DensityMatrix one = delta_matrix(box, {freq(1)}, {freq(0)}, Complex(1.0, 0.0));
    CHECK_THROWS_AS(collide(one, CollisionIndex{1, 2, Channel::plus}), std::invalid_argument);
    try {
        collide(g, CollisionIndex{1, 3, Channel::plus});
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("exceeds") != std::string::npos);
    }
}

TEST_CASE("collision commutation for disjoint index pairs") {
    // c1 = B+_{1,3}, c2 = B-_{2,5} on order 5: after contracting slot 3 the
    // second index shifts to (2,4); after contracting slot 5 the first stays
    // (1,3).  Supports are filtered so no output leaves the box.
    LatticeBox box(1, 1);
    DensityMatrix g(5, box);
    int counter = 0;
    std::uint64_t pick = 0;
    while (g.support_size() < 60 && pick < 4000) {
        std::vector<Freq> left(5), right(5);
        for (int s = 0; s < 5; ++s) {
            left[s] = freq(int(hash_words(17, {pick, std::uint64_t(s), 0}) % 3) - 1);
            right[s] = freq(int(hash_words(17, {pick, std::uint64_t(s), 1}) % 3) - 1);
        }
        ++pick;
        const Freq v1 = left[0] + left[2] - right[2];   // B+_{1,3} landing slot
        const Freq v2 = right[1] - left[4] + right[4];  // B-_{2,5} landing slot
        if (!box.contains(v1) || !box.contains(v2)) continue;
        g.accumulate(make_key(1, left, right),
                     Complex(gaussian(23, counter), gaussian(23, counter + 1)));
        counter += 2;
    }
    REQUIRE(g.support_size() >= 40);

    DensityMatrix path_a = collide(collide(g, CollisionIndex{1, 3, Channel::plus}),
                                   CollisionIndex{2, 4, Channel::minus});
    DensityMatrix path_b = collide(collide(g, CollisionIndex{2, 5, Channel::minus}),
                                   CollisionIndex{1, 3, Channel::plus});
    CHECK(matrices_close(path_a, path_b, 1e-12));
}

TEST_CASE("full collision basics") {
    LatticeBox box(1, 2);
    // k = 1: single difference
    DensityMatrix g = random_sparse(2, box, 301, 40);
    DensityMatrix manual = collide(g, CollisionIndex{1, 2, Channel::plus});
    add_scaled(manual, collide(g, CollisionIndex{1, 2, Channel::minus}), Complex(-1.0, 0.0));
    CHECK(matrices_close(full_collision(g), manual, 1e-14));

    // diagonal single mode: plus and minus terms coincide, difference is empty
    DensityMatrix diag = delta_matrix(box, {freq(1), freq(2)}, {freq(1), freq(2)},
                                      Complex(0.7, 0.1));
    CHECK(full_collision(diag).empty());

    // linearity
    DensityMatrix g2 = random_sparse(2, box, 302, 40);
    DensityMatrix combo = g;
    scale_matrix(combo, Complex(0.3, -0.2));
    add_scaled(combo, g2, Complex(-1.1, 0.6));
    DensityMatrix lhs = full_collision(combo);
    DensityMatrix rhs = full_collision(g);
    scale_matrix(rhs, Complex(0.3, -0.2));
    add_scaled(rhs, full_collision(g2), Complex(-1.1, 0.6));
    CHECK(matrices_close(lhs, rhs, 1e-13));

    DensityMatrix one = delta_matrix(box, {freq(1)}, {freq(0)}, Complex(1.0, 0.0));
    CHECK_THROWS_AS(full_collision(one), std::invalid_argument);
}

TEST_CASE("free evolution of factorized states is factorized") {
    LatticeBox box(1, 3);
    ModeFunction phi(box);
    int counter = 0;
    for (int n : {-2, 0, 1, 3}) {
        const double re = gaussian(71, counter), im = gaussian(71, counter + 1);
        counter += 2;
        phi.accumulate(freq(n), Complex(re, im));
    }
    const double t = 0.37;
    ModeFunction evolved(box);
    for (const auto& [f, c] : phi.coeffs)
        evolved.accumulate(f, std::polar(1.0, -double(abs2(f)) * t) * c);
    for (int k : {1, 2})
        CHECK(matrices_close(free_evolve(factorized(phi, k), t), factorized(evolved, k), 1e-13));
}

TEST_CASE("ensemble generators are deterministic with the documented profiles") {
    LatticeBox box(1, 4);
    DensityMatrix a = random_ensemble(2, box, 99, Profile::decaying(2.0), 50);
    DensityMatrix b = random_ensemble(2, box, 99, Profile::decaying(2.0), 50);
    REQUIRE(a.support_size() == b.support_size());
    for (const auto& [k, v] : a.coeffs) CHECK(b.coeffs.at(k) == v);

    // flat profile over K = 0: exactly one coefficient, at (0;0)
    LatticeBox point(1, 0);
    DensityMatrix p = random_ensemble(1, point, 5, Profile::flat());
    REQUIRE(p.support_size() == 1);
    CHECK(p.coeffs.count(make_key(1, {freq(0)}, {freq(0)})) == 1);

    // decaying envelope: weight at max|xi| = K is <K>^{-beta} of the center
    const Key far = make_key(1, {freq(4)}, {freq(0)});
    const Key center = make_key(1, {freq(0)}, {freq(0)});
    const Profile prof = Profile::decaying(2.0);
    CHECK(profile_weight(prof, far, 1) / profile_weight(prof, center, 1) ==
          Catch::Approx(1.0 / 17.0).epsilon(1e-14));

    // the same key gets the same coefficient under dense and sparse fills
    DensityMatrix dense = random_ensemble(1, box, 99, Profile::flat());
    DensityMatrix sparse = random_ensemble(1, box, 99, Profile::flat(), 20);
    for (const auto& [k, v] : sparse.coeffs) CHECK(dense.coeffs.at(k) == v);
}
