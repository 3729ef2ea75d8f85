#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <sstream>

#include <gph/lattice.hpp>

using namespace gph;

TEST_CASE("lattice box geometry") {
    LatticeBox b1(1, 4);
    CHECK(b1.size() == 9);
    CHECK(b1.contains(freq(4)));
    CHECK(b1.contains(freq(-4)));
    CHECK(!b1.contains(freq(5)));
    CHECK(!b1.contains(freq(0, 1))); // inactive coordinate must stay zero

    LatticeBox b2(2, 3);
    CHECK(b2.size() == 49);
    auto all = b2.all();
    CHECK(all.size() == 49);
    CHECK(std::is_sorted(all.begin(), all.end()));
    for (const Freq& f : all) CHECK(b2.contains(f));

    LatticeBox b3(3, 1);
    CHECK(b3.size() == 27);

    CHECK_THROWS_AS(LatticeBox(0, 4), std::invalid_argument);
    CHECK_THROWS_AS(LatticeBox(4, 4), std::invalid_argument);
    CHECK_THROWS_AS(LatticeBox(1, -1), std::invalid_argument);
}

TEST_CASE("key slot layout round trip") {
    const int d = 2, order = 3;
    std::vector<Freq> left = {freq(1, -2), freq(0, 3), freq(-3, -3)};
    std::vector<Freq> right = {freq(2, 2), freq(-1, 0), freq(3, 1)};
    Key k = make_key(d, left, right);
    CHECK(k.len == 2 * order * d);
    CHECK(key_order(k, d) == order);
    for (int s = 0; s < order; ++s) {
        CHECK(key_slot(k, d, order, s, false) == left[s]);
        CHECK(key_slot(k, d, order, s, true) == right[s]);
    }
    // capacity guard: order 25 at d=1 needs 50 ints > 48
    std::vector<Freq> big(25, freq(0));
    CHECK_THROWS_AS(make_key(1, big, big), std::invalid_argument);
}

TEST_CASE("weighted norm of a single delta, frozen value") {
    // gamma = delta at (xi; xi') = (2; 1), alpha = 1:
    //   weight = <2>^2 <1>^2 = 5 * 2 = 10, coefficient 1  =>  norm = sqrt(10).
    LatticeBox box(1, 4);
    DensityMatrix m = delta_matrix(box, {freq(2)}, {freq(1)}, Complex(1.0, 0.0));
    CHECK(weighted_norm(m, 1.0) == Catch::Approx(std::sqrt(10.0)).epsilon(1e-15));
    // alpha = 0 ignores the frequencies entirely
    CHECK(weighted_norm(m, 0.0) == Catch::Approx(1.0).epsilon(1e-15));
    // alpha = 0.5: weight = <2><1> = sqrt(5)*sqrt(2) = sqrt(10), norm = 10^(1/4)
    CHECK(weighted_norm(m, 0.5) == Catch::Approx(std::pow(10.0, 0.25)).epsilon(1e-14));
}

TEST_CASE("weighted norm of two deltas, frozen value") {
    // coefficients 1 at (2;1) and 1+i at (0;3), alpha = 0:
    //   sum |c|^2 = 1 + 2 = 3  =>  norm = sqrt(3)
    LatticeBox box(1, 4);
    DensityMatrix m = delta_matrix(box, {freq(2)}, {freq(1)}, Complex(1.0, 0.0));
    m.accumulate(make_key(1, {freq(0)}, {freq(3)}), Complex(1.0, 1.0));
    CHECK(weighted_norm(m, 0.0) == Catch::Approx(std::sqrt(3.0)).epsilon(1e-15));
    // alpha = 1: 10 * 1 + <0>^2 <3>^2 * 2 = 10 + 20 = 30
    CHECK(weighted_norm(m, 1.0) == Catch::Approx(std::sqrt(30.0)).epsilon(1e-15));
}

TEST_CASE("alpha = 0 norm equals plain l2 of coefficients") {
    LatticeBox box(1, 3);
    DensityMatrix m(2, box);
    double direct = 0.0;
    int counter = 0;
    for (int a = -3; a <= 3; a += 2)
        for (int b = -3; b <= 3; b += 3) {
            Complex v(gaussian(7u, counter++), gaussian(7u, counter++));
            m.accumulate(make_key(1, {freq(a), freq(b)}, {freq(b), freq(-a)}), v);
            direct += std::norm(v);
        }
    CHECK(weighted_norm(m, 0.0) == Catch::Approx(std::sqrt(direct)).epsilon(1e-13));
}

TEST_CASE("norm homogeneity and rejection of negative alpha") {
    LatticeBox box(1, 2);
    DensityMatrix m = delta_matrix(box, {freq(1)}, {freq(-2)}, Complex(0.3, -0.4));
    m.accumulate(make_key(1, {freq(0)}, {freq(2)}), Complex(-1.25, 0.5));
    const double n1 = weighted_norm(m, 0.75);
    DensityMatrix scaled = m;
    scale_matrix(scaled, Complex(0.0, -2.0)); // |factor| = 2
    CHECK(weighted_norm(scaled, 0.75) == Catch::Approx(2.0 * n1).epsilon(1e-14));
    CHECK_THROWS_AS(weighted_norm(m, -0.5), std::invalid_argument);
}

TEST_CASE("factorized state norm has the tensor power property") {
    LatticeBox box(1, 4);
    ModeFunction phi(box);
    int counter = 0;
    for (int n : {-3, -1, 0, 2, 4})
        phi.accumulate(freq(n), Complex(gaussian(11u, counter++), gaussian(11u, counter++)));

    for (double alpha : {0.0, 0.5, 1.0}) {
        const double w = weighted_sq_norm(phi, alpha);
        for (int k = 1; k <= 3; ++k) {
            DensityMatrix g = factorized(phi, k);
            CHECK(g.support_size() == std::size_t(std::pow(25.0, k)));
            CHECK(weighted_norm(g, alpha) ==
                  Catch::Approx(std::pow(w, double(k))).epsilon(1e-12));
        }
    }

    // frozen small case: phi = delta_2 + delta_1, k = 1, alpha = 1:
    //   norm = (<2>^2 + <1>^2) = 7
    ModeFunction psi(box);
    psi.accumulate(freq(2), Complex(1.0, 0.0));
    psi.accumulate(freq(1), Complex(1.0, 0.0));
    CHECK(weighted_norm(factorized(psi, 1), 1.0) == Catch::Approx(7.0).epsilon(1e-15));
}

TEST_CASE("exact cancellation keeps the support canonical") {
    LatticeBox box(1, 2);
    DensityMatrix m = delta_matrix(box, {freq(1)}, {freq(0)}, Complex(2.5, -1.0));
    m.accumulate(make_key(1, {freq(2)}, {freq(-1)}), Complex(0.75, 0.0));
    DensityMatrix sum = m;
    add_scaled(sum, m, Complex(-1.0, 0.0));
    CHECK(sum.empty());
    CHECK(sum.support_size() == 0);

    // accumulating an exact zero stores nothing
    DensityMatrix z(1, box);
    z.accumulate(make_key(1, {freq(0)}, {freq(0)}), Complex(0.0, 0.0));
    CHECK(z.empty());
}

TEST_CASE("delta constructor rejects out-of-box frequencies with the coordinate") {
    LatticeBox box(1, 4);
    try {
        delta_matrix(box, {freq(5)}, {freq(0)}, Complex(1.0, 0.0));
        FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("(5)") != std::string::npos);
    }
    CHECK_THROWS_AS(delta_matrix(box, {}, {}, Complex(1.0, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(delta_matrix(box, {freq(1)}, {freq(1), freq(2)}, Complex(1.0, 0.0)),
                    std::invalid_argument);
}

TEST_CASE("serialization round trip is bit exact") {
    LatticeBox box(2, 3);
    DensityMatrix m(2, box);
    int counter = 0;
    for (int i = 0; i < 12; ++i) {
        auto pick = [&] {
            return freq(int(hash_words(99, {std::uint64_t(counter), 1}) % 7) - 3,
                        int(hash_words(99, {std::uint64_t(counter++), 2}) % 7) - 3);
        };
        Complex v(gaussian(13u, counter++) * 1e-3, gaussian(13u, counter++) * 1e7);
        m.accumulate(make_key(2, {pick(), pick()}, {pick(), pick()}), v);
    }
    const std::string text = matrix_to_string(m);
    DensityMatrix back = matrix_from_string(text);
    CHECK(back.order == m.order);
    CHECK(back.box == m.box);
    REQUIRE(back.support_size() == m.support_size());
    for (const auto& [k, v] : m.coeffs) {
        REQUIRE(back.coeffs.count(k) == 1);
        // bit-exact: real and imaginary parts identical
        CHECK(back.coeffs.at(k).real() == v.real());
        CHECK(back.coeffs.at(k).imag() == v.imag());
    }
    CHECK(matrix_to_string(back) == text);
}

TEST_CASE("serialization text format has the documented shape") {
    LatticeBox box(1, 4);
    DensityMatrix m = delta_matrix(box, {freq(2), freq(1)}, {freq(0), freq(3)},
                                   Complex(1.0, -0.5));
    std::string text = matrix_to_string(m);
    CHECK(text == "d=1 K=4 k=2\n2 1 | 0 3 | 1 -0.5\n");
}

TEST_CASE("deserialization validates its input") {
    CHECK_THROWS(matrix_from_string("bogus header\n"));
    // short tuple
    CHECK_THROWS(matrix_from_string("d=1 K=4 k=2\n2 | 0 3 | 1 0\n"));
    // out-of-box frequency
    CHECK_THROWS(matrix_from_string("d=1 K=4 k=1\n9 | 0 | 1 0\n"));
    // missing separator
    CHECK_THROWS(matrix_from_string("d=1 K=4 k=1\n2 0 1 0\n"));
    // well-formed input with repeated key accumulates
    DensityMatrix m = matrix_from_string("d=1 K=4 k=1\n2 | 1 | 1 0\n2 | 1 | 0.5 0\n");
    CHECK(m.support_size() == 1);
    CHECK(m.coeffs.at(make_key(1, {freq(2)}, {freq(1)})).real() == 1.5);
}

TEST_CASE("seed parsing accepts decimal and hex") {
    CHECK(parse_seed("12345") == 12345u);
    CHECK(parse_seed("0xDEADBEEF") == 0xDEADBEEFu);
    CHECK(parse_seed("0x10") == 16u);
    CHECK_THROWS_AS(parse_seed(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_seed("12x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_seed("seed"), std::invalid_argument);
}
