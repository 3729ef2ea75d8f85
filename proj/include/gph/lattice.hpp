#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <gph/rng.hpp>

namespace gph {

using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Frequencies and the truncated lattice
// ---------------------------------------------------------------------------

// A lattice frequency in Z^d, d <= 3.  Coordinates beyond the active
// dimension stay zero so that equality/hash are plain componentwise.
struct Freq {
    std::array<std::int32_t, 3> c{0, 0, 0};
    friend bool operator==(const Freq&, const Freq&) = default;
    friend auto operator<=>(const Freq&, const Freq&) = default;
};

inline Freq freq(int a, int b = 0, int cc = 0) { return Freq{{a, b, cc}}; }

inline Freq operator+(const Freq& a, const Freq& b) {
    return Freq{{a.c[0] + b.c[0], a.c[1] + b.c[1], a.c[2] + b.c[2]}};
}

inline Freq operator-(const Freq& a, const Freq& b) {
    return Freq{{a.c[0] - b.c[0], a.c[1] - b.c[1], a.c[2] - b.c[2]}};
}

inline std::int64_t abs2(const Freq& f) {
    return std::int64_t(f.c[0]) * f.c[0] + std::int64_t(f.c[1]) * f.c[1] +
           std::int64_t(f.c[2]) * f.c[2];
}

// <xi>^2 = 1 + |xi|^2
inline double bracket2(const Freq& f) { return 1.0 + double(abs2(f)); }

struct FreqHash {
    std::size_t operator()(const Freq& f) const {
        std::uint64_t h = 0x243f6a8885a308d3ULL;
        for (int i = 0; i < 3; ++i) h = mix64(h ^ std::uint64_t(std::uint32_t(f.c[i])));
        return std::size_t(h);
    }
};

inline std::string to_string(const Freq& f, int d) {
    std::string s;
    for (int i = 0; i < d; ++i) {
        if (i) s += ' ';
        s += std::to_string(f.c[i]);
    }
    return s;
}

// Truncation |coord| <= K of Z^d.  All operator sums range over a box and
// any output frequency that leaves it is dropped.
struct LatticeBox {
    int d = 1;
    int K = 0;

    LatticeBox() = default;
    LatticeBox(int d_, int K_) : d(d_), K(K_) {
        if (d < 1 || d > 3) throw std::invalid_argument("LatticeBox: dimension must be 1..3");
        if (K < 0) throw std::invalid_argument("LatticeBox: cutoff must be nonnegative");
    }
    friend bool operator==(const LatticeBox&, const LatticeBox&) = default;

    bool contains(const Freq& f) const {
        for (int i = 0; i < d; ++i)
            if (f.c[i] < -K || f.c[i] > K) return false;
        for (int i = d; i < 3; ++i)
            if (f.c[i] != 0) return false;
        return true;
    }

    std::size_t size() const {
        std::size_t n = 1;
        for (int i = 0; i < d; ++i) n *= std::size_t(2 * K + 1);
        return n;
    }

    // All frequencies in lexicographic coordinate order (deterministic).
    std::vector<Freq> all() const {
        std::vector<Freq> out;
        out.reserve(size());
        Freq f;
        const int lo[3] = {-K, d > 1 ? -K : 0, d > 2 ? -K : 0};
        const int hi[3] = {K, d > 1 ? K : 0, d > 2 ? K : 0};
        for (int a = lo[0]; a <= hi[0]; ++a)
            for (int b = lo[1]; b <= hi[1]; ++b)
                for (int cc = lo[2]; cc <= hi[2]; ++cc) {
                    f.c = {a, b, cc};
                    out.push_back(f);
                }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Density-matrix keys: the concatenated 2k-tuple of frequencies
// ---------------------------------------------------------------------------

// Fixed-capacity flattened key (no heap traffic in the collision kernels).
// Capacity 48 ints covers order 8 at d = 3 and order 24 at d = 1, far beyond
// desk scale.
inline constexpr int key_capacity = 48;

struct Key {
    std::array<std::int32_t, key_capacity> v{}; // zero beyond len
    std::uint8_t len = 0;                       // used ints = 2 * order * d

    friend bool operator==(const Key& a, const Key& b) { return a.len == b.len && a.v == b.v; }
    friend bool operator<(const Key& a, const Key& b) {
        if (a.len != b.len) return a.len < b.len;
        return a.v < b.v;
    }
};

struct KeyHash {
    std::size_t operator()(const Key& k) const {
        std::uint64_t h = 0x452821e638d01377ULL ^ k.len;
        for (int i = 0; i < k.len; ++i) h = mix64(h ^ std::uint64_t(std::uint32_t(k.v[i])));
        return std::size_t(h);
    }
};

inline int key_order(const Key& k, int d) { return int(k.len) / (2 * d); }

// Slot layout: unprimed slots 0..order-1 then primed slots 0..order-1,
// each occupying d consecutive ints.
inline Freq key_slot(const Key& k, int d, int order, int slot, bool primed) {
    Freq f;
    const int base = ((primed ? order : 0) + slot) * d;
    for (int i = 0; i < d; ++i) f.c[i] = k.v[base + i];
    return f;
}

inline void set_key_slot(Key& k, int d, int order, int slot, bool primed, const Freq& f) {
    const int base = ((primed ? order : 0) + slot) * d;
    for (int i = 0; i < d; ++i) k.v[base + i] = f.c[i];
}

inline Key make_key(int d, const std::vector<Freq>& left, const std::vector<Freq>& right) {
    if (left.size() != right.size())
        throw std::invalid_argument("make_key: unprimed/primed tuple lengths differ");
    const int order = int(left.size());
    if (2 * order * d > key_capacity)
        throw std::invalid_argument("make_key: order exceeds key capacity at this dimension");
    Key k;
    k.len = std::uint8_t(2 * order * d);
    for (int s = 0; s < order; ++s) set_key_slot(k, d, order, s, false, left[s]);
    for (int s = 0; s < order; ++s) set_key_slot(k, d, order, s, true, right[s]);
    return k;
}

// ---------------------------------------------------------------------------
// Coefficient traits: plain complex values (the symbolic sign-tracking
// coefficient in sign_poly.hpp provides the same hooks)
// ---------------------------------------------------------------------------

inline bool coeff_is_zero(const Complex& z) { return z.real() == 0.0 && z.imag() == 0.0; }

// E|coefficient|^2 over the sign ensemble; for a plain value just |z|^2.
inline double coeff_sq_expectation(const Complex& z) { return std::norm(z); }

inline void coeff_scale(Complex& z, const Complex& s) { z *= s; }

inline Complex coeff_scaled(const Complex& z, const Complex& s) { return z * s; }

// ---------------------------------------------------------------------------
// The sparse Fourier-side density matrix
// ---------------------------------------------------------------------------

template <class C>
struct DensityMatrixT {
    int order = 1;
    LatticeBox box;
    std::unordered_map<Key, C, KeyHash> coeffs;

    DensityMatrixT() = default;
    DensityMatrixT(int order_, const LatticeBox& box_) : order(order_), box(box_) {
        if (order < 1) throw std::invalid_argument("DensityMatrixT: order must be >= 1");
        if (2 * order * box.d > key_capacity)
            throw std::invalid_argument("DensityMatrixT: order exceeds key capacity");
    }

    bool empty() const { return coeffs.empty(); }
    std::size_t support_size() const { return coeffs.size(); }

    // Add into the sparse map; exact zeros are never stored.
    void accumulate(const Key& k, const C& c) {
        if (coeff_is_zero(c)) return;
        auto [it, inserted] = coeffs.try_emplace(k, c);
        if (!inserted) {
            it->second += c;
            if (coeff_is_zero(it->second)) coeffs.erase(it);
        }
    }

    std::vector<Key> sorted_keys() const {
        std::vector<Key> ks;
        ks.reserve(coeffs.size());
        for (const auto& [k, c] : coeffs) ks.push_back(k);
        std::sort(ks.begin(), ks.end());
        return ks;
    }
};

using DensityMatrix = DensityMatrixT<Complex>;

template <class C>
void add_scaled(DensityMatrixT<C>& dst, const DensityMatrixT<C>& src, const Complex& factor) {
    if (dst.order != src.order || !(dst.box == src.box))
        throw std::invalid_argument("add_scaled: order/box mismatch");
    if (coeff_is_zero(factor)) return;
    for (const auto& [k, c] : src.coeffs) dst.accumulate(k, coeff_scaled(c, factor));
}

template <class C>
void scale_matrix(DensityMatrixT<C>& m, const Complex& factor) {
    if (coeff_is_zero(factor)) {
        m.coeffs.clear();
        return;
    }
    for (auto& [k, c] : m.coeffs) coeff_scale(c, factor);
}

// Multiply every coefficient by a key-dependent scalar (weights, phases).
template <class C, class F>
void scale_by_key(DensityMatrixT<C>& m, F&& multiplier) {
    for (auto& [k, c] : m.coeffs) coeff_scale(c, multiplier(k));
}

// ---------------------------------------------------------------------------
// Weighted norms:  || S^(k,alpha) gamma ||_{L^2}
// ---------------------------------------------------------------------------

struct KahanSum {
    double s = 0.0, c = 0.0;
    void add(double x) {
        const double y = x - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    double value() const { return s; }
};

// Product over all 2k slots of <xi>^{2 alpha}.
inline double key_weight(const Key& k, int d, double alpha) {
    if (alpha == 0.0) return 1.0;
    double w = 1.0;
    Freq f;
    for (int base = 0; base < k.len; base += d) {
        for (int i = 0; i < d; ++i) f.c[i] = k.v[base + i];
        for (int i = d; i < 3; ++i) f.c[i] = 0;
        w *= std::pow(bracket2(f), alpha);
    }
    return w;
}

// Sum of key weights times E|coefficient|^2, accumulated in sorted key order
// with compensated summation (deterministic, stable against many small terms).
template <class C>
double weighted_sq_norm(const DensityMatrixT<C>& m, double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("weighted_sq_norm: alpha must be >= 0");
    KahanSum acc;
    for (const Key& k : m.sorted_keys())
        acc.add(key_weight(k, m.box.d, alpha) * coeff_sq_expectation(m.coeffs.at(k)));
    return acc.value();
}

template <class C>
double weighted_norm(const DensityMatrixT<C>& m, double alpha) {
    return std::sqrt(weighted_sq_norm(m, alpha));
}

inline double l2_distance(const DensityMatrix& a, const DensityMatrix& b) {
    DensityMatrix diff = a;
    add_scaled(diff, b, Complex(-1.0, 0.0));
    return weighted_norm(diff, 0.0);
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

inline DensityMatrix delta_matrix(const LatticeBox& box, const std::vector<Freq>& left,
                                  const std::vector<Freq>& right, Complex value) {
    const int order = int(left.size());
    if (order < 1 || right.size() != left.size())
        throw std::invalid_argument("delta_matrix: need equal-length nonempty frequency tuples");
    for (const auto* side : {&left, &right})
        for (const Freq& f : *side)
            if (!box.contains(f))
                throw std::invalid_argument("delta_matrix: frequency (" + to_string(f, box.d) +
                                            ") outside the lattice box");
    DensityMatrix m(order, box);
    m.accumulate(make_key(box.d, left, right), value);
    return m;
}

// ---------------------------------------------------------------------------
// Single-particle mode functions (Fourier coefficients of phi)
// ---------------------------------------------------------------------------

struct ModeFunction {
    LatticeBox box;
    std::unordered_map<Freq, Complex, FreqHash> coeffs;

    ModeFunction() = default;
    explicit ModeFunction(const LatticeBox& box_) : box(box_) {}

    void accumulate(const Freq& f, Complex v) {
        if (coeff_is_zero(v)) return;
        if (!box.contains(f))
            throw std::invalid_argument("ModeFunction: frequency (" + to_string(f, box.d) +
                                        ") outside the lattice box");
        auto [it, inserted] = coeffs.try_emplace(f, v);
        if (!inserted) {
            it->second += v;
            if (coeff_is_zero(it->second)) coeffs.erase(it);
        }
    }

    bool empty() const { return coeffs.empty(); }
    std::size_t support_size() const { return coeffs.size(); }

    std::vector<Freq> sorted_support() const {
        std::vector<Freq> fs;
        fs.reserve(coeffs.size());
        for (const auto& [f, v] : coeffs) fs.push_back(f);
        std::sort(fs.begin(), fs.end());
        return fs;
    }
};

inline double weighted_sq_norm(const ModeFunction& phi, double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("weighted_sq_norm: alpha must be >= 0");
    KahanSum acc;
    for (const Freq& f : phi.sorted_support())
        acc.add(std::pow(bracket2(f), alpha) * std::norm(phi.coeffs.at(f)));
    return acc.value();
}

inline double weighted_norm(const ModeFunction& phi, double alpha) {
    return std::sqrt(weighted_sq_norm(phi, alpha));
}

// Pure-state density matrix |phi><phi|^{tensor k}:
//   gamma_hat(xi_1..xi_k; xi'_1..xi'_k) = prod_j phi_hat(xi_j) conj(phi_hat(xi'_j)).
inline DensityMatrix factorized(const ModeFunction& phi, int order) {
    DensityMatrix m(order, phi.box);
    const std::vector<Freq> support = phi.sorted_support();
    if (support.empty()) return m;

    std::vector<Freq> left(order), right(order);
    std::vector<int> idx(2 * order, 0);
    const int n = int(support.size());
    while (true) {
        Complex v(1.0, 0.0);
        for (int s = 0; s < order; ++s) {
            left[s] = support[idx[s]];
            v *= phi.coeffs.at(left[s]);
        }
        for (int s = 0; s < order; ++s) {
            right[s] = support[idx[order + s]];
            v *= std::conj(phi.coeffs.at(right[s]));
        }
        m.accumulate(make_key(phi.box.d, left, right), v);
        int pos = 2 * order - 1;
        while (pos >= 0 && ++idx[pos] == n) idx[pos--] = 0;
        if (pos < 0) break;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Line-oriented text serialization (bit-exact round trip)
// ---------------------------------------------------------------------------

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Header `d=<d> K=<K> k=<order>`, then one line per coefficient:
//   xi_1 .. xi_k | xi'_1 .. xi'_k | re im
// with frequencies flattened to d integers each, keys sorted.
inline void write_matrix(std::ostream& os, const DensityMatrix& m) {
    os << "d=" << m.box.d << " K=" << m.box.K << " k=" << m.order << "\n";
    for (const Key& k : m.sorted_keys()) {
        const Complex& z = m.coeffs.at(k);
        for (int s = 0; s < m.order; ++s) {
            if (s) os << ' ';
            os << to_string(key_slot(k, m.box.d, m.order, s, false), m.box.d);
        }
        os << " | ";
        for (int s = 0; s < m.order; ++s) {
            if (s) os << ' ';
            os << to_string(key_slot(k, m.box.d, m.order, s, true), m.box.d);
        }
        os << " | " << format_double(z.real()) << ' ' << format_double(z.imag()) << "\n";
    }
}

inline DensityMatrix read_matrix(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("read_matrix: missing header line");
    int d = 0, K = -1, order = 0;
    if (std::sscanf(line.c_str(), "d=%d K=%d k=%d", &d, &K, &order) != 3)
        throw std::runtime_error("read_matrix: malformed header: " + line);
    DensityMatrix m(order, LatticeBox(d, K));

    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<Freq> left(order), right(order);
        std::string tok;
        auto read_side = [&](std::vector<Freq>& side) {
            for (int s = 0; s < order; ++s)
                for (int i = 0; i < d; ++i)
                    if (!(ls >> side[s].c[i]))
                        throw std::runtime_error("read_matrix: short frequency tuple at line " +
                                                 std::to_string(lineno));
        };
        read_side(left);
        if (!(ls >> tok) || tok != "|")
            throw std::runtime_error("read_matrix: expected '|' at line " + std::to_string(lineno));
        read_side(right);
        if (!(ls >> tok) || tok != "|")
            throw std::runtime_error("read_matrix: expected '|' at line " + std::to_string(lineno));
        double re = 0, im = 0;
        if (!(ls >> re >> im))
            throw std::runtime_error("read_matrix: malformed coefficient at line " +
                                     std::to_string(lineno));
        for (const Freq& f : left)
            if (!m.box.contains(f))
                throw std::runtime_error("read_matrix: frequency outside box at line " +
                                         std::to_string(lineno));
        for (const Freq& f : right)
            if (!m.box.contains(f))
                throw std::runtime_error("read_matrix: frequency outside box at line " +
                                         std::to_string(lineno));
        m.accumulate(make_key(d, left, right), Complex(re, im));
    }
    return m;
}

inline std::string matrix_to_string(const DensityMatrix& m) {
    std::ostringstream os;
    write_matrix(os, m);
    return os.str();
}

inline DensityMatrix matrix_from_string(const std::string& s) {
    std::istringstream is(s);
    return read_matrix(is);
}

} // namespace gph
