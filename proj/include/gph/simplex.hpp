#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include <gph/rng.hpp>

namespace gph {

// ---------------------------------------------------------------------------
// Integration over the time simplex { t >= t_1 >= t_2 >= ... >= t_n >= 0 }
// ---------------------------------------------------------------------------

struct SimplexScheme {
    enum class Kind { product_gauss, montecarlo } kind = Kind::product_gauss;
    int q = 6;          // Gauss-Legendre points per nesting level
    int samples = 0;    // Monte-Carlo sample count
    std::uint64_t seed = 0;

    static SimplexScheme product_gauss(int q = 6) {
        if (q < 1) throw std::invalid_argument("SimplexScheme: need q >= 1");
        return {Kind::product_gauss, q, 0, 0};
    }
    static SimplexScheme montecarlo(int samples, std::uint64_t seed) {
        if (samples < 1) throw std::invalid_argument("SimplexScheme: need samples >= 1");
        return {Kind::montecarlo, 0, samples, seed};
    }
};

// Gauss-Legendre nodes/weights on [0,1], exact for polynomial degree 2q-1.
// Newton iteration on the Legendre recurrence; cached per order.
inline const std::vector<std::pair<double, double>>& gauss_legendre_unit(int q) {
    static std::map<int, std::vector<std::pair<double, double>>> cache;
    auto it = cache.find(q);
    if (it != cache.end()) return it->second;

    std::vector<std::pair<double, double>> rule(q);
    for (int i = 0; i < q; ++i) {
        // Chebyshev-like initial guess on [-1,1]
        double x = std::cos(M_PI * (i + 0.75) / (q + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            if (q == 1) p1 = x; // P_1
            for (int n = 2; n <= q; ++n) {
                const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
                p0 = p1;
                p1 = p2;
            }
            const double pq = (q == 1) ? x : p1;
            const double pqm1 = (q == 1) ? 1.0 : p0;
            dp = q * (x * pq - pqm1) / (x * x - 1.0);
            const double dx = pq / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1,1] -> [0,1]
        rule[i] = {0.5 * (x + 1.0), 0.5 * w};
    }
    return cache.emplace(q, std::move(rule)).first->second;
}

// Visit quadrature nodes (times[0] >= ... >= times[n-1], all in [0, t])
// with weights summing to the simplex volume t^n/n!.
inline void simplex_visit(double t, int n, const SimplexScheme& scheme,
                          const std::function<void(const std::vector<double>&, double)>& visit) {
    if (n < 1) throw std::invalid_argument("simplex_visit: need n >= 1");
    if (t < 0.0) throw std::invalid_argument("simplex_visit: need t >= 0");
    if (t == 0.0) return;

    std::vector<double> times(n);
    if (scheme.kind == SimplexScheme::Kind::product_gauss) {
        const auto& rule = gauss_legendre_unit(scheme.q);
        // nested: times[level] in [0, upper], upper = previous time
        std::function<void(int, double, double)> descend = [&](int level, double upper, double w) {
            for (const auto& [node, weight] : rule) {
                times[level] = upper * node;
                const double w2 = w * upper * weight;
                if (level + 1 == n)
                    visit(times, w2);
                else
                    descend(level + 1, times[level], w2);
            }
        };
        descend(0, t, 1.0);
    } else {
        const double volume = std::pow(t, n) / std::tgamma(double(n) + 1.0);
        const double w = volume / scheme.samples;
        for (int s = 0; s < scheme.samples; ++s) {
            const std::uint64_t h = split_seed(scheme.seed, std::uint64_t(s));
            for (int i = 0; i < n; ++i) times[i] = t * uniform01(hash_words(h, {std::uint64_t(i)}));
            std::sort(times.begin(), times.end(), std::greater<double>());
            visit(times, w);
        }
    }
}

// Scalar/complex-valued simplex integral.
template <class F>
auto simplex_integrate(F&& f, double t, int n, const SimplexScheme& scheme)
    -> decltype(f(std::declval<const std::vector<double>&>())) {
    using V = decltype(f(std::declval<const std::vector<double>&>()));
    V acc{};
    simplex_visit(t, n, scheme,
                  [&](const std::vector<double>& times, double w) { acc += f(times) * w; });
    return acc;
}

} // namespace gph
