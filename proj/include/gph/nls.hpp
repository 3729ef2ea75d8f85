#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <gph/lattice.hpp>
#include <gph/operators.hpp>

namespace gph {

// ---------------------------------------------------------------------------
// Truncated spectral solver for the defocusing cubic NLS
//     i dphi/dt + Laplace phi = |phi|^2 phi
// on the box-truncated Fourier side.  The linear phase is integrated
// exactly (integrating factor); the nonlinear part advances with classical
// RK4, so the scheme is 4th-order in time.  The cubic term is the exact
// truncated convolution: |phi|^2 is formed on the doubled box (equivalent to
// zero-padding, so no aliasing), multiplied by phi, and re-truncated.
// ---------------------------------------------------------------------------

struct NlsState {
    ModeFunction phi;
    double t = 0.0;
};

struct NlsTrajectory {
    LatticeBox box;
    double dt = 0.0;
    bool cubic_on = true;
    std::vector<ModeFunction> states; // states[i] at time i*dt
};

namespace detail {

// dense complex field over a box in lexicographic order, with arithmetic
// indexing
struct Indexer {
    int d, K, span;
    explicit Indexer(const LatticeBox& b) : d(b.d), K(b.K), span(2 * b.K + 1) {}
    int operator()(const Freq& f) const {
        int idx = 0;
        for (int i = 0; i < d; ++i) idx = idx * span + (f.c[i] + K);
        return idx;
    }
    std::size_t size() const {
        std::size_t n = 1;
        for (int i = 0; i < d; ++i) n *= std::size_t(span);
        return n;
    }
};

// (|phi|^2 phi)^ on the truncated box: rho on the doubled box, then one more
// convolution re-truncated to the original box.
inline std::vector<Complex> cubic_term(const LatticeBox& box, const std::vector<Freq>& freqs,
                                       const std::vector<Complex>& phi) {
    const LatticeBox wide(box.d, 2 * box.K);
    const Indexer widx(wide);
    std::vector<Complex> rho(widx.size(), Complex(0.0, 0.0));
    const std::size_t nf = freqs.size();
    for (std::size_t a = 0; a < nf; ++a) {
        if (coeff_is_zero(phi[a])) continue;
        for (std::size_t b = 0; b < nf; ++b) {
            if (coeff_is_zero(phi[b])) continue;
            rho[widx(freqs[a] - freqs[b])] += phi[a] * std::conj(phi[b]);
        }
    }
    std::vector<Complex> out(nf, Complex(0.0, 0.0));
    const Indexer idx(box);
    for (const Freq& mfreq : wide.all()) {
        const Complex r = rho[widx(mfreq)];
        if (coeff_is_zero(r)) continue;
        for (std::size_t c = 0; c < nf; ++c) {
            if (coeff_is_zero(phi[c])) continue;
            const Freq n = mfreq + freqs[c];
            if (!box.contains(n)) continue;
            out[idx(n)] += r * phi[c];
        }
    }
    return out;
}

} // namespace detail

inline NlsTrajectory nls_trajectory(const ModeFunction& phi0, double t_end, double dt,
                                    bool cubic_on = true) {
    if (dt <= 0.0) throw std::invalid_argument("nls_evolve: need dt > 0");
    if (t_end < 0.0) throw std::invalid_argument("nls_evolve: need t_end >= 0");
    const LatticeBox box = phi0.box;
    const std::vector<Freq> freqs = box.all();
    const std::size_t nf = freqs.size();
    const detail::Indexer idx(box);

    const long long steps = std::max(1ll, llround(t_end / dt));
    const double h = t_end > 0.0 ? t_end / double(steps) : dt;

    std::vector<double> lap(nf);
    for (std::size_t i = 0; i < nf; ++i) lap[i] = double(abs2(freqs[i]));

    // v_n(t) = e^{i |n|^2 t} phi_n(t);  dv_n/dt = -i e^{i|n|^2 t} N_n(phi)
    std::vector<Complex> v(nf, Complex(0.0, 0.0));
    for (const auto& [f, c] : phi0.coeffs) v[idx(f)] = c;

    std::vector<Complex> phi(nf), k1(nf), k2(nf), k3(nf), k4(nf), tmp(nf);
    auto slope = [&](double s, const std::vector<Complex>& w, std::vector<Complex>& out) {
        if (!cubic_on) {
            std::fill(out.begin(), out.end(), Complex(0.0, 0.0));
            return;
        }
        for (std::size_t i = 0; i < nf; ++i) phi[i] = std::polar(1.0, -lap[i] * s) * w[i];
        const std::vector<Complex> nl = detail::cubic_term(box, freqs, phi);
        for (std::size_t i = 0; i < nf; ++i)
            out[i] = Complex(0.0, -1.0) * std::polar(1.0, lap[i] * s) * nl[i];
    };

    NlsTrajectory traj;
    traj.box = box;
    traj.dt = h;
    traj.cubic_on = cubic_on;
    auto snapshot = [&](double t) {
        ModeFunction f(box);
        for (std::size_t i = 0; i < nf; ++i)
            f.accumulate(freqs[i], std::polar(1.0, -lap[i] * t) * v[i]);
        traj.states.push_back(std::move(f));
    };

    snapshot(0.0);
    if (t_end == 0.0) return traj;
    for (long long step = 0; step < steps; ++step) {
        const double t = h * double(step);
        slope(t, v, k1);
        for (std::size_t i = 0; i < nf; ++i) tmp[i] = v[i] + 0.5 * h * k1[i];
        slope(t + 0.5 * h, tmp, k2);
        for (std::size_t i = 0; i < nf; ++i) tmp[i] = v[i] + 0.5 * h * k2[i];
        slope(t + 0.5 * h, tmp, k3);
        for (std::size_t i = 0; i < nf; ++i) tmp[i] = v[i] + h * k3[i];
        slope(t + h, tmp, k4);
        for (std::size_t i = 0; i < nf; ++i)
            v[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        snapshot(h * double(step + 1));
    }
    return traj;
}

inline NlsState nls_evolve(const ModeFunction& phi0, double t_end, double dt,
                           bool cubic_on = true) {
    NlsTrajectory traj = nls_trajectory(phi0, t_end, dt, cubic_on);
    return NlsState{traj.states.back(), t_end};
}

// ---------------------------------------------------------------------------
// Residuals coupling the NLS trajectory to the hierarchy
// ---------------------------------------------------------------------------

// (Delta - Delta') as a Fourier multiplier: -(sum |xi_j|^2 - sum |xi'_j|^2).
inline DensityMatrix laplacian_pair(DensityMatrix g) {
    const int d = g.box.d;
    const int order = g.order;
    scale_by_key(g, [&](const Key& k) {
        std::int64_t phase = 0;
        for (int s = 0; s < order; ++s) phase += abs2(key_slot(k, d, order, s, false));
        for (int s = 0; s < order; ++s) phase -= abs2(key_slot(k, d, order, s, true));
        return Complex(-double(phase), 0.0);
    });
    return g;
}

// Max over interior grid times of
//   || i D_t gamma^(k) + (Delta-Delta') gamma^(k) - B^(k+1) gamma^(k+1) ||
// with gamma^(m)(t) = factorized(phi(t), m) and a centered difference D_t.
inline double hierarchy_residual(const NlsTrajectory& traj, int k, std::size_t max_checks = 16) {
    const std::size_t N = traj.states.size();
    if (N < 3) throw std::invalid_argument("hierarchy_residual: need at least 3 grid states");
    const std::size_t interior = N - 2;
    const std::size_t stride = std::max<std::size_t>(1, interior / max_checks);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < N; i += stride) {
        DensityMatrix dgamma = factorized(traj.states[i + 1], k);
        add_scaled(dgamma, factorized(traj.states[i - 1], k), Complex(-1.0, 0.0));
        scale_matrix(dgamma, Complex(0.0, 1.0 / (2.0 * traj.dt))); // i * D_t

        DensityMatrix r = dgamma;
        add_scaled(r, laplacian_pair(factorized(traj.states[i], k)), Complex(1.0, 0.0));
        add_scaled(r, full_collision(factorized(traj.states[i], k + 1)), Complex(-1.0, 0.0));
        worst = std::max(worst, weighted_norm(r, 0.0));
    }
    return worst;
}

struct RandomizedResiduals {
    double nls = 0.0;       // residual of i dpsi/dt + Laplace psi = T^w(|T^w psi|^2 T^w psi)
    double hierarchy = 0.0; // residual of the dependently randomized hierarchy at order k
};

inline RandomizedResiduals randomized_nls_residual(const ModeFunction& phi0,
                                                   const SignField& field, double t_end,
                                                   double dt, int k = 1,
                                                   std::size_t max_checks = 16) {
    const NlsTrajectory traj = nls_trajectory(phi0, t_end, dt, true);
    const std::size_t N = traj.states.size();
    if (N < 3) throw std::invalid_argument("randomized_nls_residual: need at least 3 states");
    const LatticeBox box = traj.box;
    const std::vector<Freq> freqs = box.all();
    const detail::Indexer idx(box);
    const std::size_t nf = freqs.size();

    std::vector<ModeFunction> psi(N);
    for (std::size_t i = 0; i < N; ++i) psi[i] = randomize_function(traj.states[i], field);

    RandomizedResiduals out;
    const std::size_t interior = N - 2;
    const std::size_t stride = std::max<std::size_t>(1, interior / max_checks);
    for (std::size_t i = 1; i + 1 < N; i += stride) {
        // mode-level residual: T^w psi = phi, so the right side is h_n N_n(phi)
        std::vector<Complex> phiv(nf, Complex(0.0, 0.0));
        for (const auto& [f, c] : traj.states[i].coeffs) phiv[idx(f)] = c;
        const std::vector<Complex> nl = detail::cubic_term(box, freqs, phiv);
        KahanSum sq;
        for (std::size_t a = 0; a < nf; ++a) {
            const Freq& n = freqs[a];
            auto at = [&](const ModeFunction& f) {
                auto it = f.coeffs.find(n);
                return it == f.coeffs.end() ? Complex(0.0, 0.0) : it->second;
            };
            const Complex dpsi = (at(psi[i + 1]) - at(psi[i - 1])) / (2.0 * traj.dt);
            const Complex res = Complex(0.0, 1.0) * dpsi - double(abs2(n)) * at(psi[i]) -
                                field(n) * nl[a];
            sq.add(std::norm(res));
        }
        out.nls = std::max(out.nls, std::sqrt(sq.value()));

        // hierarchy-level residual with the randomized full collision
        DensityMatrix dgamma = factorized(psi[i + 1], k);
        add_scaled(dgamma, factorized(psi[i - 1], k), Complex(-1.0, 0.0));
        scale_matrix(dgamma, Complex(0.0, 1.0 / (2.0 * traj.dt)));
        DensityMatrix r = dgamma;
        add_scaled(r, laplacian_pair(factorized(psi[i], k)), Complex(1.0, 0.0));
        add_scaled(r, full_randomized_collision(factorized(psi[i], k + 1), field),
                   Complex(-1.0, 0.0));
        out.hierarchy = std::max(out.hierarchy, weighted_norm(r, 0.0));
    }
    return out;
}

// Empirical oscillation rate of a single evolved mode; for data c*e^{inx}
// the exact rate is |n|^2 + |c|^2.
inline double measure_phase_rate(const Freq& n, Complex c, const LatticeBox& box, double t_end,
                                 double dt) {
    ModeFunction phi0(box);
    phi0.accumulate(n, c);
    const NlsTrajectory traj = nls_trajectory(phi0, t_end, dt, true);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < traj.states.size(); ++i) {
        const Complex a = traj.states[i].coeffs.at(n);
        const Complex b = traj.states[i + 1].coeffs.at(n);
        total += std::arg(b / a);
    }
    return -total / t_end;
}

} // namespace gph
