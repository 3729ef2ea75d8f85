#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <gph/lattice.hpp>
#include <gph/sign_field.hpp>
#include <gph/sign_poly.hpp>

namespace gph {

// ---------------------------------------------------------------------------
// Averaging E_omega || S^alpha . ||^2 over the sign ensemble
//
// Three interchangeable methods:
//   exact        — symbolic sign tracking + the even-multiplicity rule
//                  (orthonormal monomials); no variable-count limit.
//   enumeration  — brute force over all 2^M assignments of the M distinct
//                  sign variables the builder queries; the test oracle.
//   montecarlo   — sample mean over hashed sign fields.
// ---------------------------------------------------------------------------

enum class OmegaKind { exact, enumeration, montecarlo };

struct OmegaMethod {
    OmegaKind kind = OmegaKind::exact;
    int samples = 0;
    std::uint64_t seed = 0;

    static OmegaMethod exact() { return {OmegaKind::exact, 0, 0}; }
    static OmegaMethod enumeration() { return {OmegaKind::enumeration, 0, 0}; }
    static OmegaMethod montecarlo(int samples, std::uint64_t seed) {
        if (samples < 1) throw std::invalid_argument("montecarlo: need samples >= 1");
        return {OmegaKind::montecarlo, samples, seed};
    }
};

// A randomized matrix, presented both ways: a numeric realization per sign
// bank and the symbolic form carrying its sign monomials.
struct OmegaBuilder {
    std::function<DensityMatrix(const SignBank&)> numeric;
    std::function<TrackedMatrix()> tracked;
};

inline constexpr int enumeration_capacity = 24;

inline double omega_averaged_sq_norm(const OmegaBuilder& builder, double alpha,
                                     const OmegaMethod& method) {
    switch (method.kind) {
    case OmegaKind::exact:
        return weighted_sq_norm(builder.tracked(), alpha);

    case OmegaKind::enumeration: {
        RecordingBank recorder;
        (void)builder.numeric(recorder);
        const std::vector<SignVar> vars = recorder.variables();
        const int M = int(vars.size());
        if (M > enumeration_capacity)
            throw std::runtime_error(
                "enumeration over " + std::to_string(M) +
                " sign variables exceeds the capacity of " +
                std::to_string(enumeration_capacity) + "; use the montecarlo method");
        TableBank table(vars);
        KahanSum acc;
        const std::uint64_t total = std::uint64_t(1) << M;
        for (std::uint64_t bits = 0; bits < total; ++bits) {
            table.set_assignment(bits);
            acc.add(weighted_sq_norm(builder.numeric(table), alpha));
        }
        return acc.value() / double(total);
    }

    case OmegaKind::montecarlo: {
        KahanSum acc;
        for (int s = 0; s < method.samples; ++s) {
            IndependentBank bank(split_seed(method.seed, std::uint64_t(s)));
            acc.add(weighted_sq_norm(builder.numeric(bank), alpha));
        }
        return acc.value() / double(method.samples);
    }
    }
    throw std::logic_error("omega_averaged_sq_norm: unknown method");
}

} // namespace gph
