#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <gph/lattice.hpp>

namespace gph {

// ---------------------------------------------------------------------------
// Bernoulli sign fields h_xi in {-1,+1}, indexed by lattice frequencies
// ---------------------------------------------------------------------------

// One sign variable: the value the field with the given tag takes at f.
// Tag 0 is the base field; iterated collision chains tag each level by the
// order of the matrix the collision acts on, so "independent fields per
// level" and "one shared field" differ only in how tags are assigned.
struct SignVar {
    std::uint32_t tag = 0;
    Freq f;
    friend bool operator==(const SignVar&, const SignVar&) = default;
    friend auto operator<=>(const SignVar&, const SignVar&) = default;
};

// i.i.d. +-1 signs realized lazily by a counter-based hash of (seed, coords):
// total, deterministic, thread-safe, defined on the whole lattice.
struct SignField {
    std::uint64_t seed = 0;
    double operator()(const Freq& f) const {
        const std::uint64_t h =
            hash_words(seed, {std::uint64_t(std::uint32_t(f.c[0])),
                              std::uint64_t(std::uint32_t(f.c[1])),
                              std::uint64_t(std::uint32_t(f.c[2]))});
        return (h & 1u) ? -1.0 : 1.0;
    }
};

// A family of sign fields addressed by tag.
class SignBank {
public:
    virtual ~SignBank() = default;
    virtual double sign(const SignVar& v) const = 0;
};

// Every tag resolves to the same hashed field: fully dependent randomization.
class FieldBank final : public SignBank {
    SignField field_;

public:
    explicit FieldBank(std::uint64_t seed) : field_{seed} {}
    explicit FieldBank(const SignField& f) : field_(f) {}
    double sign(const SignVar& v) const override { return field_(v.f); }
};

// Fresh independent field per tag (seeds split off a master seed).
class IndependentBank final : public SignBank {
    std::uint64_t master_;

public:
    explicit IndependentBank(std::uint64_t master) : master_(master) {}
    double sign(const SignVar& v) const override {
        return SignField{split_seed(master_, v.tag)}(v.f);
    }
};

// Explicit per-level seeds; tag t uses seeds[t - first_tag].
class SeedListBank final : public SignBank {
    std::uint32_t first_tag_;
    std::vector<std::uint64_t> seeds_;

public:
    SeedListBank(std::uint32_t first_tag, std::vector<std::uint64_t> seeds)
        : first_tag_(first_tag), seeds_(std::move(seeds)) {}
    double sign(const SignVar& v) const override {
        if (v.tag < first_tag_ || v.tag >= first_tag_ + seeds_.size())
            throw std::out_of_range("SeedListBank: no seed for tag " + std::to_string(v.tag));
        return SignField{seeds_[v.tag - first_tag_]}(v.f);
    }
};

// Constant field (+1 or -1): randomized operators must reduce to the
// deterministic ones under it.
class ConstBank final : public SignBank {
    double value_;

public:
    explicit ConstBank(double value) : value_(value) {
        if (value != 1.0 && value != -1.0)
            throw std::invalid_argument("ConstBank: value must be +1 or -1");
    }
    double sign(const SignVar&) const override { return value_; }
};

// Explicit assignment over a fixed variable list, for exhaustive enumeration
// of all 2^M sign choices.
class TableBank final : public SignBank {
    std::map<SignVar, int> index_;
    std::uint64_t assignment_ = 0;

public:
    explicit TableBank(const std::vector<SignVar>& vars) {
        int i = 0;
        for (const SignVar& v : vars)
            if (!index_.emplace(v, i).second)
                throw std::invalid_argument("TableBank: duplicate sign variable");
            else
                ++i;
        if (index_.size() > 63) throw std::invalid_argument("TableBank: too many variables");
    }
    int size() const { return int(index_.size()); }
    void set_assignment(std::uint64_t bits) { assignment_ = bits; }
    double sign(const SignVar& v) const override {
        auto it = index_.find(v);
        if (it == index_.end())
            throw std::logic_error("TableBank: sign variable was not discovered beforehand");
        return (assignment_ >> it->second) & 1u ? -1.0 : 1.0;
    }
};

// Discovery pass: records every variable a builder queries, answering +1.
class RecordingBank final : public SignBank {
    mutable std::set<SignVar> seen_;

public:
    double sign(const SignVar& v) const override {
        seen_.insert(v);
        return 1.0;
    }
    std::vector<SignVar> variables() const { return {seen_.begin(), seen_.end()}; }
};

// ---------------------------------------------------------------------------
// Expectation of a product of +-1 Bernoulli signs
// ---------------------------------------------------------------------------

// 1 if every distinct variable occurs an even number of times, else 0.
inline int sign_product_expectation(std::vector<SignVar> vars) {
    std::sort(vars.begin(), vars.end());
    std::size_t i = 0;
    while (i < vars.size()) {
        std::size_t j = i;
        while (j < vars.size() && vars[j] == vars[i]) ++j;
        if ((j - i) % 2 != 0) return 0;
        i = j;
    }
    return 1;
}

inline int sign_product_expectation(const std::vector<Freq>& freqs) {
    std::vector<SignVar> vars;
    vars.reserve(freqs.size());
    for (const Freq& f : freqs) vars.push_back(SignVar{0, f});
    return sign_product_expectation(std::move(vars));
}

} // namespace gph
