#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gm/bigint.hpp"
#include "gm/ring.hpp"

namespace gm {

// Coefficient of one monomial: an exact integer polynomial in the
// uniformizer, sum of c_k * pi^k, keyed by k. No zero entries.
using PiCoef = std::map<uint32_t, BigInt>;

// Flattened evaluation form of a Poly over a fixed ring.
struct CompiledPoly {
    struct Term {
        uint64_t coef;
        std::vector<uint16_t> exps;
    };
    std::vector<Term> terms;

    uint64_t eval(const Ring& ring, std::span<const uint64_t> pt) const;
};

// Exact multivariate polynomial over the base coefficient ring, with the
// uniformizer usable as the literal symbol `pi`. Variables are positional;
// names live in the owning scheme.
class Poly {
public:
    Poly() = default;
    explicit Poly(int nvars) : nvars_(nvars) {}

    static Poly constant(long long c, int nvars);
    static Poly constant_big(const BigInt& c, uint32_t pi_pow, int nvars);
    static Poly variable(int idx, int nvars);
    static Poly pi(int nvars) { return constant_big(BigInt(1), 1, nvars); }

    int nvars() const { return nvars_; }
    bool is_zero() const { return terms_.empty(); }
    size_t term_count() const { return terms_.size(); }

    Poly operator+(const Poly& o) const;
    Poly operator-(const Poly& o) const;
    Poly operator*(const Poly& o) const;
    Poly operator-() const;
    bool operator==(const Poly& o) const { return nvars_ == o.nvars_ && terms_ == o.terms_; }

    Poly derivative(int var) const;

    // substitute images[i] for variable i; images share a common nvars
    Poly subst(const std::vector<Poly>& images) const;

    CompiledPoly compile(const Ring& ring) const;
    uint64_t eval(const Ring& ring, std::span<const uint64_t> pt) const;

    // true when every term vanishes modulo pi (admissibility heuristic input)
    bool zero_mod_pi(uint32_t p) const;

    int total_degree() const;

    std::string render(const std::vector<std::string>& vars) const;

    // Grammar: poly := ['-'] term (('+'|'-') term)*;
    //          term := factor+ with optional '*' separators;
    //          factor := integer | 'pi' ['^' nat] | var ['^' nat]
    // Unknown variables are reported with the offending token.
    static Poly parse(const std::string& text, const std::vector<std::string>& vars);

private:
    int nvars_ = 0;
    std::map<std::vector<uint16_t>, PiCoef> terms_;

    void add_term(const std::vector<uint16_t>& exps, uint32_t pi_pow, const BigInt& c);
    friend Poly det_poly(const std::vector<std::vector<Poly>>& m);
};

// determinant of a square polynomial matrix by Laplace expansion
Poly det_poly(const std::vector<std::vector<Poly>>& m);

}  // namespace gm
