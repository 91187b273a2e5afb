#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>

#include "gm/bigint.hpp"

namespace gm {

constexpr int kPrecExact = std::numeric_limits<int>::max();

// Norm in the completed Grothendieck ring: either exactly 2^{log2exp}, or an
// upper bound <= 2^{log2exp} (the value is indistinguishable from 0 at the
// current precision), or exactly zero.
struct NormBound {
    enum class Kind { exact, upper, zero } kind = Kind::zero;
    int log2exp = 0;

    std::string str() const;
};

// A Laurent polynomial in the symbol L carrying a filtration precision:
// the value is known modulo F^prec, i.e. terms at or below L^{-prec} are
// unknown. prec == kPrecExact means the value is exact.
class MotivicValue {
public:
    MotivicValue() = default;
    MotivicValue(long long constant);

    static MotivicValue term(long long coef, int exp, int prec = kPrecExact);
    static MotivicValue L(int exp = 1) { return term(1, exp); }
    static MotivicValue zero_at_precision(int prec);

    int precision() const { return prec_; }
    bool exact() const { return prec_ == kPrecExact; }
    bool no_terms() const { return coef_.empty(); }
    const std::map<int, long long>& coefficients() const { return coef_; }
    long long coefficient(int exp) const;

    MotivicValue operator+(const MotivicValue& o) const;
    MotivicValue operator-(const MotivicValue& o) const;
    MotivicValue operator*(const MotivicValue& o) const;
    MotivicValue operator-() const;
    bool operator==(const MotivicValue& o) const { return prec_ == o.prec_ && coef_ == o.coef_; }

    MotivicValue truncated(int prec) const;

    NormBound norm() const;

    std::string str() const;
    static MotivicValue parse(const std::string& text);

private:
    std::map<int, long long> coef_;
    int prec_ = kPrecExact;

    void normalize();
    int effective_top() const;  // max exponent, or -prec when no terms
};

// Counting realization of a measure: an exact rational with a certified
// error bound |true - value| <= err under the specialization L -> q.
struct RealizedMeasure {
    uint64_t q = 2;
    Rational value;
    Rational err;
    enum class Provenance { exact, stabilized, tail_bounded, unresolved } prov = Provenance::exact;

    bool exact() const { return err.is_zero(); }
    // largest integer e with err <= q^{-e}; nullopt when exact
    std::optional<int> error_exponent() const;
    std::string provenance_str() const;
};

RealizedMeasure specialize(const MotivicValue& a, uint64_t q);

struct GeometricSum {
    MotivicValue truncated;     // scale * sum_{k>=0} L^{r k}, precision m
    MotivicValue numerator;     // scale
    MotivicValue denominator;   // 1 - L^r
};

// scale * sum_{k>=0} L^{rk} truncated at precision m; r must be negative.
GeometricSum geometric_sum(int r, const MotivicValue& scale, int prec);

}  // namespace gm
