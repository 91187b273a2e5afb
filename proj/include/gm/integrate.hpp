#pragma once

#include "gm/cylinder.hpp"

namespace gm {

// Value of an integer-valued arc function at finite precision: exact, or
// only known to be >= v (v is then level+1).
struct ArcValue {
    int v = 0;
    bool at_least = false;
};

// Arc-wise integrand a * base + b where base is a contact order (mult along
// an ideal), the jacobian order of a morphism, their sum, or zero.
struct Integrand {
    const Scheme* domain = nullptr;
    int a = 1;
    long long b = 0;
    std::vector<Poly> mult_gens;      // contributes a * mult when non-empty
    const Morphism* jac_h = nullptr;  // contributes ord_jac when set

    ArcValue eval(const Ring& ring, std::span<const uint64_t> pt) const;

    static Integrand constant(const Scheme* X, long long b);
    static Integrand mult(const Scheme* X, std::vector<Poly> zgens, int a = 1, long long b = 0);
    static Integrand ordjac(const Morphism* h);
    // alpha on h's target pulled back and combined with ord_jac_h
    static Integrand change_of_variables(const Integrand& alpha, const Morphism& h);
};

// min over the generators of the valuation at the arc; ">= n+1" when every
// generator vanishes at this precision
ArcValue mult_at(const std::vector<Poly>& zgens, const Ring& ring, std::span<const uint64_t> pt);

struct OrdJacResult {
    ArcValue val;
    bool resolved = true;       // false: no projection with finite minor order
    std::vector<int> projection;  // target coordinates used
    std::string note;
};

// Order of the jacobian ideal of h at a level-n source point. The source
// must be declared smooth with an etale coordinate system; the target is
// affine space or a hypersurface / complete intersection.
OrdJacResult ord_jac_at(const Morphism& h, const Ring& ring, std::span<const uint64_t> pt);

// Polynomial generators of the d-th Fitting ideal of the relative
// differentials (the independent route checked against ord_jac_at).
std::vector<Poly> fitting_ideal_gens(const Morphism& h);

struct CompositionReport {
    size_t sampled = 0;
    size_t skipped = 0;  // arcs inside a wild locus at this level
    struct Counterexample {
        std::vector<uint64_t> arc;
        int lhs, rhs_outer, rhs_inner;
    };
    std::vector<Counterexample> counterexamples;
    bool ok() const { return counterexamples.empty(); }
};

// ord_jac(h o g) = ord_jac(h) o g + ord_jac(g) on sampled arcs
CompositionReport composition_check(const Morphism& h, const Morphism& g, int level,
                                    const RingDescriptor& desc, size_t min_samples, uint64_t seed = 17);

struct FiberRow {
    int base_value = 0;   // w with alpha = a*w + b
    RealizedMeasure mu;   // measure of the fiber
    Rational term;        // mu.value * q^{-(a w + b)}
};

struct IntegrateResult {
    RealizedMeasure integral;
    int truncation = -1;  // V
    std::vector<FiberRow> fibers;
    Rational tail_bound;
    bool resolved = true;
    std::optional<MotivicValue> interpolated;  // when every fiber interpolates
    std::vector<std::string> notes;
};

// sum over v of measure(A ∧ alpha^{-1}(v)) q^{-v}, truncated when the
// certified tail is below q^{-(m+2)}
IntegrateResult integrate(const CylinderSpec& A, const Integrand& alpha, int m,
                          const RingDescriptor& desc, LevelCache& cache, const MeasureOpts& opts = {});

struct CovChart {
    const Morphism* h = nullptr;
    CylinderSpec domain;
};

struct CovReport {
    bool pass = false;
    IntegrateResult lhs;
    std::vector<IntegrateResult> rhs;
    Rational rhs_total, rhs_err;
    Rational tolerance;
    bool injective = true;
    bool fibers_ok = true;
    bool covered = true;
    Rational leftover_bound;
    std::vector<std::string> notes;
};

// Change-of-variables verification: integral over A against the sum of
// pulled-back integrals over the chart domains, with extensional injectivity,
// fiber-count and coverage diagnostics at the realization level. wild_gens
// cut the arc set allowed to be missed by the charts (must be negligible).
CovReport cov_check(const std::vector<CovChart>& charts, const CylinderSpec& A,
                    const Integrand& alpha, int m, const RingDescriptor& desc,
                    const std::vector<Poly>& wild_gens, LevelCache& cache,
                    const MeasureOpts& opts = {});

struct RationalFunctionFit {
    std::vector<BigInt> num;  // ascending coefficients in T
    std::vector<BigInt> den;  // den[0] == 1
    bool holdout_checked = false;
    std::string str() const;
};

struct SerreSeries {
    std::vector<BigInt> counts;
    std::vector<Rational> normalized;
    std::optional<RationalFunctionFit> fit;
    std::vector<std::string> notes;
};

// N_n table with the normalized sequence N_n / q^{(n+1)d} and a low-degree
// rational-function fit of sum N_n T^n when one matches exactly
SerreSeries serre_series(const Scheme& X, int n_max, const RingDescriptor& desc,
                         const EnumOpts& opts = {});

}  // namespace gm
