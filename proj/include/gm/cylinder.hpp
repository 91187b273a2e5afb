#pragma once

#include <memory>
#include <optional>

#include "gm/levels.hpp"
#include "gm/motivic.hpp"

namespace gm {

// Atomic valuation constraint ord(g) ⋈ c on arcs of the ambient scheme.
struct CylAtom {
    Poly g;
    enum class Op { eq, ge, le } op = Op::eq;
    int bound = 0;
    bool inf = false;  // ord(g) >= infinity; marks a pro-cylinder
};

class CylinderSpec {
public:
    static CylinderSpec full(const Scheme* X);
    static CylinderSpec atom(const Scheme* X, Poly g, CylAtom::Op op, int c);
    static CylinderSpec atom_inf(const Scheme* X, Poly g);

    const Scheme* scheme() const { return X_; }
    bool valid() const { return X_ != nullptr; }

    // minimal level at which membership is determined
    int rank() const;
    bool pro_cylinder() const;

    bool eval(const Ring& ring, std::span<const uint64_t> pt) const;

    std::string str() const;
    // grammar: expr := or; or := and ('||' and)*; and := unary ('&&' unary)*;
    // unary := '!' unary | '(' expr ')' | 'full' | 'empty'
    //        | 'ord(' poly ')' ('=='|'='|'>='|'<=') (nat|'inf')
    static CylinderSpec parse(const std::string& text, const Scheme* X);

    // structural pullback along a morphism into this spec's scheme: every
    // atom polynomial is composed with the coordinate map (rank-preserving:
    // same rank, same bounds)
    CylinderSpec pullback(const Morphism& h) const;

    friend CylinderSpec spec_and(const CylinderSpec& a, const CylinderSpec& b);
    friend CylinderSpec spec_or(const CylinderSpec& a, const CylinderSpec& b);
    friend CylinderSpec spec_not(const CylinderSpec& a);
    friend class CompiledSpec;

private:
    struct Node {
        enum class Kind { atom, conj, disj, neg, full } kind = Kind::full;
        CylAtom atom;
        std::vector<std::shared_ptr<const Node>> kids;
    };
    const Scheme* X_ = nullptr;
    std::shared_ptr<const Node> root_;

    static int node_rank(const Node& n);
    static bool node_pro(const Node& n);
    static bool node_eval(const Node& n, const Ring& ring, std::span<const uint64_t> pt);
    static void node_str(const Node& n, const std::vector<std::string>& vars, std::string& out);
};

// Evaluation form of a spec with atom polynomials compiled once per ring
// level (specs are evaluated millions of times inside scans).
class CompiledSpec {
public:
    explicit CompiledSpec(CylinderSpec spec);
    bool eval(const Ring& ring, std::span<const uint64_t> pt) const;
    const CylinderSpec& spec() const { return spec_; }

private:
    struct FlatNode {
        CylinderSpec::Node::Kind kind;
        CylAtom::Op op = CylAtom::Op::eq;
        int bound = 0;
        int atom_idx = -1;
        std::vector<int> kids;
    };
    CylinderSpec spec_;
    std::vector<FlatNode> nodes_;          // nodes_[0] is the root
    std::vector<const Poly*> atom_polys_;  // point into spec_'s shared nodes
    mutable std::shared_ptr<std::map<uint64_t, std::vector<CompiledPoly>>> per_level_;

    int flatten(const CylinderSpec::Node& n);
    bool eval_node(int idx, const Ring& ring, const std::vector<CompiledPoly>& progs,
                   std::span<const uint64_t> pt) const;
};

CylinderSpec spec_and(const CylinderSpec& a, const CylinderSpec& b);
CylinderSpec spec_or(const CylinderSpec& a, const CylinderSpec& b);
CylinderSpec spec_not(const CylinderSpec& a);

// ord(g) >= v for every generator (at_least), or exactly min over the
// generators == v; v < 0 is refused. The infinite fiber is a pro-cylinder.
CylinderSpec mult_level_set(const Scheme& X, const std::vector<Poly>& zgens, int v, bool at_least);
CylinderSpec mult_level_set_inf(const Scheme& X, const std::vector<Poly>& zgens);

// A realized cylinder: the explicit member list of a level-n constructible
// set, saturated by construction when it comes from a spec of rank <= n.
struct Cylinder {
    std::optional<CylinderSpec> spec;  // absent for extensional (image) cylinders
    const Scheme* X = nullptr;
    RingDescriptor desc;
    int level = 0;
    LevelSet members;
};

// Shared enumeration cache; measure and integration reuse level sets.
class LevelCache {
public:
    const LevelSet& get(const Scheme& X, const RingDescriptor& desc, int level, const EnumOpts& opts);
    void clear() { sets_.clear(); }

private:
    struct Key {
        const Scheme* X;
        RingKind kind;
        uint32_t p, f;
        int level;
        bool operator<(const Key& o) const {
            return std::tie(X, kind, p, f, level) < std::tie(o.X, o.kind, o.p, o.f, o.level);
        }
    };
    std::map<Key, LevelSet> sets_;
};

Cylinder realize(const CylinderSpec& spec, int level, const RingDescriptor& desc, LevelCache& cache,
                 const EnumOpts& opts = {});

// re-realize at a higher level; extensional cylinders are promoted through
// the saturation property
Cylinder promote(const Cylinder& c, int level, LevelCache& cache, const EnumOpts& opts = {});

Cylinder cyl_and(const Cylinder& a, const Cylinder& b, LevelCache& cache, const EnumOpts& opts = {});
Cylinder cyl_or(const Cylinder& a, const Cylinder& b, LevelCache& cache, const EnumOpts& opts = {});
Cylinder cyl_not(const Cylinder& a, LevelCache& cache, const EnumOpts& opts = {});

// Gr^{(e)}: arcs whose contact order with the singular locus is at most e.
CylinderSpec gr_e_spec(const Scheme& X, int e);
Cylinder gr_e(const Scheme& X, int e, int level, const RingDescriptor& desc, LevelCache& cache,
              const EnumOpts& opts = {});

Cylinder preimage(const Morphism& h, const Cylinder& A, LevelCache& cache, const EnumOpts& opts = {});

struct ImageResult {
    Cylinder image;
    int jac_order = 0;
    bool saturated = false;
    std::string note;
};

// h(B) with the saturation test at level+1; throws level-too-low when the
// image is not saturated at B's realization level.
ImageResult image_cylinder(const Morphism& h, const Cylinder& B, int jac_order, int gr_level,
                           LevelCache& cache, const EnumOpts& opts = {});

// ---- measure ----

struct MeasureOpts {
    int target_error = 4;  // certified error exponent target
    int max_level = 14;
    EnumOpts enum_opts;
    bool interpolate = false;
    int interp_smax = 4;
};

struct PiCount {
    BigInt count;
    int level = 0;
    int horizon = 0;  // realization level used for the image
    bool certified = false;
};

// |pi_n(arc set)| via realize-at-horizon-and-truncate; the horizon escalates
// until the image count stabilizes (immediately for smooth schemes). pred
// restricts membership; it must be determined at level min_det.
PiCount count_pi(const Scheme& X, const RingDescriptor& desc, int n,
                 const std::function<bool(const Ring&, std::span<const uint64_t>)>& pred, int min_det,
                 LevelCache& cache, const MeasureOpts& opts);

struct MeasureCertificate {
    int gr_split = -1;                                  // E of the stable/remainder split
    int stable_level = -1;                              // n of the certified ratio
    int lift_horizon = -1;                              // realization level used
    std::vector<std::pair<int, BigInt>> stable_counts;  // (level, |pi_n|)
    Rational remainder_bound;
    Rational slack_C;  // remainder_bound * q^{E+1}
    std::vector<std::string> notes;
};

struct MeasureResult {
    RealizedMeasure measure;
    std::optional<MotivicValue> interpolated;
    MeasureCertificate cert;
    bool resolved = true;
    Rational interval_lo, interval_hi;  // meaningful when !resolved
};

MeasureResult measure_spec(const CylinderSpec& A, const RingDescriptor& desc, LevelCache& cache,
                           const MeasureOpts& opts = {});

// measure with an extra extensional restriction (used for integrand fibers)
MeasureResult measure_pred(const CylinderSpec& A, const RingDescriptor& desc,
                           const std::function<bool(const Ring&, std::span<const uint64_t>)>& pred,
                           int pred_det_level, LevelCache& cache, const MeasureOpts& opts);

// Fit an integer Laurent polynomial in q consistent with exact values over
// the residue extensions s = 1..smax (value_at returns nullopt when a sample
// is unavailable). The window of candidate exponents slides down from
// top_start; results are "consistent on the sampled extensions" only.
std::optional<MotivicValue> interpolate_laurent(
    const RingDescriptor& base, int smax, int top_start, int window_floor,
    const std::function<std::optional<Rational>(const RingDescriptor&)>& value_at);

// ---- negligibility ----

struct NegligibleRow {
    int e = 0;
    int gamma_level = 0;  // empirical Greenberg level for the tube
    int n = 0;            // level of the counted image
    BigInt count;
    Rational normalized;
    Rational bound;  // C * q^{-(e+1)}
    bool ok = false;
};

struct NegligibleCertificate {
    std::vector<NegligibleRow> rows;
    Rational calibrated_C;
    bool ok = false;
    std::string note;
};

// Realized decay bound for the tube around Gr(Z), Z given by extra
// generators cutting a smaller-dimensional closed subscheme.
NegligibleCertificate negligible(const Scheme& X, const std::vector<Poly>& zgens, int e_max,
                                 const RingDescriptor& desc, LevelCache& cache,
                                 const MeasureOpts& opts = {});

}  // namespace gm
