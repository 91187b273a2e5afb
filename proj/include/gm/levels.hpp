#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gm/scheme.hpp"

namespace gm {

struct EnumOpts {
    uint64_t budget = default_enumeration_budget();
    int threads = 1;
};

// The finite set Gr_n(X)(F) = X(R_{n,F}), stored flat with stride nvars in
// canonical order (lexicographic on the code tuple).
struct LevelSet {
    const Scheme* X = nullptr;
    RingDescriptor desc;
    int level = 0;
    int nvars = 0;
    std::vector<uint64_t> flat;

    size_t size() const { return nvars ? flat.size() / nvars : 0; }
    std::span<const uint64_t> point(size_t i) const {
        return std::span<const uint64_t>(flat.data() + i * nvars, nvars);
    }
    bool contains(std::span<const uint64_t> pt) const;
};

// Exactly the solution set of the generators over R_{n,F}, deterministic
// order. Throws a budget error when q^{(n+1)N} exceeds opts.budget.
LevelSet enumerate_level(const Scheme& X, const Ring& ring, const EnumOpts& opts = {});

// Enumerate but keep only points satisfying pred (evaluated on candidates
// that already satisfy the generators).
LevelSet enumerate_level_filtered(const Scheme& X, const Ring& ring, const EnumOpts& opts,
                                  const std::function<bool(std::span<const uint64_t>)>& pred);

struct CountResult {
    BigInt value;
    enum class Provenance { enumerated, smooth_scaled } provenance = Provenance::enumerated;
    std::optional<std::string> diagnostic;  // dimension-inconsistency etc.
};

// |Gr_n(X)(F)| without storing points. Falls back to N_0 * q^{n d} for
// declared-smooth schemes when enumeration at level n is infeasible.
CountResult count_level(const Scheme& X, const RingDescriptor& desc, int n, const EnumOpts& opts = {});

struct TruncateResult {
    LevelSet image;
    std::vector<uint64_t> fiber_sizes;  // aligned with image points
};

TruncateResult truncate_set(const LevelSet& S, int target_level);

// A reduce-compatible tower of approximations to one arc.
struct ArcApproximation {
    RingDescriptor desc;
    std::vector<std::pair<int, std::vector<uint64_t>>> levels;  // ascending

    bool compatible() const;
};

struct HenselFailure {
    ErrClass cls;
    std::string message;
};

struct HenselResult {
    std::vector<uint64_t> point;  // at the target level
    int jac_order = 0;            // e used
    std::optional<HenselFailure> failure;
    bool ok() const { return !failure.has_value(); }
};

// Lift a level-n solution to an exact level-m solution by digit-wise Newton
// steps on the minimal-valuation maximal minor. Requires the minor order e
// to satisfy n >= 2e; agrees with z at level n - e.
HenselResult hensel_lift_point(const Scheme& X, const Ring& ring_n, std::span<const uint64_t> z,
                               int target_level);

// Lift z (a level-n source point) to y at the target level with
// h(y) = x exactly; x must satisfy the target generators. Reports a
// counterexample when x is not in the image.
HenselResult hensel_lift_through(const Morphism& h, const Ring& ring_n, std::span<const uint64_t> z,
                                 const Ring& ring_m, std::span<const uint64_t> x);

struct GreenbergEstimate {
    std::optional<int> m_hat;  // least adequate level <= H-1
    int n = 0, horizon = 0;
    // for each candidate m that failed, one level-n witness that does not lift
    std::vector<std::pair<int, std::vector<uint64_t>>> blockers;
};

// Empirical Greenberg function: least m in [n, H-1] such that every point of
// truncate(enumerate(m), n) is the truncation of a level-H solution.
GreenbergEstimate greenberg_estimate(const Scheme& X, int n, const RingDescriptor& desc, int horizon,
                                     const EnumOpts& opts = {});

}  // namespace gm
