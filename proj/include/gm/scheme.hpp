#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gm/poly.hpp"
#include "gm/ring.hpp"

namespace gm {

// Affine formal scheme Spf R{x_1..x_N}/I given by exact polynomial
// generators, a declared relative dimension and shape flags.
struct Scheme {
    std::string name;
    RingDescriptor base;
    std::vector<std::string> vars;
    std::vector<Poly> gens;
    int dim = 0;
    bool declared_smooth = false;
    bool declared_ci = false;
    // variable indices of an etale coordinate system (size dim); defaults to
    // all variables when there are no generators
    std::vector<int> etale;

    int nvars() const { return (int)vars.size(); }

    void validate() const;

    // indices of the etale coordinates, resolving the default
    std::vector<int> etale_coords() const;

    // true when some generator reduces to 0 modulo pi (fails the
    // admissibility heuristic; the scheme then has pi-torsion witnesses)
    std::optional<std::string> admissibility_warning() const;
};

// rows = generators, columns = variables
std::vector<std::vector<Poly>> jacobian(const Scheme& X);

// Hypersurface: {f, all partials}. Complete intersection: generators of I
// plus all (N-d)-minors of the jacobian. Other shapes are refused.
std::vector<Poly> singular_ideal(const Scheme& X);

// Valuations of the maximal minors of the jacobian at a point, one per
// choice of d projection coordinates; the minor is taken over the
// complementary N-d columns. min_projection names the projection set(s)
// achieving the minimal valuation (first in subset order).
struct MinorOrders {
    std::map<std::vector<int>, int> by_projection;
    int min_val = kValNone;
    std::vector<int> min_projection;
};

MinorOrders minor_orders(const Scheme& X, const Ring& ring, std::span<const uint64_t> pt,
                         bool check_point = true);

bool point_on_scheme(const Scheme& X, const Ring& ring, std::span<const uint64_t> pt);

// A polynomial coordinate map between schemes: one polynomial in the source
// variables per target variable.
struct Morphism {
    std::string name;
    const Scheme* src = nullptr;
    const Scheme* dst = nullptr;
    std::vector<Poly> coords;

    std::vector<uint64_t> apply(const Ring& ring, std::span<const uint64_t> pt) const;

    // this-after-inner: (*this) o g
    Morphism compose_after(const Morphism& g) const;
};

// Numerical ideal-membership surrogate: every target generator composed with
// the coordinate map must vanish on all enumerated source points at the
// given levels. Returns a witness description on failure.
std::optional<std::string> validate_morphism(const Morphism& h, const std::vector<int>& levels,
                                             const RingDescriptor& desc, uint64_t budget);

std::vector<std::vector<int>> subsets_of_size(int n, int k);

}  // namespace gm
