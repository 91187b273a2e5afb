#include "gm/scheme.hpp"

#include <algorithm>

#include "gm/error.hpp"

namespace gm {

void Scheme::validate() const {
    if (dim < 0 || dim > nvars())
        throw Error(ErrClass::construction, "scheme " + name + ": dimension out of range");
    for (const auto& g : gens)
        if (g.nvars() != nvars())
            throw Error(ErrClass::construction, "scheme " + name + ": generator variable mismatch");
    if (declared_ci && (int)gens.size() != nvars() - dim)
        throw Error(ErrClass::construction,
                    "scheme " + name + ": complete intersection needs N - d generators");
    if (!etale.empty() && (int)etale.size() != dim)
        throw Error(ErrClass::construction, "scheme " + name + ": etale coordinate count must equal dim");
    for (int i : etale)
        if (i < 0 || i >= nvars())
            throw Error(ErrClass::construction, "scheme " + name + ": etale coordinate out of range");
}

std::vector<int> Scheme::etale_coords() const {
    if (!etale.empty()) return etale;
    if (gens.empty()) {
        std::vector<int> all(nvars());
        for (int i = 0; i < nvars(); ++i) all[i] = i;
        return all;
    }
    return {};
}

std::optional<std::string> Scheme::admissibility_warning() const {
    for (size_t i = 0; i < gens.size(); ++i)
        if (gens[i].zero_mod_pi(base.p))
            return "generator " + std::to_string(i) + " of " + name +
                   " vanishes modulo pi; the scheme is not admissible as written";
    return std::nullopt;
}

std::vector<std::vector<Poly>> jacobian(const Scheme& X) {
    std::vector<std::vector<Poly>> J;
    for (const auto& f : X.gens) {
        std::vector<Poly> row;
        for (int i = 0; i < X.nvars(); ++i) row.push_back(f.derivative(i));
        J.push_back(std::move(row));
    }
    return J;
}

std::vector<Poly> singular_ideal(const Scheme& X) {
    int N = X.nvars(), d = X.dim;
    int m = (int)X.gens.size();
    if (m == 0) return {};  // smooth ambient space: empty singular locus
    std::vector<Poly> out = X.gens;
    auto J = jacobian(X);
    if (m == 1) {
        for (int i = 0; i < N; ++i) out.push_back(J[0][i]);
        return out;
    }
    if (X.declared_ci && m == N - d) {
        for (const auto& cols : subsets_of_size(N, N - d)) {
            std::vector<std::vector<Poly>> sub;
            for (int r = 0; r < m; ++r) {
                std::vector<Poly> row;
                for (int c : cols) row.push_back(J[r][c]);
                sub.push_back(std::move(row));
            }
            out.push_back(det_poly(sub));
        }
        return out;
    }
    throw Error(ErrClass::unsupported,
                "singular_ideal: scheme " + X.name +
                    " is neither a hypersurface nor a declared complete intersection");
}

std::vector<std::vector<int>> subsets_of_size(int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int start) -> void {
        if ((int)cur.size() == k) {
            out.push_back(cur);
            return;
        }
        for (int i = start; i <= n - (k - (int)cur.size()); ++i) {
            cur.push_back(i);
            self(self, i + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

bool point_on_scheme(const Scheme& X, const Ring& ring, std::span<const uint64_t> pt) {
    for (const auto& g : X.gens)
        if (g.eval(ring, pt) != 0) return false;
    return true;
}

namespace {

// determinant of a square matrix of ring elements, Laplace expansion
uint64_t det_ring(const Ring& ring, const std::vector<std::vector<uint64_t>>& m) {
    size_t k = m.size();
    if (k == 1) return m[0][0];
    uint64_t acc = 0;
    for (size_t j = 0; j < k; ++j) {
        if (m[0][j] == 0) continue;
        std::vector<std::vector<uint64_t>> sub;
        for (size_t r = 1; r < k; ++r) {
            std::vector<uint64_t> row;
            for (size_t c = 0; c < k; ++c)
                if (c != j) row.push_back(m[r][c]);
            sub.push_back(std::move(row));
        }
        uint64_t cof = ring.mul(m[0][j], det_ring(ring, sub));
        acc = (j % 2 == 0) ? ring.add(acc, cof) : ring.sub(acc, cof);
    }
    return acc;
}

}  // namespace

MinorOrders minor_orders(const Scheme& X, const Ring& ring, std::span<const uint64_t> pt,
                         bool check_point) {
    int N = X.nvars(), d = X.dim;
    int m = (int)X.gens.size();
    if (m != N - d)
        throw Error(ErrClass::unsupported, "minor_orders: needs N - d generators (hypersurface or CI)");
    if (check_point && !point_on_scheme(X, ring, pt))
        throw Error(ErrClass::precondition, "minor_orders: point does not satisfy the generators");

    auto J = jacobian(X);
    std::vector<std::vector<uint64_t>> Jv(m, std::vector<uint64_t>(N));
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < N; ++c) Jv[r][c] = J[r][c].eval(ring, pt);

    MinorOrders res;
    for (const auto& proj : subsets_of_size(N, d)) {
        std::vector<int> cols;
        for (int c = 0; c < N; ++c)
            if (std::find(proj.begin(), proj.end(), c) == proj.end()) cols.push_back(c);
        std::vector<std::vector<uint64_t>> sub(m, std::vector<uint64_t>(m));
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) sub[r][c] = Jv[r][cols[c]];
        int v = ring.val(det_ring(ring, sub));
        res.by_projection[proj] = v;
        if (v < res.min_val) {
            res.min_val = v;
            res.min_projection = proj;
        }
    }
    if (res.by_projection.empty())
        throw Error(ErrClass::unsupported, "minor_orders: no projection subsets");
    if (res.min_projection.empty()) res.min_projection = res.by_projection.begin()->first;
    return res;
}

std::vector<uint64_t> Morphism::apply(const Ring& ring, std::span<const uint64_t> pt) const {
    std::vector<uint64_t> out;
    out.reserve(coords.size());
    for (const auto& c : coords) out.push_back(c.eval(ring, pt));
    return out;
}

Morphism Morphism::compose_after(const Morphism& g) const {
    if (g.dst != src)
        throw Error(ErrClass::precondition, "compose: inner target must be outer source");
    Morphism r;
    r.name = name + "." + g.name;
    r.src = g.src;
    r.dst = dst;
    for (const auto& c : coords) r.coords.push_back(c.subst(g.coords));
    return r;
}

std::optional<std::string> validate_morphism(const Morphism& h, const std::vector<int>& levels,
                                             const RingDescriptor& desc, uint64_t budget) {
    for (int n : levels) {
        Ring ring(desc, n);
        int N = h.src->nvars();
        uint64_t card = ring.cardinality(), total = 1;
        for (int i = 0; i < N; ++i) {
            if (total > budget / card)
                return "morphism validation at level " + std::to_string(n) + " exceeds budget";
            total *= card;
        }
        std::vector<Poly> pulled;
        for (const auto& f : h.dst->gens) pulled.push_back(f.subst(h.coords));
        std::vector<CompiledPoly> src_gens, tgt_pulled;
        for (const auto& g : h.src->gens) src_gens.push_back(g.compile(ring));
        for (const auto& g : pulled) tgt_pulled.push_back(g.compile(ring));

        std::vector<uint64_t> pt(N);
        for (uint64_t idx = 0; idx < total; ++idx) {
            uint64_t t = idx;
            for (int i = N - 1; i >= 0; --i) {
                pt[i] = t % card;
                t /= card;
            }
            bool on_src = true;
            for (const auto& g : src_gens)
                if (g.eval(ring, pt) != 0) {
                    on_src = false;
                    break;
                }
            if (!on_src) continue;
            for (size_t gi = 0; gi < tgt_pulled.size(); ++gi)
                if (tgt_pulled[gi].eval(ring, pt) != 0)
                    return "morphism " + h.name + ": target generator " + std::to_string(gi) +
                           " does not vanish at a level-" + std::to_string(n) + " source point";
        }
    }
    return std::nullopt;
}

}  // namespace gm
