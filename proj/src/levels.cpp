#include "gm/levels.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <thread>

#include "gm/error.hpp"

namespace gm {

bool LevelSet::contains(std::span<const uint64_t> pt) const {
    size_t lo = 0, hi = size();
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        auto p = point(mid);
        int c = 0;
        for (int i = 0; i < nvars; ++i) {
            if (p[i] != pt[i]) {
                c = p[i] < pt[i] ? -1 : 1;
                break;
            }
        }
        if (c == 0) return true;
        if (c < 0)
            lo = mid + 1;
        else
            hi = mid;
    }
    return false;
}

namespace {

uint64_t search_space(const Ring& ring, int nvars, uint64_t budget, const Scheme& X) {
    uint64_t card = ring.cardinality(), total = 1;
    for (int i = 0; i < nvars; ++i) {
        if (card != 0 && total > budget / card) {
            std::string msg = "level enumeration for " + X.name + " at level " +
                              std::to_string(ring.level()) + " needs budget >= q^{(n+1)N}; configured " +
                              std::to_string(budget);
            if (X.declared_smooth) msg += " (scheme is declared smooth: hensel-accelerated counting applies)";
            throw Error(ErrClass::budget, msg);
        }
        total *= card;
    }
    return total;
}

void decode_index(uint64_t idx, uint64_t card, int nvars, uint64_t* pt) {
    for (int i = nvars - 1; i >= 0; --i) {
        pt[i] = idx % card;
        idx /= card;
    }
}

// Scan [lo, hi) of the index space, appending solutions (and the optional
// predicate's survivors) to out in index order.
void scan_range(const Ring& ring, const std::vector<CompiledPoly>& gens, int nvars, uint64_t lo,
                uint64_t hi, const std::function<bool(std::span<const uint64_t>)>* pred,
                std::vector<uint64_t>& out) {
    uint64_t card = ring.cardinality();
    std::vector<uint64_t> pt(nvars);
    for (uint64_t idx = lo; idx < hi; ++idx) {
        decode_index(idx, card, nvars, pt.data());
        bool ok = true;
        for (const auto& g : gens)
            if (g.eval(ring, pt) != 0) {
                ok = false;
                break;
            }
        if (!ok) continue;
        if (pred && !(*pred)(std::span<const uint64_t>(pt.data(), nvars))) continue;
        out.insert(out.end(), pt.begin(), pt.end());
    }
}

LevelSet enumerate_impl(const Scheme& X, const Ring& ring, const EnumOpts& opts,
                        const std::function<bool(std::span<const uint64_t>)>* pred) {
    int nvars = X.nvars();
    uint64_t total = search_space(ring, nvars, opts.budget, X);
    std::vector<CompiledPoly> gens;
    for (const auto& g : X.gens) gens.push_back(g.compile(ring));

    LevelSet out;
    out.X = &X;
    out.desc = ring.descriptor();
    out.level = ring.level();
    out.nvars = nvars;

    int threads = std::max(1, opts.threads);
    if (threads == 1 || total < 4096) {
        scan_range(ring, gens, nvars, 0, total, pred, out.flat);
        return out;
    }
    // partition the index space; chunk-order concatenation keeps the
    // canonical order independent of scheduling
    std::vector<std::vector<uint64_t>> parts(threads);
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) {
        uint64_t lo = total / threads * k + std::min<uint64_t>(k, total % threads);
        uint64_t hi = lo + total / threads + (k < (int)(total % threads) ? 1 : 0);
        pool.emplace_back([&, k, lo, hi] { scan_range(ring, gens, nvars, lo, hi, pred, parts[k]); });
    }
    for (auto& t : pool) t.join();
    for (auto& p : parts) out.flat.insert(out.flat.end(), p.begin(), p.end());
    return out;
}

}  // namespace

LevelSet enumerate_level(const Scheme& X, const Ring& ring, const EnumOpts& opts) {
    return enumerate_impl(X, ring, opts, nullptr);
}

LevelSet enumerate_level_filtered(const Scheme& X, const Ring& ring, const EnumOpts& opts,
                                  const std::function<bool(std::span<const uint64_t>)>& pred) {
    return enumerate_impl(X, ring, opts, &pred);
}

CountResult count_level(const Scheme& X, const RingDescriptor& desc, int n, const EnumOpts& opts) {
    CountResult res;
    try {
        Ring ring(desc, n);
        LevelSet S = enumerate_level(X, ring, opts);
        res.value = BigInt::from_u64(S.size());
        res.provenance = CountResult::Provenance::enumerated;
    } catch (const Error& e) {
        if (e.cls() != ErrClass::budget || !X.declared_smooth) throw;
        // smooth level counts scale exactly by q^d per level
        CountResult base = count_level(X, desc, 0, opts);
        BigInt scale = BigInt::from_u64(desc.q()).pow((unsigned)(n * X.dim));
        res.value = base.value * scale;
        res.provenance = CountResult::Provenance::smooth_scaled;
        return res;
    }
    if (X.declared_smooth && n >= 1) {
        // cross-check the declared dimension on the last step down
        try {
            Ring prev(desc, n - 1);
            LevelSet P = enumerate_level(X, prev, opts);
            BigInt expect = BigInt::from_u64(P.size()) * BigInt::from_u64(desc.q()).pow((unsigned)X.dim);
            if (!(expect == res.value))
                res.diagnostic = "dimension-inconsistency: N_" + std::to_string(n) + " = " +
                                 res.value.str() + " but N_" + std::to_string(n - 1) + " * q^d = " +
                                 expect.str() + " (declared d = " + std::to_string(X.dim) + ")";
        } catch (const Error&) {
            // cross-check is best-effort only
        }
    }
    return res;
}

TruncateResult truncate_set(const LevelSet& S, int target_level) {
    if (target_level > S.level)
        throw Error(ErrClass::precondition, "truncate_set: target level above source level");
    Ring ring(S.desc, S.level);
    std::map<std::vector<uint64_t>, uint64_t> image;
    std::vector<uint64_t> buf(S.nvars);
    for (size_t i = 0; i < S.size(); ++i) {
        auto p = S.point(i);
        for (int j = 0; j < S.nvars; ++j) buf[j] = ring.reduce(p[j], target_level);
        image[buf]++;
    }
    TruncateResult out;
    out.image.X = S.X;
    out.image.desc = S.desc;
    out.image.level = target_level;
    out.image.nvars = S.nvars;
    for (const auto& [pt, cnt] : image) {
        out.image.flat.insert(out.image.flat.end(), pt.begin(), pt.end());
        out.fiber_sizes.push_back(cnt);
    }
    return out;
}

bool ArcApproximation::compatible() const {
    for (size_t i = 0; i + 1 < levels.size(); ++i) {
        if (levels[i].first > levels[i + 1].first) return false;
        Ring hi(desc, levels[i + 1].first);
        for (size_t j = 0; j < levels[i].second.size(); ++j)
            if (hi.reduce(levels[i + 1].second[j], levels[i].first) != levels[i].second[j]) return false;
    }
    return true;
}

namespace {

// adjugate of a square ring matrix (transpose of cofactors)
std::vector<std::vector<uint64_t>> adjugate(const Ring& ring, const std::vector<std::vector<uint64_t>>& m) {
    size_t k = m.size();
    std::vector<std::vector<uint64_t>> adj(k, std::vector<uint64_t>(k));
    if (k == 1) {
        adj[0][0] = ring.one();
        return adj;
    }
    auto minor_det = [&](size_t dr, size_t dc) {
        std::vector<std::vector<uint64_t>> sub;
        for (size_t r = 0; r < k; ++r) {
            if (r == dr) continue;
            std::vector<uint64_t> row;
            for (size_t c = 0; c < k; ++c)
                if (c != dc) row.push_back(m[r][c]);
            sub.push_back(std::move(row));
        }
        // Laplace expansion
        std::function<uint64_t(const std::vector<std::vector<uint64_t>>&)> det =
            [&](const std::vector<std::vector<uint64_t>>& a) -> uint64_t {
            if (a.size() == 1) return a[0][0];
            uint64_t acc = 0;
            for (size_t j = 0; j < a.size(); ++j) {
                if (a[0][j] == 0) continue;
                std::vector<std::vector<uint64_t>> sub2;
                for (size_t r = 1; r < a.size(); ++r) {
                    std::vector<uint64_t> row;
                    for (size_t c = 0; c < a.size(); ++c)
                        if (c != j) row.push_back(a[r][c]);
                    sub2.push_back(std::move(row));
                }
                uint64_t cof = ring.mul(a[0][j], det(sub2));
                acc = (j % 2 == 0) ? ring.add(acc, cof) : ring.sub(acc, cof);
            }
            return acc;
        };
        return det(sub);
    };
    for (size_t r = 0; r < k; ++r)
        for (size_t c = 0; c < k; ++c) {
            uint64_t d = minor_det(r, c);
            if ((r + c) % 2 == 1) d = ring.neg(d);
            adj[c][r] = d;  // transpose
        }
    return adj;
}

uint64_t det_ring_local(const Ring& ring, const std::vector<std::vector<uint64_t>>& a) {
    if (a.size() == 1) return a[0][0];
    uint64_t acc = 0;
    for (size_t j = 0; j < a.size(); ++j) {
        if (a[0][j] == 0) continue;
        std::vector<std::vector<uint64_t>> sub;
        for (size_t r = 1; r < a.size(); ++r) {
            std::vector<uint64_t> row;
            for (size_t c = 0; c < a.size(); ++c)
                if (c != j) row.push_back(a[r][c]);
            sub.push_back(std::move(row));
        }
        uint64_t cof = ring.mul(a[0][j], det_ring_local(ring, sub));
        acc = (j % 2 == 0) ? ring.add(acc, cof) : ring.sub(acc, cof);
    }
    return acc;
}

}  // namespace

HenselResult hensel_lift_point(const Scheme& X, const Ring& ring_n, std::span<const uint64_t> z,
                               int target_level) {
    HenselResult res;
    int n = ring_n.level(), m = target_level;
    int N = X.nvars(), d = X.dim;
    if (m < n) {
        res.failure = HenselFailure{ErrClass::precondition, "target level below point level"};
        return res;
    }
    if (!point_on_scheme(X, ring_n, z)) {
        res.failure = HenselFailure{ErrClass::precondition, "point does not satisfy the generators"};
        return res;
    }
    if (X.gens.empty()) {
        // affine space: digits above n are free, pick zeros
        res.point.assign(z.begin(), z.end());
        return res;
    }
    MinorOrders mo = minor_orders(X, ring_n, z, false);
    int e = mo.min_val;
    if (e == kValNone || n < 2 * e) {
        res.failure = HenselFailure{
            ErrClass::precondition,
            "no-lift-guarantee: minimal minor order " +
                (e == kValNone ? std::string("is beyond precision") : std::to_string(e)) +
                " requires n >= 2e (n = " + std::to_string(n) + ")"};
        return res;
    }
    res.jac_order = e;
    if (m == n) {
        res.point.assign(z.begin(), z.end());
        return res;
    }

    Ring R(ring_n.descriptor(), m);
    const auto& fq = R.residue_field();
    std::vector<uint64_t> x(z.begin(), z.end());  // zero-extended digits

    // columns to adjust: complement of the minimal projection
    std::vector<int> sel;
    for (int c = 0; c < N; ++c)
        if (std::find(mo.min_projection.begin(), mo.min_projection.end(), c) == mo.min_projection.end())
            sel.push_back(c);
    int k = N - d;

    auto J = jacobian(X);
    std::vector<std::vector<CompiledPoly>> Jc(k);
    for (int r = 0; r < k; ++r)
        for (int c : sel) Jc[r].push_back(J[r][c].compile(R));
    std::vector<CompiledPoly> gens;
    for (const auto& g : X.gens) gens.push_back(g.compile(R));

    for (int lvl = n; lvl < m; ++lvl) {
        // residual digits w_j = digit_{lvl+1} of f_j(x)
        std::vector<uint32_t> w(k);
        bool done = true;
        for (int j = 0; j < k; ++j) {
            uint64_t fx = gens[j].eval(R, x);
            int v = R.val(fx);
            if (v != kValNone && v <= lvl) {
                res.failure = HenselFailure{ErrClass::fail, "internal: residual valuation dropped"};
                return res;
            }
            w[j] = R.digit(fx, lvl + 1);
            if (fx != 0) done = false;
        }
        if (done) continue;

        std::vector<std::vector<uint64_t>> A(k, std::vector<uint64_t>(k));
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c) A[r][c] = Jc[r][c].eval(R, x);
        uint64_t delta = det_ring_local(R, A);
        if (R.val(delta) != e) {
            res.failure = HenselFailure{ErrClass::fail, "internal: minor order moved during lifting"};
            return res;
        }
        uint32_t delta0 = R.digit(delta, e);
        uint32_t inv_d0 = fq.inv(delta0);

        auto M = adjugate(R, A);
        // u_sel = M * lift(y), y = -delta0^{-1} w over the residue field
        std::vector<uint64_t> y(k);
        for (int j = 0; j < k; ++j) y[j] = R.from_residue(fq.neg(fq.mul(inv_d0, w[j])));
        for (int r = 0; r < k; ++r) {
            uint64_t u = 0;
            for (int c = 0; c < k; ++c) u = R.add(u, R.mul(M[r][c], y[c]));
            x[sel[r]] = R.add(x[sel[r]], R.shift_up(u, lvl + 1 - e));
        }
    }

    for (const auto& g : gens)
        if (g.eval(R, x) != 0) {
            res.failure = HenselFailure{ErrClass::fail, "internal: lift does not verify generators"};
            return res;
        }
    res.point = std::move(x);
    return res;
}

HenselResult hensel_lift_through(const Morphism& h, const Ring& ring_n, std::span<const uint64_t> z,
                                 const Ring& ring_m, std::span<const uint64_t> x_target) {
    HenselResult res;
    const Scheme& Y = *h.src;
    const Scheme& X = *h.dst;
    int n = ring_n.level(), m = ring_m.level();
    int d = Y.dim;
    if (!Y.declared_smooth || !Y.gens.empty()) {
        res.failure = HenselFailure{ErrClass::unsupported,
                                    "hensel_lift_through: source must be affine space in this artifact"};
        return res;
    }
    if (!point_on_scheme(X, ring_m, x_target)) {
        res.failure = HenselFailure{ErrClass::precondition, "target point does not satisfy the generators"};
        return res;
    }

    // choose the projection: target minor orders at h(z) for proper schemes,
    // identity for an affine target
    std::vector<int> proj;
    if (X.gens.empty()) {
        for (int i = 0; i < X.nvars(); ++i) proj.push_back(i);
    } else {
        auto hz = h.apply(ring_n, z);
        MinorOrders mo = minor_orders(X, ring_n, hz, false);
        if (mo.min_val == kValNone) {
            res.failure = HenselFailure{ErrClass::precondition, "target minors vanish at this precision"};
            return res;
        }
        proj = mo.min_projection;
    }
    if ((int)proj.size() != d) {
        res.failure = HenselFailure{ErrClass::precondition, "projection size mismatch"};
        return res;
    }

    Ring R(ring_n.descriptor(), m);
    const auto& fq = R.residue_field();
    std::vector<uint64_t> y(z.begin(), z.end());

    // jacobian of p o h
    std::vector<std::vector<CompiledPoly>> Jc(d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) Jc[r].push_back(h.coords[proj[r]].derivative(c).compile(R));
    std::vector<CompiledPoly> hc;
    for (const auto& c : h.coords) hc.push_back(c.compile(R));

    // e = ord of det J_{p o h} at z
    std::vector<std::vector<uint64_t>> A0(d, std::vector<uint64_t>(d));
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) A0[r][c] = Jc[r][c].eval(R, y);
    int e = R.val(det_ring_local(R, A0));
    if (e == kValNone || n < 2 * e) {
        res.failure = HenselFailure{ErrClass::precondition,
                                    "no-lift-guarantee: jacobian order needs n >= 2e"};
        return res;
    }
    res.jac_order = e;

    // h(y) must agree with the target at level n
    for (int i = 0; i < X.nvars(); ++i)
        if (R.reduce(hc[i].eval(R, y), n) != R.reduce(x_target[i], n)) {
            res.failure = HenselFailure{ErrClass::precondition,
                                        "h(z) does not agree with the target at level n"};
            return res;
        }

    for (int lvl = n; lvl < m; ++lvl) {
        std::vector<uint32_t> w(d);
        bool done = true;
        for (int r = 0; r < d; ++r) {
            uint64_t diff = R.sub(hc[proj[r]].eval(R, y), x_target[proj[r]]);
            int v = R.val(diff);
            if (v != kValNone && v <= lvl) {
                res.failure = HenselFailure{ErrClass::fail,
                                            "counterexample: projected residual regressed at level " +
                                                std::to_string(lvl)};
                return res;
            }
            w[r] = R.digit(diff, lvl + 1);
            if (diff != 0) done = false;
        }
        if (!done) {
            std::vector<std::vector<uint64_t>> A(d, std::vector<uint64_t>(d));
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) A[r][c] = Jc[r][c].eval(R, y);
            uint64_t delta = det_ring_local(R, A);
            if (R.val(delta) != e) {
                res.failure = HenselFailure{ErrClass::fail, "internal: jacobian order moved"};
                return res;
            }
            uint32_t inv_d0 = fq.inv(R.digit(delta, e));
            auto M = adjugate(R, A);
            std::vector<uint64_t> yy(d);
            for (int j = 0; j < d; ++j) yy[j] = R.from_residue(fq.neg(fq.mul(inv_d0, w[j])));
            for (int r = 0; r < d; ++r) {
                uint64_t u = 0;
                for (int c = 0; c < d; ++c) u = R.add(u, R.mul(M[r][c], yy[c]));
                y[r] = R.add(y[r], R.shift_up(u, lvl + 1 - e));
            }
        }
        // all coordinates must follow, not only the projected ones
        for (int i = 0; i < X.nvars(); ++i) {
            uint64_t diff = R.sub(hc[i].eval(R, y), x_target[i]);
            int v = R.val(diff);
            if (v != kValNone && v <= lvl + 1) {
                res.failure = HenselFailure{
                    ErrClass::fail, "counterexample: coordinate " + X.vars[i] +
                                        " cannot be matched at level " + std::to_string(lvl + 1) +
                                        " (the target point is not in the image)"};
                return res;
            }
        }
    }
    res.point = std::move(y);
    return res;
}

GreenbergEstimate greenberg_estimate(const Scheme& X, int n, const RingDescriptor& desc, int horizon,
                                     const EnumOpts& opts) {
    GreenbergEstimate out;
    out.n = n;
    out.horizon = horizon;
    if (horizon <= n) throw Error(ErrClass::precondition, "greenberg_estimate: horizon must exceed n");

    Ring ring_h(desc, horizon);
    LevelSet at_h = enumerate_level(X, ring_h, opts);
    TruncateResult down_h = truncate_set(at_h, n);

    for (int m = n; m < horizon; ++m) {
        Ring ring_m(desc, m);
        LevelSet at_m = enumerate_level(X, ring_m, opts);
        TruncateResult down_m = truncate_set(at_m, n);
        bool all_lift = true;
        for (size_t i = 0; i < down_m.image.size(); ++i) {
            auto pt = down_m.image.point(i);
            if (!down_h.image.contains(pt)) {
                all_lift = false;
                out.blockers.emplace_back(m, std::vector<uint64_t>(pt.begin(), pt.end()));
                break;
            }
        }
        if (all_lift) {
            out.m_hat = m;
            return out;
        }
    }
    return out;
}

}  // namespace gm
