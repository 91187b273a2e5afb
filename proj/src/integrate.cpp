#include "gm/integrate.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "gm/error.hpp"
#include "gm/linalg.hpp"

namespace gm {

ArcValue mult_at(const std::vector<Poly>& zgens, const Ring& ring, std::span<const uint64_t> pt) {
    int mv = kValNone;
    for (const auto& g : zgens) mv = std::min(mv, ring.val(g.eval(ring, pt)));
    if (mv == kValNone) return {ring.level() + 1, true};
    return {mv, false};
}

namespace {

uint64_t det_ring(const Ring& ring, const std::vector<std::vector<uint64_t>>& a) {
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
        uint64_t cof = ring.mul(a[0][j], det_ring(ring, sub));
        acc = (j % 2 == 0) ? ring.add(acc, cof) : ring.sub(acc, cof);
    }
    return acc;
}

std::vector<std::vector<uint64_t>> adjugate_ring(const Ring& ring,
                                                 const std::vector<std::vector<uint64_t>>& m) {
    size_t k = m.size();
    std::vector<std::vector<uint64_t>> adj(k, std::vector<uint64_t>(k));
    if (k == 1) {
        adj[0][0] = ring.one();
        return adj;
    }
    for (size_t r = 0; r < k; ++r)
        for (size_t c = 0; c < k; ++c) {
            std::vector<std::vector<uint64_t>> sub;
            for (size_t rr = 0; rr < k; ++rr) {
                if (rr == r) continue;
                std::vector<uint64_t> row;
                for (size_t cc = 0; cc < k; ++cc)
                    if (cc != c) row.push_back(m[rr][cc]);
                sub.push_back(std::move(row));
            }
            uint64_t d = det_ring(ring, sub);
            if ((r + c) % 2 == 1) d = ring.neg(d);
            adj[c][r] = d;
        }
    return adj;
}

// All derivative polynomials of a morphism, prepared once. Rows of tJ are
// the target generators, used to select the projection per point.
struct JacPlan {
    int d = 0, k = 0, N = 0;
    std::vector<int> S, W;
    std::vector<Poly> coords;
    std::vector<std::vector<Poly>> dh_dS, dh_dW, dG_dW, dG_dS, tJ;
    bool affine_target = true;
    std::vector<std::vector<int>> projections;  // candidate projections of the target
};

JacPlan make_jac_plan(const Morphism& h) {
    const Scheme& Y = *h.src;
    const Scheme& X = *h.dst;
    if (!Y.declared_smooth)
        throw Error(ErrClass::unsupported, "ord_jac: source scheme must be declared smooth");
    if (X.dim != Y.dim) throw Error(ErrClass::unsupported, "ord_jac: source and target dimension differ");
    JacPlan plan;
    plan.d = Y.dim;
    plan.N = X.nvars();
    plan.coords = h.coords;
    plan.S = Y.etale_coords();
    if ((int)plan.S.size() != plan.d)
        throw Error(ErrClass::unsupported,
                    "ord_jac: source " + Y.name + " needs an etale coordinate system of size dim");
    for (int i = 0; i < Y.nvars(); ++i)
        if (std::find(plan.S.begin(), plan.S.end(), i) == plan.S.end()) plan.W.push_back(i);
    plan.k = (int)plan.W.size();
    if ((int)Y.gens.size() != plan.k)
        throw Error(ErrClass::unsupported, "ord_jac: source must have one generator per non-etale variable");

    plan.dh_dS.assign(plan.N, {});
    plan.dh_dW.assign(plan.N, {});
    for (int l = 0; l < plan.N; ++l) {
        for (int s : plan.S) plan.dh_dS[l].push_back(h.coords[l].derivative(s));
        for (int w : plan.W) plan.dh_dW[l].push_back(h.coords[l].derivative(w));
    }
    plan.dG_dW.assign(plan.k, {});
    plan.dG_dS.assign(plan.k, {});
    for (int r = 0; r < plan.k; ++r) {
        for (int w : plan.W) plan.dG_dW[r].push_back(Y.gens[r].derivative(w));
        for (int s : plan.S) plan.dG_dS[r].push_back(Y.gens[r].derivative(s));
    }
    plan.affine_target = X.gens.empty();
    if (plan.affine_target) {
        if (plan.N != plan.d)
            throw Error(ErrClass::unsupported, "ord_jac: affine target must have dim vars");
        std::vector<int> all;
        for (int i = 0; i < plan.d; ++i) all.push_back(i);
        plan.projections = {all};
    } else {
        if ((int)X.gens.size() != plan.N - plan.d)
            throw Error(ErrClass::unsupported, "ord_jac: target must be a hypersurface or CI");
        plan.tJ = jacobian(X);
        plan.projections = subsets_of_size(plan.N, plan.d);
    }
    return plan;
}

struct JacProgs {
    std::vector<CompiledPoly> coords;
    std::vector<std::vector<CompiledPoly>> dh_dS, dh_dW, dG_dW, dG_dS, tJ;
};

JacProgs compile_jac(const JacPlan& plan, const Ring& ring) {
    JacProgs p;
    auto comp_mat = [&](const std::vector<std::vector<Poly>>& m) {
        std::vector<std::vector<CompiledPoly>> out;
        for (const auto& row : m) {
            std::vector<CompiledPoly> r;
            for (const auto& poly : row) r.push_back(poly.compile(ring));
            out.push_back(std::move(r));
        }
        return out;
    };
    for (const auto& c : plan.coords) p.coords.push_back(c.compile(ring));
    p.dh_dS = comp_mat(plan.dh_dS);
    p.dh_dW = comp_mat(plan.dh_dW);
    p.dG_dW = comp_mat(plan.dG_dW);
    p.dG_dS = comp_mat(plan.dG_dS);
    p.tJ = comp_mat(plan.tJ);
    return p;
}

OrdJacResult ord_jac_eval(const JacPlan& plan, const JacProgs& progs, const Ring& ring,
                          std::span<const uint64_t> pt) {
    OrdJacResult res;
    int d = plan.d, k = plan.k, N = plan.N;

    // projection onto d target coordinates with minimal complementary minor
    std::vector<int> proj;
    if (plan.affine_target) {
        proj = plan.projections[0];
    } else {
        std::vector<uint64_t> img(N);
        for (int i = 0; i < N; ++i) img[i] = progs.coords[i].eval(ring, pt);
        int m = N - d;
        std::vector<std::vector<uint64_t>> Jv(m, std::vector<uint64_t>(N));
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < N; ++c) Jv[r][c] = progs.tJ[r][c].eval(ring, img);
        int best = kValNone;
        for (const auto& cand : plan.projections) {
            std::vector<int> cols;
            for (int c = 0; c < N; ++c)
                if (std::find(cand.begin(), cand.end(), c) == cand.end()) cols.push_back(c);
            std::vector<std::vector<uint64_t>> sub(m, std::vector<uint64_t>(m));
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < m; ++c) sub[r][c] = Jv[r][cols[c]];
            int v = ring.val(det_ring(ring, sub));
            if (v < best) {
                best = v;
                proj = cand;
            }
        }
        if (best == kValNone) {
            res.resolved = false;
            res.note = "unresolved at level " + std::to_string(ring.level()) +
                       ": every maximal minor of the target vanishes at this precision";
            res.val = {ring.level() + 1, true};
            return res;
        }
    }
    res.projection = proj;

    // effective jacobian along the etale coordinates
    std::vector<std::vector<uint64_t>> D(N, std::vector<uint64_t>(d));
    for (int l = 0; l < N; ++l)
        for (int s = 0; s < d; ++s) D[l][s] = progs.dh_dS[l][s].eval(ring, pt);
    if (k > 0) {
        std::vector<std::vector<uint64_t>> A(k, std::vector<uint64_t>(k)), B(k, std::vector<uint64_t>(d));
        for (int r = 0; r < k; ++r) {
            for (int c = 0; c < k; ++c) A[r][c] = progs.dG_dW[r][c].eval(ring, pt);
            for (int s = 0; s < d; ++s) B[r][s] = progs.dG_dS[r][s].eval(ring, pt);
        }
        uint64_t detA = det_ring(ring, A);
        if (!ring.is_unit(detA))
            throw Error(ErrClass::precondition,
                        "ord_jac: the declared etale coordinates are not etale at this point");
        uint64_t inv = ring.inv_unit(detA);
        auto adj = adjugate_ring(ring, A);
        std::vector<std::vector<uint64_t>> dWdS(k, std::vector<uint64_t>(d));
        for (int r = 0; r < k; ++r)
            for (int s = 0; s < d; ++s) {
                uint64_t acc = 0;
                for (int c = 0; c < k; ++c) acc = ring.add(acc, ring.mul(adj[r][c], B[c][s]));
                dWdS[r][s] = ring.neg(ring.mul(inv, acc));
            }
        for (int l = 0; l < N; ++l)
            for (int s = 0; s < d; ++s) {
                uint64_t acc = D[l][s];
                for (int r = 0; r < k; ++r)
                    acc = ring.add(acc, ring.mul(progs.dh_dW[l][r].eval(ring, pt), dWdS[r][s]));
                D[l][s] = acc;
            }
    }

    std::vector<std::vector<uint64_t>> sq(d, std::vector<uint64_t>(d));
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) sq[r][c] = D[proj[r]][c];
    int v = ring.val(det_ring(ring, sq));
    if (v == kValNone)
        res.val = {ring.level() + 1, true};
    else
        res.val = {v, false};
    return res;
}

}  // namespace

OrdJacResult ord_jac_at(const Morphism& h, const Ring& ring, std::span<const uint64_t> pt) {
    JacPlan plan = make_jac_plan(h);
    JacProgs progs = compile_jac(plan, ring);
    return ord_jac_eval(plan, progs, ring, pt);
}

std::vector<Poly> fitting_ideal_gens(const Morphism& h) {
    const Scheme& Y = *h.src;
    int d = Y.dim, M = Y.nvars(), N = h.dst->nvars();
    std::vector<int> S = Y.etale_coords();
    if ((int)S.size() != d)
        throw Error(ErrClass::unsupported, "fitting_ideal_gens: missing etale coordinates");
    std::vector<int> W;
    for (int i = 0; i < M; ++i)
        if (std::find(S.begin(), S.end(), i) == S.end()) W.push_back(i);
    int k = (int)W.size();

    // P = dh/dS * det(dG/dW) - dh/dW * adj(dG/dW) * dG/dS, all polynomial
    std::vector<std::vector<Poly>> P(N, std::vector<Poly>(d, Poly(M)));
    if (k == 0) {
        for (int l = 0; l < N; ++l)
            for (int s = 0; s < d; ++s) P[l][s] = h.coords[l].derivative(S[s]);
    } else {
        std::vector<std::vector<Poly>> A(k, std::vector<Poly>(k, Poly(M)));
        std::vector<std::vector<Poly>> B(k, std::vector<Poly>(d, Poly(M)));
        for (int r = 0; r < k; ++r) {
            for (int c = 0; c < k; ++c) A[r][c] = Y.gens[r].derivative(W[c]);
            for (int s = 0; s < d; ++s) B[r][s] = Y.gens[r].derivative(S[s]);
        }
        Poly detA = det_poly(A);
        // polynomial adjugate
        std::vector<std::vector<Poly>> adj(k, std::vector<Poly>(k, Poly(M)));
        if (k == 1) {
            adj[0][0] = Poly::constant(1, M);
        } else {
            for (int r = 0; r < k; ++r)
                for (int c = 0; c < k; ++c) {
                    std::vector<std::vector<Poly>> sub;
                    for (int rr = 0; rr < k; ++rr) {
                        if (rr == r) continue;
                        std::vector<Poly> row;
                        for (int cc = 0; cc < k; ++cc)
                            if (cc != c) row.push_back(A[rr][cc]);
                        sub.push_back(std::move(row));
                    }
                    Poly dd = det_poly(sub);
                    adj[c][r] = ((r + c) % 2 == 1) ? -dd : dd;
                }
        }
        for (int l = 0; l < N; ++l)
            for (int s = 0; s < d; ++s) {
                Poly acc = h.coords[l].derivative(S[s]) * detA;
                for (int r = 0; r < k; ++r) {
                    Poly inner(M);
                    for (int c = 0; c < k; ++c) inner = inner + adj[r][c] * B[c][s];
                    acc = acc - h.coords[l].derivative(W[r]) * inner;
                }
                P[l][s] = acc;
            }
    }

    std::vector<Poly> gens;
    for (const auto& rows : subsets_of_size(N, d)) {
        std::vector<std::vector<Poly>> sub;
        for (int r : rows) sub.push_back(P[r]);
        Poly g = det_poly(sub);
        if (!g.is_zero()) gens.push_back(g);
    }
    if (gens.empty()) gens.push_back(Poly(M));  // zero ideal
    return gens;
}

ArcValue Integrand::eval(const Ring& ring, std::span<const uint64_t> pt) const {
    long long total = b;
    bool at_least = false;
    if (!mult_gens.empty()) {
        ArcValue mv = mult_at(mult_gens, ring, pt);
        total += (long long)a * mv.v;
        at_least = at_least || (a > 0 && mv.at_least);
    }
    if (jac_h) {
        OrdJacResult jr = ord_jac_at(*jac_h, ring, pt);
        total += jr.val.v;
        at_least = at_least || jr.val.at_least;
    }
    if (total < 0 || total > kValNone / 2) total = std::min<long long>(total, kValNone / 2);
    return {(int)total, at_least};
}

Integrand Integrand::constant(const Scheme* X, long long b) {
    Integrand i;
    i.domain = X;
    i.a = 0;
    i.b = b;
    return i;
}

Integrand Integrand::mult(const Scheme* X, std::vector<Poly> zgens, int a, long long b) {
    if (a < 0) throw Error(ErrClass::precondition, "integrand scale must be >= 0");
    Integrand i;
    i.domain = X;
    i.a = a;
    i.b = b;
    i.mult_gens = std::move(zgens);
    return i;
}

Integrand Integrand::ordjac(const Morphism* h) {
    Integrand i;
    i.domain = h->src;
    i.a = 1;
    i.b = 0;
    i.jac_h = h;
    return i;
}

Integrand Integrand::change_of_variables(const Integrand& alpha, const Morphism& h) {
    if (alpha.jac_h)
        throw Error(ErrClass::unsupported, "change_of_variables: alpha must not already carry a jacobian");
    Integrand i;
    i.domain = h.src;
    i.a = alpha.a;
    i.b = alpha.b;
    for (const auto& g : alpha.mult_gens) i.mult_gens.push_back(g.subst(h.coords));
    i.jac_h = &h;
    return i;
}

namespace {

// Hot-path form of an integrand: derivative polynomials prepared once,
// compiled lazily per ring level. Copies share the compilation cache.
class IntegrandEvaluator {
public:
    explicit IntegrandEvaluator(const Integrand& a) : alpha_(a), cache_(std::make_shared<Cache>()) {
        if (alpha_.jac_h) cache_->plan = make_jac_plan(*alpha_.jac_h);
    }

    ArcValue eval(const Ring& ring, std::span<const uint64_t> pt) const {
        uint64_t key = ((uint64_t)ring.descriptor().p << 40) ^ ((uint64_t)ring.descriptor().f << 32) ^
                       ((uint64_t)(ring.descriptor().kind == RingKind::p_adic) << 31) ^
                       (uint64_t)ring.level();
        auto it = cache_->per_level.find(key);
        if (it == cache_->per_level.end()) {
            Levels lv;
            for (const auto& g : alpha_.mult_gens) lv.mult.push_back(g.compile(ring));
            if (cache_->plan) lv.jac = compile_jac(*cache_->plan, ring);
            it = cache_->per_level.emplace(key, std::move(lv)).first;
        }
        const Levels& lv = it->second;
        long long total = alpha_.b;
        bool at_least = false;
        if (!lv.mult.empty()) {
            int mv = kValNone;
            for (const auto& g : lv.mult) mv = std::min(mv, ring.val(g.eval(ring, pt)));
            bool inf = mv == kValNone;
            int v = inf ? ring.level() + 1 : mv;
            total += (long long)alpha_.a * v;
            at_least = at_least || (alpha_.a > 0 && inf);
        }
        if (cache_->plan) {
            OrdJacResult jr = ord_jac_eval(*cache_->plan, lv.jac, ring, pt);
            total += jr.val.v;
            at_least = at_least || jr.val.at_least;
        }
        if (total < 0 || total > kValNone / 2) total = std::min<long long>(total, kValNone / 2);
        return {(int)total, at_least};
    }

private:
    Integrand alpha_;
    struct Levels {
        std::vector<CompiledPoly> mult;
        JacProgs jac;
    };
    struct Cache {
        std::optional<JacPlan> plan;
        std::map<uint64_t, Levels> per_level;
    };
    std::shared_ptr<Cache> cache_;
};

}  // namespace

CompositionReport composition_check(const Morphism& h, const Morphism& g, int level,
                                    const RingDescriptor& desc, size_t min_samples, uint64_t seed) {
    CompositionReport rep;
    const Scheme& Z = *g.src;
    if (!Z.gens.empty())
        throw Error(ErrClass::unsupported, "composition_check samples arcs on an affine-space source");
    Morphism hg = h.compose_after(g);
    Ring ring(desc, level);
    std::mt19937_64 rng(seed);
    size_t attempts = 0;
    while (rep.sampled < min_samples && attempts < min_samples * 64) {
        ++attempts;
        std::vector<uint64_t> z(Z.nvars());
        for (auto& c : z) c = rng() % ring.cardinality();
        OrdJacResult inner = ord_jac_at(g, ring, z);
        auto gz = g.apply(ring, z);
        OrdJacResult outer = ord_jac_at(h, ring, gz);
        OrdJacResult both = ord_jac_at(hg, ring, z);
        if (inner.val.at_least || outer.val.at_least || both.val.at_least || !inner.resolved ||
            !outer.resolved || !both.resolved) {
            ++rep.skipped;
            continue;
        }
        ++rep.sampled;
        if (both.val.v != inner.val.v + outer.val.v)
            rep.counterexamples.push_back({z, both.val.v, outer.val.v, inner.val.v});
    }
    if (rep.sampled < min_samples)
        throw Error(ErrClass::budget, "composition_check: could not collect enough arcs outside the wild locus");
    return rep;
}

IntegrateResult integrate(const CylinderSpec& A, const Integrand& alpha, int m,
                          const RingDescriptor& desc, LevelCache& cache, const MeasureOpts& opts) {
    if (A.scheme() != alpha.domain)
        throw Error(ErrClass::precondition, "integrate: integrand domain differs from the cylinder scheme");
    uint64_t q = desc.q();
    IntegrateResult out;
    out.integral.q = q;

    MeasureOpts fiber_opts = opts;
    fiber_opts.target_error = m + 4;
    fiber_opts.interpolate = false;

    if (alpha.a == 0 && !alpha.jac_h) {
        MeasureResult mu = measure_spec(A, desc, cache, fiber_opts);
        Rational scale = Rational::pow_int(q, -alpha.b);
        out.integral.value = mu.measure.value * scale;
        out.integral.err = mu.measure.err * scale;
        out.integral.prov = mu.measure.prov;
        out.resolved = mu.resolved;
        out.truncation = 0;
        FiberRow row;
        row.base_value = 0;
        row.mu = mu.measure;
        row.term = out.integral.value;
        out.fibers.push_back(row);
        return out;
    }

    Rational sum(0), err_acc(0);
    Rational tail_target = Rational::pow_int(q, -(long long)(m + 2));
    bool done = false;

    IntegrandEvaluator ev(alpha);

    // fibers are indexed by the integrand value v itself; both parts of the
    // integrand are non-negative, so v runs upward from b
    for (long long v = alpha.b; v <= alpha.b + opts.max_level && !done; ++v) {
        int det = (int)std::max<long long>(0, v - alpha.b + 1);
        std::function<bool(const Ring&, std::span<const uint64_t>)> eq_pred =
            [ev, v](const Ring& ring, std::span<const uint64_t> p) {
                ArcValue av = ev.eval(ring, p);
                return !av.at_least && av.v == v;
            };
        MeasureResult mu;
        try {
            mu = measure_pred(A, desc, eq_pred, det, cache, fiber_opts);
        } catch (const Error& e) {
            if (e.cls() != ErrClass::budget) throw;
            out.notes.push_back("budget exhausted at fiber " + std::to_string(v));
            break;
        }
        if (!mu.resolved) {
            out.notes.push_back("fiber " + std::to_string(v) + " unresolved");
            break;
        }
        Rational scale = Rational::pow_int(q, -v);
        FiberRow row;
        row.base_value = (int)v;
        row.mu = mu.measure;
        row.term = mu.measure.value * scale;
        out.fibers.push_back(row);
        sum += row.term;
        err_acc += mu.measure.err * scale;

        // certified tail over the remaining fibers alpha >= v+1
        std::function<bool(const Ring&, std::span<const uint64_t>)> ge_pred =
            [ev, v](const Ring& ring, std::span<const uint64_t> p) {
                ArcValue av = ev.eval(ring, p);
                return av.at_least || av.v >= v + 1;
            };
        MeasureResult tail;
        try {
            tail = measure_pred(A, desc, ge_pred, det, cache, fiber_opts);
        } catch (const Error& e) {
            if (e.cls() != ErrClass::budget) throw;
            out.notes.push_back("budget exhausted on the tail at V = " + std::to_string(v));
            break;
        }
        if (!tail.resolved) {
            out.notes.push_back("tail unresolved at V = " + std::to_string(v));
            break;
        }
        Rational tail_mass =
            (tail.measure.value + tail.measure.err) * Rational::pow_int(q, -(v + 1));
        if (tail_mass <= tail_target) {
            out.truncation = (int)v;
            out.tail_bound = tail_mass + tail_mass;  // geometric factor <= 2
            done = true;
        }
    }

    if (!done) {
        out.resolved = false;
        out.integral.value = sum;
        out.integral.err = err_acc + Rational(1);  // no tail certificate
        out.integral.prov = RealizedMeasure::Provenance::unresolved;
        out.notes.push_back("tail not boundable within budget (not exponentially integrable here?)");
        return out;
    }
    out.integral.value = sum;
    out.integral.err = err_acc + out.tail_bound;
    out.integral.prov = out.integral.err.is_zero() ? RealizedMeasure::Provenance::exact
                                                   : RealizedMeasure::Provenance::tail_bounded;

    if (opts.interpolate) {
        // symbolic side: interpolate each fiber over residue extensions and
        // assemble sum_v mv_v L^{-v}; unknown below the certified precision
        MotivicValue total;
        bool all = true;
        for (const auto& row : out.fibers) {
            long long v = row.base_value;
            auto value_at = [&](const RingDescriptor& ds) -> std::optional<Rational> {
                if (ds.f == desc.f) return row.mu.value;
                std::function<bool(const Ring&, std::span<const uint64_t>)> eq_pred =
                    [ev, v](const Ring& ring, std::span<const uint64_t> p) {
                        ArcValue av = ev.eval(ring, p);
                        return !av.at_least && av.v == v;
                    };
                MeasureOpts o2 = fiber_opts;
                MeasureResult rs = measure_pred(A, ds, eq_pred,
                                                (int)std::max<long long>(0, v - alpha.b + 1), cache, o2);
                if (!rs.resolved) return std::nullopt;
                return rs.measure.value;
            };
            auto mv = interpolate_laurent(desc, opts.interp_smax, A.scheme()->dim,
                                          -(m + 6), value_at);
            if (!mv) {
                all = false;
                break;
            }
            total = total + *mv * MotivicValue::L((int)-v);
        }
        if (all) out.interpolated = total.truncated(m);
    }
    return out;
}

CovReport cov_check(const std::vector<CovChart>& charts, const CylinderSpec& A,
                    const Integrand& alpha, int m, const RingDescriptor& desc,
                    const std::vector<Poly>& wild_gens, LevelCache& cache, const MeasureOpts& opts) {
    CovReport rep;
    uint64_t q = desc.q();
    rep.tolerance = Rational::pow_int(q, -(long long)m);

    rep.lhs = integrate(A, alpha, m, desc, cache, opts);
    rep.rhs_total = Rational(0);
    rep.rhs_err = Rational(0);
    for (const auto& ch : charts) {
        Integrand beta = Integrand::change_of_variables(alpha, *ch.h);
        IntegrateResult r = integrate(ch.domain, beta, m, desc, cache, opts);
        rep.rhs_total += r.integral.value;
        rep.rhs_err += r.integral.err;
        rep.rhs.push_back(std::move(r));
    }

    // extensional diagnostics at a common check level
    int n_chk = 2;
    for (const auto& ch : charts) n_chk = std::max(n_chk, ch.domain.rank() + 1);
    n_chk = std::max(n_chk, A.rank() + 1);
    n_chk = std::min(n_chk + 1, opts.max_level);

    Ring ring(desc, n_chk);
    const Scheme& X = *A.scheme();
    auto in_tube = [&](std::span<const uint64_t> p) {
        if (wild_gens.empty()) return false;
        for (const auto& g : wild_gens)
            if (g.eval(ring, p) != 0) return false;
        return true;
    };

    std::set<std::vector<uint64_t>> covered;
    std::vector<std::set<std::vector<uint64_t>>> chart_images;
    for (const auto& ch : charts) {
        Cylinder B = realize(ch.domain, n_chk, desc, cache, opts.enum_opts);
        JacPlan plan = make_jac_plan(*ch.h);
        JacProgs progs = compile_jac(plan, ring);
        std::map<std::vector<uint64_t>, std::vector<size_t>> fibers;
        std::vector<int> jac_vals(B.members.size(), -1);
        chart_images.emplace_back();
        for (size_t i = 0; i < B.members.size(); ++i) {
            auto img = ch.h->apply(ring, B.members.point(i));
            OrdJacResult jr = ord_jac_eval(plan, progs, ring, B.members.point(i));
            if (jr.resolved && !jr.val.at_least) jac_vals[i] = jr.val.v;
            covered.insert(img);
            if (!in_tube(img)) chart_images.back().insert(img);
            fibers[img].push_back(i);
        }
        // fiber-count and agreement checks where the jacobian order is determined
        // and small enough for the level; the wild tube is exempt
        for (const auto& [img, members] : fibers) {
            if (in_tube(img)) continue;
            int e = jac_vals[members[0]];
            bool uniform = true;
            for (size_t i : members) uniform = uniform && jac_vals[i] == e;
            if (!uniform || e < 0 || 2 * e + 1 > n_chk) continue;
            uint64_t qe = 1;
            for (int i = 0; i < e; ++i) qe *= q;
            if (members.size() != qe) {
                rep.fibers_ok = false;
                rep.notes.push_back("fiber over an image point has size " +
                                    std::to_string(members.size()) + ", expected q^e = " +
                                    std::to_string(qe));
            }
            for (size_t i : members)
                for (size_t j : members) {
                    if (i >= j) continue;
                    auto pi = B.members.point(i), pj = B.members.point(j);
                    for (int c = 0; c < B.members.nvars; ++c)
                        if (ring.reduce(pi[c], n_chk - e) != ring.reduce(pj[c], n_chk - e)) {
                            rep.injective = false;
                            rep.notes.push_back("counterexample pair: two domain points with equal "
                                                "image differ at level n - e");
                            break;
                        }
                }
        }
    }

    // pairwise disjointness of the chart images outside the wild tube
    for (size_t i = 0; i < chart_images.size(); ++i)
        for (size_t j = i + 1; j < chart_images.size(); ++j)
            for (const auto& p : chart_images[i])
                if (chart_images[j].count(p)) {
                    rep.injective = false;
                    rep.notes.push_back("chart images overlap outside the wild locus at level " +
                                        std::to_string(n_chk));
                    goto disjoint_done;
                }
disjoint_done:;

    // coverage: A-points missed by every chart must sit inside the wild tube
    Cylinder Areal = realize(A, n_chk, desc, cache, opts.enum_opts);
    size_t leftover = 0;
    for (size_t i = 0; i < Areal.members.size(); ++i) {
        auto p = Areal.members.point(i);
        std::vector<uint64_t> key(p.begin(), p.end());
        if (covered.count(key)) continue;
        if (!in_tube(p)) {
            rep.covered = false;
            rep.notes.push_back("uncovered point outside the declared wild locus at level " +
                                std::to_string(n_chk));
            break;
        }
        ++leftover;
    }
    BigInt denom = BigInt::from_u64(q).pow((unsigned)((n_chk + 1) * X.dim));
    rep.leftover_bound = Rational(BigInt::from_u64(leftover), denom);

    Rational diff = (rep.lhs.integral.value - rep.rhs_total).abs();
    Rational allowed = rep.tolerance + rep.lhs.integral.err + rep.rhs_err + rep.leftover_bound;
    rep.pass = rep.lhs.resolved && rep.injective && rep.fibers_ok && rep.covered && diff <= allowed;
    for (const auto& r : rep.rhs) rep.pass = rep.pass && r.resolved;
    return rep;
}

std::string RationalFunctionFit::str() const {
    auto poly_str = [](const std::vector<BigInt>& c) {
        std::string s;
        bool first = true;
        for (size_t i = 0; i < c.size(); ++i) {
            if (c[i].is_zero()) continue;
            std::string term;
            if (i == 0)
                term = c[i].str();
            else if (c[i] == BigInt(1))
                term = i == 1 ? "T" : "T^" + std::to_string(i);
            else if (c[i] == BigInt(-1))
                term = std::string("-") + (i == 1 ? "T" : "T^" + std::to_string(i));
            else
                term = c[i].str() + "*" + (i == 1 ? "T" : "T^" + std::to_string(i));
            if (!first && !(term.size() && term[0] == '-')) s += "+";
            s += term;
            first = false;
        }
        return s.empty() ? std::string("0") : s;
    };
    return "(" + poly_str(num) + ")/(" + poly_str(den) + ")";
}

SerreSeries serre_series(const Scheme& X, int n_max, const RingDescriptor& desc,
                         const EnumOpts& opts) {
    SerreSeries out;
    uint64_t q = desc.q();
    int have = 0;
    for (int n = 0; n <= n_max + 1; ++n) {
        try {
            CountResult c = count_level(X, desc, n, opts);
            out.counts.push_back(c.value);
            if (c.diagnostic) out.notes.push_back(*c.diagnostic);
            ++have;
        } catch (const Error& e) {
            if (e.cls() != ErrClass::budget) throw;
            out.notes.push_back("count at level " + std::to_string(n) + " over budget");
            break;
        }
        if (n <= n_max)
            out.normalized.push_back(Rational::from_int(out.counts.back()) /
                                     Rational::from_int(BigInt::from_u64(q).pow((unsigned)((n + 1) * X.dim))));
    }
    if (have < 3) return out;

    // exact Pade-style fit of sum N_n T^n with degrees <= 2
    int terms = have;
    auto term = [&](int i) { return Rational::from_int(out.counts[i]); };
    for (int dq = 0; dq <= 2; ++dq)
        for (int dp = 0; dp <= 2; ++dp) {
            int unknowns = dp + 1 + dq;
            if (unknowns > terms - 1) continue;  // keep at least one holdout
            std::vector<std::vector<Rational>> M(unknowns, std::vector<Rational>(unknowns, Rational(0)));
            std::vector<Rational> rhs(unknowns, Rational(0));
            // equations n = 0..unknowns-1:
            //   p_n - sum_{j=1..dq} a_j N_{n-j} = N_n   (p_n = 0 for n > dp)
            for (int n = 0; n < unknowns; ++n) {
                if (n <= dp) M[n][n] = Rational(1);
                for (int j = 1; j <= dq; ++j)
                    if (n - j >= 0) M[n][dp + j] = -term(n - j);
                rhs[n] = term(n);
            }
            auto sol = solve_linear(M, rhs);
            if (!sol) continue;
            // verify every computed term, including the holdout
            bool ok = true;
            for (int n = 0; n < terms && ok; ++n) {
                Rational lhs = n <= dp ? (*sol)[n] : Rational(0);
                Rational acc = term(n);
                for (int j = 1; j <= dq; ++j)
                    if (n - j >= 0) acc += (*sol)[dp + j] * term(n - j);
                ok = acc == lhs;
            }
            if (!ok) continue;
            RationalFunctionFit fit;
            bool integral = true;
            for (int i = 0; i <= dp; ++i) {
                if (!((*sol)[i].den() == BigInt(1))) integral = false;
                fit.num.push_back((*sol)[i].num());
            }
            fit.den.push_back(BigInt(1));
            for (int j = 1; j <= dq; ++j) {
                if (!((*sol)[dp + j].den() == BigInt(1))) integral = false;
                fit.den.push_back((*sol)[dp + j].num());
            }
            if (!integral) continue;
            fit.holdout_checked = terms > n_max + 1;
            out.fit = fit;
            return out;
        }
    return out;
}

}  // namespace gm
