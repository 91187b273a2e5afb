#include <doctest.h>

#include <random>

#include "gm/error.hpp"
#include "gm/integrate.hpp"

using namespace gm;

namespace {

Scheme make_scheme(const std::string& name, std::vector<std::string> vars,
                   std::vector<std::string> gens, int dim, bool smooth = false,
                   std::vector<int> etale = {}) {
    Scheme s;
    s.name = name;
    s.base = {RingKind::equal_char, 2, 1};
    s.vars = std::move(vars);
    for (const auto& g : gens) s.gens.push_back(Poly::parse(g, s.vars));
    s.dim = dim;
    s.declared_smooth = smooth;
    s.etale = std::move(etale);
    s.validate();
    return s;
}

Morphism make_morphism(const std::string& name, const Scheme* src, const Scheme* dst,
                       std::vector<std::string> coords) {
    Morphism m;
    m.name = name;
    m.src = src;
    m.dst = dst;
    for (const auto& c : coords) m.coords.push_back(Poly::parse(c, src->vars));
    return m;
}

const RingDescriptor EQ2{RingKind::equal_char, 2, 1};
const RingDescriptor EQ3{RingKind::equal_char, 3, 1};

}  // namespace

TEST_CASE("mult_at") {
    Scheme line = make_scheme("line", {"x"}, {}, 1, true);
    Ring r(EQ2, 3);
    std::vector<Poly> zx = {Poly::parse("x", line.vars)};
    std::vector<uint64_t> arc = {r.pi()};
    ArcValue v = mult_at(zx, r, arc);
    CHECK(v.v == 1);
    CHECK(!v.at_least);

    Scheme plane = make_scheme("plane", {"x", "y"}, {}, 2, true);
    Ring r5({RingKind::equal_char, 5, 1}, 4);
    std::vector<Poly> zxy = {Poly::parse("x", plane.vars), Poly::parse("y", plane.vars)};
    uint64_t t = r5.pi();
    std::vector<uint64_t> a2 = {r5.mul(t, t), r5.mul(t, r5.mul(t, t))};
    CHECK(mult_at(zxy, r5, a2).v == 2);  // min(2, 3)

    std::vector<uint64_t> zero = {0, 0};
    ArcValue inf = mult_at(zxy, r5, zero);
    CHECK(inf.at_least);
    CHECK(inf.v == 5);  // >= n+1

    // restriction compatibility: the same contact order computed on a chart
    Scheme node = make_scheme("node", {"x", "y"}, {"x*y - pi"}, 1);
    Scheme u1 = make_scheme("u1", {"u", "r"}, {"u*r - 1"}, 1, true, {0});
    Morphism h1 = make_morphism("h1", &u1, &node, {"u", "pi*r"});
    std::vector<Poly> zx_node = {Poly::parse("x", node.vars)};
    std::vector<Poly> zx_chart = {Poly::parse("x", node.vars).subst(h1.coords)};
    Ring rn({RingKind::equal_char, 3, 1}, 3);
    uint64_t uval = rn.add(rn.from_int(2), rn.pi());
    std::vector<uint64_t> chart_pt = {uval, rn.inv_unit(uval)};
    auto node_pt = h1.apply(rn, chart_pt);
    CHECK(mult_at(zx_node, rn, node_pt).v == mult_at(zx_chart, rn, chart_pt).v);
}

TEST_CASE("ord_jac at blowup charts, identity, node chart") {
    Scheme plane = make_scheme("plane", {"x", "y"}, {}, 2, true);
    Scheme uvp = make_scheme("uvp", {"u", "v"}, {}, 2, true);
    Morphism chart = make_morphism("chart", &uvp, &plane, {"u", "u*v"});
    Ring r(EQ2, 4);
    std::vector<uint64_t> arc = {r.pi(), r.one()};  // (t, 1)
    OrdJacResult j = ord_jac_at(chart, r, arc);
    CHECK(j.resolved);
    CHECK(j.val.v == 1);
    CHECK(!j.val.at_least);

    Morphism ident = make_morphism("id", &plane, &plane, {"x", "y"});
    std::mt19937_64 rng(3);
    for (int i = 0; i < 30; ++i) {
        std::vector<uint64_t> p = {rng() % r.cardinality(), rng() % r.cardinality()};
        CHECK(ord_jac_at(ident, r, p).val.v == 0);
    }

    // chart into the node (a proper hypersurface target, etale coordinate u)
    Scheme node = make_scheme("node", {"x", "y"}, {"x*y - pi"}, 1);
    Scheme u1 = make_scheme("u1", {"u", "r"}, {"u*r - 1"}, 1, true, {0});
    Morphism h1 = make_morphism("h1", &u1, &node, {"u", "pi*r"});
    Ring rn(EQ3, 3);
    uint64_t uval = rn.add(rn.one(), rn.pi());
    std::vector<uint64_t> pt = {uval, rn.inv_unit(uval)};
    OrdJacResult jn = ord_jac_at(h1, rn, pt);
    CHECK(jn.resolved);
    CHECK(jn.val.v == 0);
}

TEST_CASE("ord_jac agrees with the Fitting-ideal multiplicity (independent route)") {
    Scheme plane = make_scheme("plane", {"x", "y"}, {}, 2, true);
    Scheme swp = make_scheme("swp", {"s", "w"}, {}, 2, true);
    Morphism chart = make_morphism("chart", &swp, &plane, {"s", "s*w"});
    auto fit = fitting_ideal_gens(chart);
    Ring r(EQ2, 5);
    std::mt19937_64 rng(9);
    int agreements = 0;
    for (int i = 0; i < 200; ++i) {
        std::vector<uint64_t> z = {rng() % r.cardinality(), rng() % r.cardinality()};
        OrdJacResult j = ord_jac_at(chart, r, z);
        ArcValue f = mult_at(fit, r, z);
        CHECK(j.val.at_least == f.at_least);
        if (!j.val.at_least) CHECK(j.val.v == f.v);
        ++agreements;
    }
    CHECK(agreements == 200);

    // arc (t, 1+t) on the chart restricted over the node's preimage
    std::vector<uint64_t> arc = {r.pi(), r.add(r.one(), r.pi())};
    OrdJacResult j = ord_jac_at(chart, r, arc);
    ArcValue f = mult_at(fit, r, arc);
    CHECK(j.val.v == 1);
    CHECK(f.v == 1);

    // also across a proper target with an etale chart source
    Scheme node = make_scheme("node", {"x", "y"}, {"x*y - pi"}, 1);
    Scheme u1 = make_scheme("u1", {"u", "r"}, {"u*r - 1"}, 1, true, {0});
    Morphism h1 = make_morphism("h1", &u1, &node, {"u", "pi*r"});
    auto fit1 = fitting_ideal_gens(h1);
    Ring rn(EQ3, 3);
    for (uint64_t u0 : {1ull, 2ull}) {
        uint64_t uval = rn.add(rn.from_int((long long)u0), rn.pi());
        std::vector<uint64_t> pt = {uval, rn.inv_unit(uval)};
        OrdJacResult j1 = ord_jac_at(h1, rn, pt);
        ArcValue f1 = mult_at(fit1, rn, pt);
        CHECK(j1.val.v == f1.v);
    }
}

TEST_CASE("composition law on sampled arcs") {
    Scheme plane = make_scheme("plane", {"x", "y"}, {}, 2, true);
    Morphism h = make_morphism("h", &plane, &plane, {"x", "x*y"});
    Morphism g = make_morphism("g", &plane, &plane, {"x", "x*y"});
    Morphism ident = make_morphism("id", &plane, &plane, {"x", "y"});

    CompositionReport same = composition_check(ident, ident, 3, EQ2, 50);
    CHECK(same.ok());

    for (RingDescriptor d : {EQ2, EQ3}) {
        CompositionReport rep = composition_check(h, g, 6, d, 200);
        CHECK(rep.sampled >= 200);
        CHECK(rep.ok());
    }

    CompositionReport degenerate = composition_check(h, ident, 5, EQ2, 100);
    CHECK(degenerate.ok());
}

TEST_CASE("integrate: constants and the line multiplicity integral") {
    LevelCache cache;
    Scheme line = make_scheme("line", {"x"}, {}, 1, true);
    CylinderSpec full = CylinderSpec::full(&line);

    IntegrateResult one = integrate(full, Integrand::constant(&line, 0), 4, EQ2, cache);
    CHECK(one.integral.value == Rational(1));
    CHECK(one.integral.exact());

    std::vector<Poly> zx = {Poly::parse("x", line.vars)};
    {
        // the symbolic side interpolates each fiber: (1 - L^-1) L^-2v summed
        MeasureOpts opts;
        opts.interpolate = true;
        opts.interp_smax = 2;
        IntegrateResult r = integrate(full, Integrand::mult(&line, zx), 6, EQ2, cache, opts);
        REQUIRE(r.interpolated.has_value());
        CHECK(r.interpolated->coefficient(0) == 1);
        CHECK(r.interpolated->coefficient(-1) == -1);
        CHECK(r.interpolated->coefficient(-2) == 1);
        CHECK(r.interpolated->coefficient(-3) == -1);
    }
    for (RingDescriptor d : {EQ2, EQ3}) {
        uint64_t q = d.q();
        IntegrateResult r = integrate(full, Integrand::mult(&line, zx), 6, d, cache);
        REQUIRE(r.resolved);
        // oracle: truncated geometric series summed independently
        MotivicValue scale = MotivicValue(1) - MotivicValue::term(1, -1);
        GeometricSum gs = geometric_sum(-2, scale, 10);
        Rational closed = specialize(gs.numerator, q).value / specialize(gs.denominator, q).value;
        CHECK(closed == Rational(BigInt((long long)q), BigInt((long long)q + 1)));
        CHECK((r.integral.value - closed).abs() <= r.integral.err);
        CHECK(*r.integral.error_exponent() >= 6);
    }
}

TEST_CASE("integrate: additivity over unions and restriction monotonicity") {
    LevelCache cache;
    Scheme line = make_scheme("line", {"x"}, {}, 1, true);
    std::vector<Poly> zx = {Poly::parse("x", line.vars)};
    Integrand alpha = Integrand::mult(&line, zx);

    CylinderSpec A = CylinderSpec::parse("ord(x) <= 1", &line);
    CylinderSpec B = CylinderSpec::parse("ord(x) >= 1", &line);
    IntegrateResult iu = integrate(spec_or(A, B), alpha, 6, EQ2, cache);
    IntegrateResult ia = integrate(A, alpha, 6, EQ2, cache);
    IntegrateResult ib = integrate(B, alpha, 6, EQ2, cache);
    IntegrateResult ii = integrate(spec_and(A, B), alpha, 6, EQ2, cache);
    Rational lhs = iu.integral.value;
    Rational rhs = ia.integral.value + ib.integral.value - ii.integral.value;
    Rational slack = iu.integral.err + ia.integral.err + ib.integral.err + ii.integral.err;
    CHECK((lhs - rhs).abs() <= slack);

    // restriction: fiber measures over A never exceed those over the full space
    IntegrateResult ifull = integrate(CylinderSpec::full(&line), alpha, 6, EQ2, cache);
    for (size_t i = 0; i < ia.fibers.size() && i < ifull.fibers.size(); ++i)
        CHECK(ia.fibers[i].mu.value <= ifull.fibers[i].mu.value);
}

TEST_CASE("integrals with unboundable tails come back unresolved") {
    LevelCache cache;
    Scheme line = make_scheme("line", {"x"}, {}, 1, true);
    // mult along the zero ideal is infinite on every arc
    std::vector<Poly> zero_gen = {Poly(1)};
    MeasureOpts opts;
    opts.max_level = 5;
    IntegrateResult r = integrate(CylinderSpec::full(&line), Integrand::mult(&line, zero_gen), 4,
                                  EQ2, cache, opts);
    CHECK(!r.resolved);
    CHECK(r.integral.prov == RealizedMeasure::Provenance::unresolved);
}

TEST_CASE("serre series and rational fits") {
    Scheme conic = make_scheme("conic", {"x", "y"}, {"y - x^2"}, 1, true);
    SerreSeries sc = serre_series(conic, 4, EQ3);
    REQUIRE(sc.fit.has_value());
    CHECK(sc.fit->num == std::vector<BigInt>{BigInt(3)});
    CHECK(sc.fit->den == std::vector<BigInt>{BigInt(1), BigInt(-3)});
    CHECK(sc.fit->holdout_checked);
    for (const auto& r : sc.normalized) CHECK(r == Rational(1));

    Scheme node = make_scheme("node", {"x", "y"}, {"x*y - pi"}, 1);
    SerreSeries sn = serre_series(node, 4, EQ2);
    REQUIRE(sn.fit.has_value());
    // N_0 = 2q-1 and N_n = 2(q-1)q^n: sum = (2q-1 - qT)/(1 - qT)
    CHECK(sn.fit->num == std::vector<BigInt>{BigInt(3), BigInt(-2)});
    CHECK(sn.fit->den == std::vector<BigInt>{BigInt(1), BigInt(-2)});

    Scheme empty = make_scheme("empty", {"x"}, {"1"}, 0);
    SerreSeries se = serre_series(empty, 3, EQ2);
    for (const auto& c : se.counts) CHECK(c.is_zero());
}

TEST_CASE("cov_check: identity chart passes trivially") {
    LevelCache cache;
    Scheme plane = make_scheme("plane", {"x", "y"}, {}, 2, true);
    Morphism ident = make_morphism("id", &plane, &plane, {"x", "y"});
    std::vector<Poly> zxy = {Poly::parse("x", plane.vars), Poly::parse("y", plane.vars)};
    Integrand alpha = Integrand::mult(&plane, zxy);
    std::vector<CovChart> charts = {{&ident, CylinderSpec::full(&plane)}};
    CovReport rep = cov_check(charts, CylinderSpec::full(&plane), alpha, 3, EQ2, {}, cache);
    CHECK(rep.pass);
    CHECK(rep.injective);
    CHECK(rep.covered);
}

TEST_CASE("cov_check: blowup of the plane, both charts") {
    LevelCache cache;
    Scheme plane = make_scheme("plane", {"x", "y"}, {}, 2, true);
    Scheme uvp = make_scheme("uvp", {"u", "v"}, {}, 2, true);
    Scheme swp = make_scheme("swp", {"s", "w"}, {}, 2, true);
    Morphism c1 = make_morphism("c1", &uvp, &plane, {"u", "u*v"});
    Morphism c2 = make_morphism("c2", &swp, &plane, {"s*w", "w"});
    std::vector<Poly> zxy = {Poly::parse("x", plane.vars), Poly::parse("y", plane.vars)};
    std::vector<Poly> wild = zxy;

    std::vector<CovChart> charts = {{&c1, CylinderSpec::full(&uvp)},
                                    {&c2, CylinderSpec::parse("ord(s) >= 1", &swp)}};
    for (int a : {0, 1}) {
        Integrand alpha = Integrand::mult(&plane, zxy, a);
        CovReport rep = cov_check(charts, CylinderSpec::full(&plane), alpha, 3, EQ2, wild, cache);
        CHECK(rep.pass);
        // closed form (1 - q^-2) / (1 - q^-(a+2))
        Rational closed = (Rational(1) - Rational::pow_int(2, -2)) /
                          (Rational(1) - Rational::pow_int(2, -(a + 2)));
        CHECK((rep.lhs.integral.value - closed).abs() <= rep.lhs.integral.err);
        CHECK((rep.rhs_total - closed).abs() <= rep.rhs_err + rep.tolerance);
    }
}

TEST_CASE("cov_check: node against its two-component smooth model") {
    LevelCache cache;
    Scheme node = make_scheme("node", {"x", "y"}, {"x*y - pi"}, 1);
    Scheme u1 = make_scheme("u1", {"u", "r"}, {"u*r - 1"}, 1, true, {0});
    Scheme u2 = make_scheme("u2", {"v", "s"}, {"v*s - 1"}, 1, true, {0});
    Morphism h1 = make_morphism("h1", &u1, &node, {"u", "pi*r"});
    Morphism h2 = make_morphism("h2", &u2, &node, {"pi*s", "v"});
    std::vector<CovChart> charts = {{&h1, CylinderSpec::full(&u1)},
                                    {&h2, CylinderSpec::full(&u2)}};
    for (RingDescriptor d : {EQ2, EQ3}) {
        Integrand alpha = Integrand::constant(&node, 0);
        CovReport rep = cov_check(charts, CylinderSpec::full(&node), alpha, 4, d, {}, cache);
        CHECK(rep.pass);
        Rational expect = Rational(2) * (Rational(1) - Rational::pow_int(d.q(), -1));
        CHECK((rep.lhs.integral.value - expect).abs() <= rep.lhs.integral.err);
        CHECK((rep.rhs_total - expect).abs() <= rep.rhs_err);
    }
}

TEST_CASE("cov_check: injectivity failure is reported") {
    LevelCache cache;
    Scheme plane = make_scheme("plane", {"x", "y"}, {}, 2, true);
    Scheme uvp = make_scheme("uvp", {"u", "v"}, {}, 2, true);
    // squaring the first coordinate folds points together over q = 3
    Morphism fold = make_morphism("fold", &uvp, &plane, {"u^2", "v"});
    std::vector<CovChart> charts = {{&fold, CylinderSpec::full(&uvp)}};
    Integrand alpha = Integrand::constant(&plane, 0);
    CovReport rep = cov_check(charts, CylinderSpec::full(&plane), alpha, 3, EQ3, {}, cache);
    CHECK(!rep.pass);
}
