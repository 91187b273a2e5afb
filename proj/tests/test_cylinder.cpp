#include <doctest.h>

#include <random>
#include <set>

#include "gm/cylinder.hpp"
#include "gm/error.hpp"

using namespace gm;

namespace {

Scheme make_scheme(const std::string& name, std::vector<std::string> vars,
                   std::vector<std::string> gens, int dim, bool smooth = false) {
    Scheme s;
    s.name = name;
    s.base = {RingKind::equal_char, 2, 1};
    s.vars = std::move(vars);
    for (const auto& g : gens) s.gens.push_back(Poly::parse(g, s.vars));
    s.dim = dim;
    s.declared_smooth = smooth;
    s.validate();
    return s;
}

const RingDescriptor EQ2{RingKind::equal_char, 2, 1};
const RingDescriptor EQ3{RingKind::equal_char, 3, 1};
const RingDescriptor EQ5{RingKind::equal_char, 5, 1};

std::set<std::vector<uint64_t>> as_set(const Cylinder& c) {
    std::set<std::vector<uint64_t>> out;
    for (size_t i = 0; i < c.members.size(); ++i) {
        auto p = c.members.point(i);
        out.insert(std::vector<uint64_t>(p.begin(), p.end()));
    }
    return out;
}

}  // namespace

TEST_CASE("spec parsing, rank and evaluation") {
    Scheme line = make_scheme("line", {"x"}, {}, 1, true);
    CylinderSpec s = CylinderSpec::parse("ord(x) == 1", &line);
    CHECK(s.rank() == 1);
    CylinderSpec t = CylinderSpec::parse("ord(x) >= 2 || !(ord(x) <= 0)", &line);
    CHECK(t.rank() == 1);
    CHECK(CylinderSpec::parse("full", &line).rank() == 0);
    CHECK(CylinderSpec::parse("ord(x) >= inf", &line).pro_cylinder());
    CHECK_THROWS_AS(CylinderSpec::parse("ord(x) >", &line), Error);

    // round-trip through the renderer
    CHECK(CylinderSpec::parse(t.str(), &line).str() == t.str());

    LevelCache cache;
    Cylinder c = realize(s, 1, EQ2, cache);
    REQUIRE(c.members.size() == 1);  // exactly t = 0 + 1*t
    Ring r(EQ2, 1);
    CHECK(c.members.point(0)[0] == r.pi());

    CHECK_THROWS_AS(realize(s, 0, EQ2, cache), Error);  // under-determined
    CHECK_THROWS_AS(realize(CylinderSpec::parse("ord(x) >= inf", &line), 3, EQ2, cache), Error);
}

TEST_CASE("realize the full space and units") {
    Scheme line = make_scheme("line", {"x"}, {}, 1, true);
    LevelCache cache;
    Cylinder full = realize(CylinderSpec::full(&line), 0, EQ2, cache);
    CHECK(full.members.size() == 2);  // all of Gr_0

    Cylinder units = realize(CylinderSpec::parse("ord(x) == 0", &line), 0, EQ3, cache);
    CHECK(units.members.size() == 2);  // the rank-0 cylinder of units
}

TEST_CASE("boolean algebra laws on random spec triples") {
    Scheme node = make_scheme("node", {"x", "y"}, {"x*y - pi"}, 1);
    LevelCache cache;
    std::mt19937_64 rng(61);
    std::vector<Poly> pool = {
        Poly::parse("x", node.vars),      Poly::parse("y", node.vars),
        Poly::parse("x + y", node.vars),  Poly::parse("x - y", node.vars),
        Poly::parse("x*y - pi", node.vars)};

    auto random_spec = [&](auto&& self, int depth) -> CylinderSpec {
        int kind = (int)(rng() % (depth > 0 ? 4 : 2));
        if (kind == 0 || depth == 0) {
            const Poly& g = pool[rng() % pool.size()];
            CylAtom::Op op = (CylAtom::Op)(rng() % 3);
            int c = (int)(rng() % 3);
            return CylinderSpec::atom(&node, g, op, c);
        }
        if (kind == 1) return spec_not(self(self, depth - 1));
        CylinderSpec a = self(self, depth - 1), b = self(self, depth - 1);
        return kind == 2 ? spec_and(a, b) : spec_or(a, b);
    };

    int level = 3;
    size_t triples = 0;
    for (int i = 0; i < 500; ++i) {
        CylinderSpec A = random_spec(random_spec, 2);
        CylinderSpec B = random_spec(random_spec, 2);
        CylinderSpec C = random_spec(random_spec, 2);
        Cylinder a = realize(A, level, EQ2, cache);
        Cylinder b = realize(B, level, EQ2, cache);
        Cylinder c = realize(C, level, EQ2, cache);

        // A && !A empty; A || !A full
        CHECK(cyl_and(a, cyl_not(a, cache), cache).members.size() == 0);
        CHECK(cyl_or(a, cyl_not(a, cache), cache).members.size() ==
              cache.get(node, EQ2, level, {}).size());

        // inclusion-exclusion
        CHECK(cyl_or(a, b, cache).members.size() + cyl_and(a, b, cache).members.size() ==
              a.members.size() + b.members.size());

        // distributivity, extensionally
        Cylinder lhs = cyl_and(a, cyl_or(b, c, cache), cache);
        Cylinder rhs = cyl_or(cyl_and(a, b, cache), cyl_and(a, c, cache), cache);
        CHECK(as_set(lhs) == as_set(rhs));
        ++triples;
    }
    CHECK(triples == 500);
}

TEST_CASE("saturation: membership is determined at the rank") {
    Scheme node = make_scheme("node", {"x", "y"}, {"x*y - pi"}, 1);
    LevelCache cache;
    CylinderSpec s = CylinderSpec::parse("ord(x) == 1 && ord(y) <= 1", &node);
    int n = s.rank();
    Cylinder at_n = realize(s, n, EQ2, cache);
    Cylinder at_n1 = realize(s, n + 1, EQ2, cache);
    Ring up(EQ2, n + 1);
    // every level-(n+1) solution lands in the cylinder iff its truncation does
    const LevelSet& base = cache.get(node, EQ2, n + 1, {});
    for (size_t i = 0; i < base.size(); ++i) {
        auto p = base.point(i);
        std::vector<uint64_t> down = {up.reduce(p[0], n), up.reduce(p[1], n)};
        CHECK(at_n1.members.contains(p) == at_n.members.contains(down));
    }

    // the "ord(x) = 1 at level 1" example: realizing higher keeps full fibers
    Scheme line = make_scheme("line", {"x"}, {}, 1, true);
    CylinderSpec u = CylinderSpec::parse("ord(x) == 1", &line);
    CHECK(realize(u, 2, EQ2, cache).members.size() ==
          realize(u, 1, EQ2, cache).members.size() * 2);
}

TEST_CASE("gr_e cylinders") {
    Scheme conic = make_scheme("conic", {"x", "y"}, {"y - x^2"}, 1, true);
    LevelCache cache;
    for (int e = 0; e <= 2; ++e) {
        Cylinder g = gr_e(conic, e, 2, EQ2, cache);
        CHECK(g.members.size() == cache.get(conic, EQ2, 2, {}).size());  // smooth: everything
    }

    Scheme node = make_scheme("node", {"x", "y"}, {"x*y - pi"}, 1);
    Cylinder g0 = gr_e(node, 0, 1, EQ2, cache);
    // oracle: level-1 node points with min(ord x, ord y) = 0
    const LevelSet& base = cache.get(node, EQ2, 1, {});
    Ring r(EQ2, 1);
    size_t expect = 0;
    for (size_t i = 0; i < base.size(); ++i) {
        auto p = base.point(i);
        if (std::min(r.val(p[0]), r.val(p[1])) == 0) ++expect;
    }
    CHECK(g0.members.size() == expect);
    CHECK(expect == 2 * 2 * (2 - 1));  // all 2q(q-1) level-1 points have a unit coordinate

    Cylinder g1 = gr_e(node, 1, 2, EQ2, cache);
    Cylinder g0_up = promote(g0, 2, cache);
    for (size_t i = 0; i < g0_up.members.size(); ++i)
        CHECK(g1.members.contains(g0_up.members.point(i)));  // gr_0 inside gr_1
}

TEST_CASE("mult level sets") {
    Scheme line = make_scheme("line", {"x"}, {}, 1, true);
    LevelCache cache;
    std::vector<Poly> zx = {Poly::parse("x", line.vars)};
    CylinderSpec units = mult_level_set(line, zx, 0, false);
    MeasureResult m = measure_spec(units, EQ3, cache);
    CHECK(m.measure.value == Rational(BigInt(2), BigInt(3)));  // (q-1)/q
    CHECK(m.measure.exact());

    Scheme plane = make_scheme("plane", {"x", "y"}, {}, 2, true);
    std::vector<Poly> zxy = {Poly::parse("x", plane.vars), Poly::parse("y", plane.vars)};
    for (uint64_t q : {2ull, 3ull}) {
        RingDescriptor d{RingKind::equal_char, (uint32_t)q, 1};
        for (int v = 0; v <= 2; ++v) {
            MeasureResult mv = measure_spec(mult_level_set(plane, zxy, v, false), d, cache);
            Rational expect = Rational::pow_int(q, -2 * v) *
                              (Rational(1) - Rational::pow_int(q, -2));
            CHECK(mv.measure.value == expect);
            CHECK(mv.measure.exact());
        }
    }

    CHECK(mult_level_set_inf(line, zx).pro_cylinder());
}

TEST_CASE("preimage and image under the blowup chart") {
    Scheme plane = make_scheme("plane", {"x", "y"}, {}, 2, true);
    Scheme uvp = make_scheme("uvp", {"u", "v"}, {}, 2, true);
    Morphism chart;
    chart.name = "chart";
    chart.src = &uvp;
    chart.dst = &plane;
    chart.coords = {Poly::parse("u", uvp.vars), Poly::parse("u*v", uvp.vars)};

    Morphism ident;
    ident.name = "id";
    ident.src = &plane;
    ident.dst = &plane;
    ident.coords = {Poly::parse("x", plane.vars), Poly::parse("y", plane.vars)};

    LevelCache cache;
    Cylinder A = realize(CylinderSpec::parse("ord(x) == 1", &plane), 1, EQ2, cache);
    CHECK(as_set(preimage(ident, A, cache)) == as_set(A));

    Cylinder pre = preimage(chart, A, cache);
    Cylinder expect = realize(CylinderSpec::parse("ord(u) == 1", &uvp), 1, EQ2, cache);
    CHECK(as_set(pre) == as_set(expect));

    Cylinder empty = realize(CylinderSpec::parse("empty", &plane), 1, EQ2, cache);
    CHECK(preimage(chart, empty, cache).members.size() == 0);

    // image of B = {ord u = 1, ord v = 0} is a cylinder inside {ord x = 1}
    Cylinder B = realize(CylinderSpec::parse("ord(u) == 1 && ord(v) == 0", &uvp), 3, EQ2, cache);
    ImageResult img = image_cylinder(chart, B, 1, 0, cache);
    CHECK(img.saturated);
    Cylinder inside = realize(CylinderSpec::parse("ord(x) == 1", &plane), 3, EQ2, cache);
    for (size_t i = 0; i < img.image.members.size(); ++i)
        CHECK(inside.members.contains(img.image.members.point(i)));
    // fiber-count consequence: |pi_n(B)| = |pi_n(image)| * q^e with e = 1
    CHECK(B.members.size() == img.image.members.size() * 2);

    ImageResult same = image_cylinder(ident, A, 0, 0, cache);
    CHECK(as_set(same.image) == as_set(A));

    // a collapsing map: the level-n image is not saturated as an arc set
    Morphism collapse;
    collapse.name = "collapse";
    collapse.src = &uvp;
    collapse.dst = &plane;
    collapse.coords = {Poly::parse("u", uvp.vars), Poly(2)};  // (u, 0)
    Cylinder full = realize(CylinderSpec::full(&uvp), 1, EQ2, cache);
    CHECK_THROWS_AS(image_cylinder(collapse, full, 0, 0, cache), Error);
}

TEST_CASE("measure: full spaces, node, certificates") {
    LevelCache cache;
    Scheme line = make_scheme("line", {"x"}, {}, 1, true);
    MeasureResult full = measure_spec(CylinderSpec::full(&line), EQ2, cache);
    CHECK(full.measure.value == Rational(1));
    CHECK(full.measure.exact());

    Scheme conic = make_scheme("conic", {"x", "y"}, {"y - x^2"}, 1, true);
    MeasureResult mc = measure_spec(CylinderSpec::full(&conic), EQ3, cache);
    CHECK(mc.measure.value == Rational(1));  // N_0 / q^d = q/q

    Scheme node = make_scheme("node", {"x", "y"}, {"x*y - pi"}, 1);
    for (RingDescriptor d : {EQ2, EQ3, EQ5}) {
        MeasureResult mn = measure_spec(CylinderSpec::full(&node), d, cache);
        Rational expect = Rational(2) * (Rational(1) - Rational::pow_int(d.q(), -1));
        CHECK(mn.measure.value == expect);
        CHECK(mn.measure.exact());
        CHECK(mn.cert.stable_level <= 2);  // stabilized by level 2
        CHECK(mn.measure.prov == RealizedMeasure::Provenance::stabilized);
    }

    // ultrametric monotonicity on nested cylinders
    CylinderSpec sub = CylinderSpec::parse("ord(x) >= 1", &node);
    MeasureResult ms = measure_spec(sub, EQ2, cache);
    MeasureResult mf = measure_spec(CylinderSpec::full(&node), EQ2, cache);
    CHECK(ms.measure.value <= mf.measure.value + mf.measure.err + ms.measure.err);
}

TEST_CASE("measure is finitely additive and sigma-additive on an exhaustion") {
    LevelCache cache;
    Scheme line = make_scheme("line", {"x"}, {}, 1, true);
    std::vector<Poly> zx = {Poly::parse("x", line.vars)};
    Rational total(0);
    int V = 4;
    for (int v = 0; v <= V; ++v)
        total += measure_spec(mult_level_set(line, zx, v, false), EQ2, cache).measure.value;
    total += measure_spec(mult_level_set(line, zx, V + 1, true), EQ2, cache).measure.value;
    CHECK(total == Rational(1));
}

TEST_CASE("stability detection persists one level up") {
    LevelCache cache;
    Scheme node = make_scheme("node", {"x", "y"}, {"x*y - pi"}, 1);
    MeasureOpts opts;
    std::function<bool(const Ring&, std::span<const uint64_t>)> all =
        [](const Ring&, std::span<const uint64_t>) { return true; };
    PiCount c1 = count_pi(node, EQ2, 1, all, 0, cache, opts);
    PiCount c2 = count_pi(node, EQ2, 2, all, 0, cache, opts);
    PiCount c3 = count_pi(node, EQ2, 3, all, 0, cache, opts);
    REQUIRE(c1.certified);
    REQUIRE(c2.certified);
    REQUIRE(c3.certified);
    CHECK(c2.count == c1.count * BigInt(2));
    CHECK(c3.count == c2.count * BigInt(2));  // persists at (n+1, n+2)
}

TEST_CASE("negligibility certificates") {
    LevelCache cache;
    Scheme line = make_scheme("line", {"x"}, {}, 1, true);
    std::vector<Poly> zx = {Poly::parse("x", line.vars)};
    NegligibleCertificate cert = negligible(line, zx, 3, EQ2, cache);
    CHECK(cert.ok);
    CHECK(cert.calibrated_C == Rational(1));  // tight for the origin
    for (const auto& row : cert.rows)
        CHECK(row.normalized == Rational::pow_int(2, -(long long)(row.e + 1)));

    // Z = X is refused
    std::vector<Poly> zero = {Poly(1)};
    CHECK_THROWS_AS(negligible(line, zero, 2, EQ2, cache), Error);

    // the cusp's singular locus (the origin, radical taken by hand) decays
    // inside the cusp
    Scheme cusp = make_scheme("cusp", {"x", "y"}, {"y^2 - x^3"}, 1);
    std::vector<Poly> origin = {Poly::parse("x", cusp.vars), Poly::parse("y", cusp.vars)};
    NegligibleCertificate cc = negligible(cusp, origin, 3, EQ2, cache);
    CHECK(cc.ok);
    REQUIRE(cc.rows.size() == 4);
    for (const auto& row : cc.rows)
        CHECK(row.normalized == Rational::pow_int(2, -(long long)(row.e + 1)));  // tight here too
}

TEST_CASE("unresolved measures report explicit intervals, never silent values") {
    LevelCache cache;
    Scheme cusp = make_scheme("cusp", {"x", "y"}, {"y^2 - x^3"}, 1);
    MeasureOpts opts;
    opts.target_error = 4;
    opts.max_level = 6;  // too shallow for the cusp's remainder to decay
    MeasureResult m = measure_spec(CylinderSpec::full(&cusp), EQ2, cache, opts);
    CHECK(!m.resolved);
    CHECK(m.measure.prov == RealizedMeasure::Provenance::unresolved);
    CHECK(m.interval_lo <= m.interval_hi);
    CHECK(m.interval_hi > m.interval_lo);  // a genuine interval, not a point
}

TEST_CASE("interpolation recovers Laurent measures over field extensions") {
    LevelCache cache;
    Scheme node = make_scheme("node", {"x", "y"}, {"x*y - pi"}, 1);
    MeasureOpts opts;
    opts.interpolate = true;
    opts.interp_smax = 2;
    MeasureResult m = measure_spec(CylinderSpec::full(&node), EQ2, cache, opts);
    REQUIRE(m.interpolated.has_value());
    CHECK(m.interpolated->coefficient(0) == 2);
    CHECK(m.interpolated->coefficient(-1) == -2);
}
