#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gm/config.hpp"

using namespace gm;

TEST_CASE("minimal single-line config parses to an affine line job") {
    auto r = parse_config("ring={kind=\"eq\",p=2,f=1}; scheme: vars=[x]; gens=[]");
    REQUIRE(r.ok());
    CHECK(r.config.ring.kind == RingKind::equal_char);
    CHECK(r.config.ring.p == 2);
    REQUIRE(r.config.schemes.size() == 1);
    const Scheme& s = r.config.schemes.front();
    CHECK(s.name == "main");
    CHECK(s.vars == std::vector<std::string>{"x"});
    CHECK(s.gens.empty());
    CHECK(s.dim == 1);
}

TEST_CASE("block form with morphisms, cylinders, integrands and parameters") {
    std::string text = R"CFG(
ring = { kind = "padic", p = 3, f = 1 }

scheme node {
  vars = [x, y]
  gens = ["x*y - pi"]
  dim = 1
}

scheme u1 {
  vars = [u, r]
  gens = ["u*r - 1"]
  dim = 1
  smooth = true
  etale = [u]
}

morphism h1 : u1 -> node {
  x = "u"
  y = "pi*r"
}

cylinder xunit on node = "ord(x) == 0"
integrand alpha on node = "mult(x, y)"
wild on node = ["x", "y"]

levels = 1..4
q = 2,3
precision = 5
threads = 2
scheme = node
)CFG";
    auto r = parse_config(text);
    for (const auto& i : r.issues) MESSAGE(i.str());
    REQUIRE(r.ok());
    const JobConfig& c = r.config;
    CHECK(c.ring.kind == RingKind::p_adic);
    CHECK(c.schemes.size() == 2);
    REQUIRE(c.morphisms.size() == 1);
    CHECK(c.morphisms[0].src->name == "u1");
    CHECK(c.morphisms[0].dst->name == "node");
    CHECK(c.morphisms[0].coords[1] == Poly::parse("pi*r", c.morphisms[0].src->vars));
    REQUIRE(c.find_cylinder("xunit"));
    REQUIRE(c.find_integrand("alpha"));
    CHECK(c.wild.at("node").size() == 2);
    CHECK(c.level_lo == 1);
    CHECK(c.level_hi == 4);
    CHECK(c.qs == std::vector<uint64_t>{2, 3});
    CHECK(c.precision == 5);
    CHECK(c.threads == 2);
    CHECK(c.default_scheme == "node");
}

TEST_CASE("parse errors are positioned and collected") {
    auto r = parse_config("scheme bad { vars = [x]\n gens = [\"x^2 -\"] }");
    REQUIRE(!r.ok());
    CHECK(r.issues[0].message.find("dangling") != std::string::npos);

    auto r2 = parse_config("morphism h : a -> b { x = \"u\" }");
    REQUIRE(!r2.ok());
    CHECK(r2.issues[0].message.find("unresolved") != std::string::npos);

    auto r3 = parse_config("cylinder c on nowhere = \"full\"");
    REQUIRE(!r3.ok());

    auto r4 = parse_config("scheme s { vars = [x, y] }\nmorphism h : s -> s { x = \"x\" }");
    REQUIRE(!r4.ok());  // missing coordinate for y
}

TEST_CASE("shipped fixture corpus parses") {
    const char* dir = std::getenv("GM_FIXTURES");
    REQUIRE(dir != nullptr);
    for (const char* name : {"line.gm", "plane.gm", "conic.gm", "ci_graph.gm", "node.gm", "cusp.gm",
                             "blowup.gm", "blowup2.gm", "node_model.gm", "etale_pair.gm"}) {
        std::ifstream in(std::string(dir) + "/" + name);
        REQUIRE(in.good());
        std::ostringstream ss;
        ss << in.rdbuf();
        auto r = parse_config(ss.str());
        for (const auto& i : r.issues) MESSAGE(name << ": " << i.str());
        CHECK(r.ok());
    }

    // the node fixture yields x*y - pi over the chosen ring
    std::ifstream in(std::string(dir) + "/node.gm");
    std::ostringstream ss;
    ss << in.rdbuf();
    auto r = parse_config(ss.str());
    REQUIRE(r.ok());
    const Scheme* node = r.config.find_scheme("node");
    REQUIRE(node != nullptr);
    REQUIRE(node->gens.size() == 1);
    CHECK(node->gens[0] == Poly::parse("x*y - pi", node->vars));
}

TEST_CASE("merging configs re-points morphisms") {
    auto a = parse_config("ring={kind=\"eq\",p=2,f=1}\nscheme s { vars = [x]\n gens = []\n dim = 1 }");
    auto b = parse_config(
        "scheme t { vars = [y]\n gens = []\n dim = 1 }\nmorphism m : t -> t { y = \"y\" }");
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    merge_config(a.config, b.config);
    REQUIRE(a.config.morphisms.size() == 1);
    CHECK(a.config.morphisms[0].src == a.config.find_scheme("t"));
}
