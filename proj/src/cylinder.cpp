#include "gm/cylinder.hpp"

#include <algorithm>
#include <cstring>
#include <set>

#include "gm/error.hpp"
#include "gm/linalg.hpp"

namespace gm {

// ---- spec nodes ----

CylinderSpec CylinderSpec::full(const Scheme* X) {
    CylinderSpec s;
    s.X_ = X;
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::full;
    s.root_ = n;
    return s;
}

CylinderSpec CylinderSpec::atom(const Scheme* X, Poly g, CylAtom::Op op, int c) {
    if (c < 0) throw Error(ErrClass::precondition, "cylinder atom bound must be a natural number");
    CylinderSpec s;
    s.X_ = X;
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::atom;
    n->atom = CylAtom{std::move(g), op, c, false};
    s.root_ = n;
    return s;
}

CylinderSpec CylinderSpec::atom_inf(const Scheme* X, Poly g) {
    CylinderSpec s;
    s.X_ = X;
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::atom;
    n->atom = CylAtom{std::move(g), CylAtom::Op::ge, 0, true};
    s.root_ = n;
    return s;
}

static void require_same_scheme(const CylinderSpec& a, const CylinderSpec& b) {
    if (a.scheme() != b.scheme())
        throw Error(ErrClass::precondition, "cylinder operation across different schemes");
}

CylinderSpec spec_and(const CylinderSpec& a, const CylinderSpec& b) {
    require_same_scheme(a, b);
    CylinderSpec s;
    s.X_ = a.X_;
    auto n = std::make_shared<CylinderSpec::Node>();
    n->kind = CylinderSpec::Node::Kind::conj;
    n->kids = {a.root_, b.root_};
    s.root_ = n;
    return s;
}

CylinderSpec spec_or(const CylinderSpec& a, const CylinderSpec& b) {
    require_same_scheme(a, b);
    CylinderSpec s;
    s.X_ = a.X_;
    auto n = std::make_shared<CylinderSpec::Node>();
    n->kind = CylinderSpec::Node::Kind::disj;
    n->kids = {a.root_, b.root_};
    s.root_ = n;
    return s;
}

CylinderSpec spec_not(const CylinderSpec& a) {
    CylinderSpec s;
    s.X_ = a.X_;
    auto n = std::make_shared<CylinderSpec::Node>();
    n->kind = CylinderSpec::Node::Kind::neg;
    n->kids = {a.root_};
    s.root_ = n;
    return s;
}

int CylinderSpec::node_rank(const Node& n) {
    switch (n.kind) {
        case Node::Kind::full: return 0;
        case Node::Kind::atom: {
            if (n.atom.inf) return 0;  // pro-cylinders are refused at realize time
            switch (n.atom.op) {
                case CylAtom::Op::eq:
                case CylAtom::Op::le: return n.atom.bound;
                case CylAtom::Op::ge: return std::max(n.atom.bound - 1, 0);
            }
            return 0;
        }
        default: {
            int r = 0;
            for (const auto& k : n.kids) r = std::max(r, node_rank(*k));
            return r;
        }
    }
}

bool CylinderSpec::node_pro(const Node& n) {
    if (n.kind == Node::Kind::atom) return n.atom.inf;
    for (const auto& k : n.kids)
        if (node_pro(*k)) return true;
    return false;
}

bool CylinderSpec::node_eval(const Node& n, const Ring& ring, std::span<const uint64_t> pt) {
    switch (n.kind) {
        case Node::Kind::full: return true;
        case Node::Kind::atom: {
            if (n.atom.inf)
                throw Error(ErrClass::precondition,
                            "pro-cylinder condition cannot be evaluated at a finite level");
            int v = ring.val(n.atom.g.eval(ring, pt));
            switch (n.atom.op) {
                case CylAtom::Op::eq: return v == n.atom.bound;
                case CylAtom::Op::ge: return v >= n.atom.bound;
                case CylAtom::Op::le: return v <= n.atom.bound;
            }
            return false;
        }
        case Node::Kind::conj:
            for (const auto& k : n.kids)
                if (!node_eval(*k, ring, pt)) return false;
            return true;
        case Node::Kind::disj:
            for (const auto& k : n.kids)
                if (node_eval(*k, ring, pt)) return true;
            return false;
        case Node::Kind::neg: return !node_eval(*n.kids[0], ring, pt);
    }
    return false;
}

int CylinderSpec::rank() const { return root_ ? node_rank(*root_) : 0; }
bool CylinderSpec::pro_cylinder() const { return root_ && node_pro(*root_); }

bool CylinderSpec::eval(const Ring& ring, std::span<const uint64_t> pt) const {
    if (ring.level() < rank())
        throw Error(ErrClass::precondition,
                    "cylinder condition is under-determined at level " + std::to_string(ring.level()) +
                        " (rank " + std::to_string(rank()) + ")");
    return node_eval(*root_, ring, pt);
}

void CylinderSpec::node_str(const Node& n, const std::vector<std::string>& vars, std::string& out) {
    switch (n.kind) {
        case Node::Kind::full: out += "full"; return;
        case Node::Kind::atom: {
            out += "ord(" + n.atom.g.render(vars) + ")";
            if (n.atom.inf) {
                out += " >= inf";
                return;
            }
            switch (n.atom.op) {
                case CylAtom::Op::eq: out += " == "; break;
                case CylAtom::Op::ge: out += " >= "; break;
                case CylAtom::Op::le: out += " <= "; break;
            }
            out += std::to_string(n.atom.bound);
            return;
        }
        case Node::Kind::conj:
        case Node::Kind::disj: {
            const char* sep = n.kind == Node::Kind::conj ? " && " : " || ";
            out += "(";
            for (size_t i = 0; i < n.kids.size(); ++i) {
                if (i) out += sep;
                node_str(*n.kids[i], vars, out);
            }
            out += ")";
            return;
        }
        case Node::Kind::neg:
            out += "!(";
            node_str(*n.kids[0], vars, out);
            out += ")";
            return;
    }
}

std::string CylinderSpec::str() const {
    if (!root_) return "full";
    std::string out;
    node_str(*root_, X_->vars, out);
    return out;
}

namespace {

struct SpecLexer {
    const std::string& s;
    size_t pos = 0;
    void skip() {
        while (pos < s.size() && isspace((unsigned char)s[pos])) ++pos;
    }
    bool at(const char* tok) {
        skip();
        return s.compare(pos, strlen(tok), tok) == 0;
    }
    bool eat(const char* tok) {
        if (!at(tok)) return false;
        pos += strlen(tok);
        return true;
    }
    [[noreturn]] void fail(const std::string& m) {
        throw Error(ErrClass::parse,
                    "cylinder spec parse error at column " + std::to_string(pos + 1) + ": " + m);
    }
};

CylinderSpec parse_or(SpecLexer& lx, const Scheme* X);

CylinderSpec parse_unary(SpecLexer& lx, const Scheme* X) {
    lx.skip();
    if (lx.eat("!")) return spec_not(parse_unary(lx, X));
    if (lx.eat("(")) {
        CylinderSpec inner = parse_or(lx, X);
        if (!lx.eat(")")) lx.fail("expected ')'");
        return inner;
    }
    if (lx.eat("full")) return CylinderSpec::full(X);
    if (lx.eat("empty")) return spec_not(CylinderSpec::full(X));
    if (lx.eat("ord")) {
        if (!lx.eat("(")) lx.fail("expected '(' after ord");
        // polynomial runs to the matching close paren
        int depth = 1;
        size_t start = lx.pos;
        while (lx.pos < lx.s.size() && depth > 0) {
            if (lx.s[lx.pos] == '(') ++depth;
            if (lx.s[lx.pos] == ')') --depth;
            if (depth > 0) ++lx.pos;
        }
        if (depth != 0) lx.fail("unbalanced parentheses in ord()");
        std::string poly_text = lx.s.substr(start, lx.pos - start);
        ++lx.pos;  // consume ')'
        Poly g = Poly::parse(poly_text, X->vars);
        CylAtom::Op op;
        if (lx.eat("==") || lx.eat("=")) {
            op = CylAtom::Op::eq;
        } else if (lx.eat(">=")) {
            op = CylAtom::Op::ge;
        } else if (lx.eat("<=")) {
            op = CylAtom::Op::le;
        } else {
            lx.fail("expected ==, >= or <=");
        }
        lx.skip();
        if (lx.eat("inf")) {
            if (op != CylAtom::Op::ge) lx.fail("only ord(g) >= inf is meaningful");
            return CylinderSpec::atom_inf(X, std::move(g));
        }
        size_t ns = lx.pos;
        while (lx.pos < lx.s.size() && isdigit((unsigned char)lx.s[lx.pos])) ++lx.pos;
        if (ns == lx.pos) lx.fail("expected bound");
        int c = std::stoi(lx.s.substr(ns, lx.pos - ns));
        return CylinderSpec::atom(X, std::move(g), op, c);
    }
    lx.fail("expected atom");
}

CylinderSpec parse_and(SpecLexer& lx, const Scheme* X) {
    CylinderSpec left = parse_unary(lx, X);
    while (lx.eat("&&")) left = spec_and(left, parse_unary(lx, X));
    return left;
}

CylinderSpec parse_or(SpecLexer& lx, const Scheme* X) {
    CylinderSpec left = parse_and(lx, X);
    while (lx.eat("||")) left = spec_or(left, parse_and(lx, X));
    return left;
}

}  // namespace

CylinderSpec CylinderSpec::parse(const std::string& text, const Scheme* X) {
    SpecLexer lx{text};
    CylinderSpec s = parse_or(lx, X);
    lx.skip();
    if (lx.pos != text.size()) lx.fail("trailing input");
    return s;
}

CompiledSpec::CompiledSpec(CylinderSpec spec) : spec_(std::move(spec)) {
    per_level_ = std::make_shared<std::map<uint64_t, std::vector<CompiledPoly>>>();
    if (spec_.root_) flatten(*spec_.root_);
}

int CompiledSpec::flatten(const CylinderSpec::Node& n) {
    int idx = (int)nodes_.size();
    nodes_.push_back({});
    nodes_[idx].kind = n.kind;
    if (n.kind == CylinderSpec::Node::Kind::atom) {
        if (n.atom.inf)
            throw Error(ErrClass::precondition, "pro-cylinder condition cannot be compiled");
        nodes_[idx].op = n.atom.op;
        nodes_[idx].bound = n.atom.bound;
        nodes_[idx].atom_idx = (int)atom_polys_.size();
        atom_polys_.push_back(&n.atom.g);
    }
    std::vector<int> kids;
    for (const auto& k : n.kids) kids.push_back(flatten(*k));
    nodes_[idx].kids = std::move(kids);
    return idx;
}

bool CompiledSpec::eval_node(int idx, const Ring& ring, const std::vector<CompiledPoly>& progs,
                             std::span<const uint64_t> pt) const {
    const FlatNode& n = nodes_[idx];
    switch (n.kind) {
        case CylinderSpec::Node::Kind::full: return true;
        case CylinderSpec::Node::Kind::atom: {
            int v = ring.val(progs[n.atom_idx].eval(ring, pt));
            switch (n.op) {
                case CylAtom::Op::eq: return v == n.bound;
                case CylAtom::Op::ge: return v >= n.bound;
                case CylAtom::Op::le: return v <= n.bound;
            }
            return false;
        }
        case CylinderSpec::Node::Kind::conj:
            for (int k : n.kids)
                if (!eval_node(k, ring, progs, pt)) return false;
            return true;
        case CylinderSpec::Node::Kind::disj:
            for (int k : n.kids)
                if (eval_node(k, ring, progs, pt)) return true;
            return false;
        case CylinderSpec::Node::Kind::neg: return !eval_node(0 + n.kids[0], ring, progs, pt);
    }
    return false;
}

bool CompiledSpec::eval(const Ring& ring, std::span<const uint64_t> pt) const {
    if (nodes_.empty()) return true;
    uint64_t key = ((uint64_t)ring.descriptor().p << 40) ^ ((uint64_t)ring.descriptor().f << 32) ^
                   ((uint64_t)(ring.descriptor().kind == RingKind::p_adic) << 31) ^
                   (uint64_t)ring.level();
    auto it = per_level_->find(key);
    if (it == per_level_->end()) {
        std::vector<CompiledPoly> progs;
        for (const Poly* g : atom_polys_) progs.push_back(g->compile(ring));
        it = per_level_->emplace(key, std::move(progs)).first;
    }
    return eval_node(0, ring, it->second, pt);
}

CylinderSpec CylinderSpec::pullback(const Morphism& h) const {
    if (h.dst != X_) throw Error(ErrClass::precondition, "pullback: morphism target mismatch");
    std::function<std::shared_ptr<const Node>(const Node&)> walk =
        [&](const Node& n) -> std::shared_ptr<const Node> {
        auto out = std::make_shared<Node>();
        out->kind = n.kind;
        if (n.kind == Node::Kind::atom) {
            out->atom = n.atom;
            out->atom.g = n.atom.g.subst(h.coords);
        }
        for (const auto& k : n.kids) out->kids.push_back(walk(*k));
        return out;
    };
    CylinderSpec s;
    s.X_ = h.src;
    s.root_ = walk(*root_);
    return s;
}

CylinderSpec mult_level_set(const Scheme& X, const std::vector<Poly>& zgens, int v, bool at_least) {
    if (v < 0) throw Error(ErrClass::precondition, "mult level must be a natural number");
    if (zgens.empty()) throw Error(ErrClass::precondition, "mult needs at least one generator");
    auto ge_all = [&](int w) {
        CylinderSpec s = CylinderSpec::full(&X);
        for (const auto& g : zgens) {
            if (w == 0) continue;  // ord >= 0 always holds
            s = spec_and(s, CylinderSpec::atom(&X, g, CylAtom::Op::ge, w));
        }
        return s;
    };
    if (at_least) return ge_all(v);
    return spec_and(ge_all(v), spec_not(ge_all(v + 1)));
}

CylinderSpec mult_level_set_inf(const Scheme& X, const std::vector<Poly>& zgens) {
    CylinderSpec s = CylinderSpec::full(&X);
    for (const auto& g : zgens) s = spec_and(s, CylinderSpec::atom_inf(&X, g));
    return s;
}

// ---- realization ----

const LevelSet& LevelCache::get(const Scheme& X, const RingDescriptor& desc, int level,
                                const EnumOpts& opts) {
    Key k{&X, desc.kind, desc.p, desc.f, level};
    auto it = sets_.find(k);
    if (it != sets_.end()) return it->second;
    Ring ring(desc, level);
    LevelSet s = enumerate_level(X, ring, opts);
    return sets_.emplace(k, std::move(s)).first->second;
}

namespace {

int point_cmp(std::span<const uint64_t> a, std::span<const uint64_t> b) {
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
    return 0;
}

LevelSet filter_set(const LevelSet& base, const Ring& ring,
                    const std::function<bool(std::span<const uint64_t>)>& keep) {
    LevelSet out;
    out.X = base.X;
    out.desc = base.desc;
    out.level = base.level;
    out.nvars = base.nvars;
    for (size_t i = 0; i < base.size(); ++i) {
        auto p = base.point(i);
        if (keep(p)) out.flat.insert(out.flat.end(), p.begin(), p.end());
    }
    (void)ring;
    return out;
}

LevelSet set_op(const LevelSet& a, const LevelSet& b, bool keep_both, bool keep_a_only,
                bool keep_b_only) {
    LevelSet out;
    out.X = a.X;
    out.desc = a.desc;
    out.level = a.level;
    out.nvars = a.nvars;
    size_t i = 0, j = 0;
    auto push = [&](std::span<const uint64_t> p) { out.flat.insert(out.flat.end(), p.begin(), p.end()); };
    while (i < a.size() || j < b.size()) {
        if (i < a.size() && j < b.size()) {
            int c = point_cmp(a.point(i), b.point(j));
            if (c == 0) {
                if (keep_both) push(a.point(i));
                ++i;
                ++j;
            } else if (c < 0) {
                if (keep_a_only) push(a.point(i));
                ++i;
            } else {
                if (keep_b_only) push(b.point(j));
                ++j;
            }
        } else if (i < a.size()) {
            if (keep_a_only) push(a.point(i));
            ++i;
        } else {
            if (keep_b_only) push(b.point(j));
            ++j;
        }
    }
    return out;
}

}  // namespace

Cylinder realize(const CylinderSpec& spec, int level, const RingDescriptor& desc, LevelCache& cache,
                 const EnumOpts& opts) {
    if (spec.pro_cylinder())
        throw Error(ErrClass::precondition,
                    "pro-cylinder spec cannot be realized; use negligible() for its measure");
    if (level < spec.rank())
        throw Error(ErrClass::precondition, "realization level " + std::to_string(level) +
                                                " is below the spec rank " + std::to_string(spec.rank()));
    const Scheme& X = *spec.scheme();
    Ring ring(desc, level);
    const LevelSet& base = cache.get(X, desc, level, opts);
    Cylinder c;
    c.spec = spec;
    c.X = &X;
    c.desc = desc;
    c.level = level;
    CompiledSpec prog(spec);
    c.members = filter_set(base, ring, [&](std::span<const uint64_t> p) { return prog.eval(ring, p); });
    return c;
}

Cylinder promote(const Cylinder& c, int level, LevelCache& cache, const EnumOpts& opts) {
    if (level == c.level) return c;
    if (level < c.level) throw Error(ErrClass::precondition, "promote: level below realization");
    if (c.spec) return realize(*c.spec, level, c.desc, cache, opts);
    // extensional: lift through saturation
    Ring ring(c.desc, level);
    const LevelSet& base = cache.get(*c.X, c.desc, level, opts);
    Cylinder out;
    out.X = c.X;
    out.desc = c.desc;
    out.level = level;
    std::vector<uint64_t> buf(c.members.nvars);
    out.members = filter_set(base, ring, [&](std::span<const uint64_t> p) {
        for (int i = 0; i < c.members.nvars; ++i) buf[i] = ring.reduce(p[i], c.level);
        return c.members.contains(buf);
    });
    return out;
}

static std::pair<Cylinder, Cylinder> align(const Cylinder& a, const Cylinder& b, LevelCache& cache,
                                           const EnumOpts& opts) {
    if (a.X != b.X || !(a.desc == b.desc))
        throw Error(ErrClass::precondition, "cylinder operation across schemes or fields");
    int lvl = std::max(a.level, b.level);
    return {promote(a, lvl, cache, opts), promote(b, lvl, cache, opts)};
}

Cylinder cyl_and(const Cylinder& a, const Cylinder& b, LevelCache& cache, const EnumOpts& opts) {
    auto [pa, pb] = align(a, b, cache, opts);
    Cylinder out;
    out.X = pa.X;
    out.desc = pa.desc;
    out.level = pa.level;
    if (pa.spec && pb.spec) out.spec = spec_and(*pa.spec, *pb.spec);
    out.members = set_op(pa.members, pb.members, true, false, false);
    return out;
}

Cylinder cyl_or(const Cylinder& a, const Cylinder& b, LevelCache& cache, const EnumOpts& opts) {
    auto [pa, pb] = align(a, b, cache, opts);
    Cylinder out;
    out.X = pa.X;
    out.desc = pa.desc;
    out.level = pa.level;
    if (pa.spec && pb.spec) out.spec = spec_or(*pa.spec, *pb.spec);
    out.members = set_op(pa.members, pb.members, true, true, true);
    return out;
}

Cylinder cyl_not(const Cylinder& a, LevelCache& cache, const EnumOpts& opts) {
    const LevelSet& base = cache.get(*a.X, a.desc, a.level, opts);
    Cylinder out;
    out.X = a.X;
    out.desc = a.desc;
    out.level = a.level;
    if (a.spec) out.spec = spec_not(*a.spec);
    LevelSet all = base;  // base is already the full solution set
    out.members = set_op(all, a.members, false, true, false);
    return out;
}

CylinderSpec gr_e_spec(const Scheme& X, int e) {
    auto sing = singular_ideal(X);
    if (sing.empty()) return CylinderSpec::full(&X);
    CylinderSpec s = spec_not(CylinderSpec::full(&X));  // empty
    bool first = true;
    for (const auto& g : sing) {
        CylinderSpec a = CylinderSpec::atom(&X, g, CylAtom::Op::le, e);
        s = first ? a : spec_or(s, a);
        first = false;
    }
    return s;
}

Cylinder gr_e(const Scheme& X, int e, int level, const RingDescriptor& desc, LevelCache& cache,
              const EnumOpts& opts) {
    if (level < e) throw Error(ErrClass::precondition, "gr_e needs level >= e");
    return realize(gr_e_spec(X, e), level, desc, cache, opts);
}

Cylinder preimage(const Morphism& h, const Cylinder& A, LevelCache& cache, const EnumOpts& opts) {
    if (h.dst != A.X) throw Error(ErrClass::precondition, "preimage: cylinder lives on another scheme");
    Ring ring(A.desc, A.level);
    const LevelSet& base = cache.get(*h.src, A.desc, A.level, opts);
    Cylinder out;
    out.X = h.src;
    out.desc = A.desc;
    out.level = A.level;
    out.members = filter_set(base, ring, [&](std::span<const uint64_t> p) {
        auto img = h.apply(ring, p);
        return A.members.contains(img);
    });
    if (A.spec) out.spec = A.spec->pullback(h);
    return out;
}

ImageResult image_cylinder(const Morphism& h, const Cylinder& B, int jac_order, int gr_level,
                           LevelCache& cache, const EnumOpts& opts) {
    (void)gr_level;
    ImageResult res;
    res.jac_order = jac_order;
    int n = B.level;
    Ring ring(B.desc, n);
    const Scheme& X = *h.dst;

    auto image_set = [&](const Cylinder& src, const Ring& rg) {
        std::vector<std::vector<uint64_t>> pts;
        for (size_t i = 0; i < src.members.size(); ++i) {
            auto img = h.apply(rg, src.members.point(i));
            if (!point_on_scheme(X, rg, img))
                throw Error(ErrClass::precondition, "image: morphism leaves the target scheme");
            pts.push_back(std::move(img));
        }
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        LevelSet out;
        out.X = &X;
        out.desc = src.desc;
        out.level = rg.level();
        out.nvars = X.nvars();
        for (auto& p : pts) out.flat.insert(out.flat.end(), p.begin(), p.end());
        return out;
    };

    res.image.X = &X;
    res.image.desc = B.desc;
    res.image.level = n;
    res.image.members = image_set(B, ring);

    // saturation: the level-(n+1) image must be exactly the preimage of the
    // level-n image among level-(n+1) solutions
    Cylinder Bup = promote(B, n + 1, cache, opts);
    Ring ring_up(B.desc, n + 1);
    LevelSet img_up = image_set(Bup, ring_up);
    TruncateResult down = truncate_set(img_up, n);
    bool same_base = down.image.size() == res.image.members.size();
    if (same_base)
        for (size_t i = 0; i < down.image.size(); ++i)
            if (point_cmp(down.image.point(i), res.image.members.point(i)) != 0) {
                same_base = false;
                break;
            }
    const LevelSet& base_up = cache.get(X, B.desc, n + 1, opts);
    size_t preimage_count = 0;
    std::vector<uint64_t> buf(X.nvars());
    for (size_t i = 0; i < base_up.size(); ++i) {
        auto p = base_up.point(i);
        for (int j = 0; j < X.nvars(); ++j) buf[j] = ring_up.reduce(p[j], n);
        if (res.image.members.contains(buf)) ++preimage_count;
    }
    res.saturated = same_base && img_up.size() == preimage_count;
    if (!res.saturated)
        throw Error(ErrClass::precondition,
                    "image: saturation test failed at level " + std::to_string(n) +
                        "; realize the domain at level >= " + std::to_string(n + 1) + " and retry");
    return res;
}

// ---- measure ----

PiCount count_pi(const Scheme& X, const RingDescriptor& desc, int n,
                 const std::function<bool(const Ring&, std::span<const uint64_t>)>& pred, int min_det,
                 LevelCache& cache, const MeasureOpts& opts) {
    PiCount out;
    out.level = n;
    bool stable_everywhere = X.gens.empty() || X.declared_smooth;
    int start = std::max(n, min_det);

    auto image_count_at = [&](int m) -> BigInt {
        Ring ring(desc, m);
        const LevelSet& base = cache.get(X, desc, m, opts.enum_opts);
        std::set<std::vector<uint64_t>> image;
        std::vector<uint64_t> buf(X.nvars());
        for (size_t i = 0; i < base.size(); ++i) {
            auto p = base.point(i);
            if (!pred(ring, p)) continue;
            for (int j = 0; j < X.nvars(); ++j) buf[j] = ring.reduce(p[j], n);
            image.insert(buf);
        }
        return BigInt::from_u64(image.size());
    };

    if (stable_everywhere) {
        out.count = image_count_at(start);
        out.horizon = start;
        out.certified = true;
        return out;
    }
    // singular schemes: demand three consecutive equal image counts before
    // trusting the plateau (level-set images can stall early)
    BigInt prev;
    int streak = 0;
    bool have_prev = false;
    for (int m = start; m <= opts.max_level; ++m) {
        BigInt cur;
        try {
            cur = image_count_at(m);
        } catch (const Error& e) {
            if (e.cls() != ErrClass::budget) throw;
            break;  // report the last horizon reached, uncertified
        }
        streak = (have_prev && cur == prev) ? streak + 1 : 1;
        prev = cur;
        have_prev = true;
        out.count = cur;
        out.horizon = m;
        if (streak >= 3) {
            out.certified = true;
            return out;
        }
    }
    out.certified = false;
    return out;
}

namespace {

MeasureResult measure_impl(const CylinderSpec& A, const RingDescriptor& desc,
                           const std::function<bool(const Ring&, std::span<const uint64_t>)>* extra,
                           int extra_det, LevelCache& cache, const MeasureOpts& opts) {
    if (A.pro_cylinder())
        throw Error(ErrClass::precondition, "measure of a pro-cylinder: use negligible()");
    const Scheme& X = *A.scheme();
    int d = X.dim;
    uint64_t q = desc.q();
    bool smooth = X.gens.empty() || X.declared_smooth;
    int rank = std::max(A.rank(), extra_det);

    MeasureResult res;
    res.measure.q = q;
    std::vector<Poly> sing;
    if (!smooth) sing = singular_ideal(X);

    CompiledSpec Aprog(A);
    auto sing_progs = std::make_shared<std::map<int, std::vector<CompiledPoly>>>();
    auto member = [&, Aprog](const Ring& ring, std::span<const uint64_t> p) {
        if (!Aprog.eval(ring, p)) return false;
        return !extra || (*extra)(ring, p);
    };
    auto min_sing_ord = [&, sing_progs](const Ring& ring, std::span<const uint64_t> p) {
        auto it = sing_progs->find(ring.level());
        if (it == sing_progs->end()) {
            std::vector<CompiledPoly> progs;
            for (const auto& g : sing) progs.push_back(g.compile(ring));
            it = sing_progs->emplace(ring.level(), std::move(progs)).first;
        }
        int mv = kValNone;
        for (const auto& g : it->second) mv = std::min(mv, ring.val(g.eval(ring, p)));
        return mv;
    };

    BigInt qd = BigInt::from_u64(q).pow((unsigned)d);
    int e_cap = smooth ? 0 : std::min(opts.target_error + 2, opts.max_level / 2);

    Rational last_value, last_bound;
    bool have_partial = false, done = false;

    for (int E = 0; E <= e_cap && !done; ++E) {
        std::function<bool(const Ring&, std::span<const uint64_t>)> stable_pred =
            [&, E](const Ring& ring, std::span<const uint64_t> p) {
                if (!member(ring, p)) return false;
                return smooth || min_sing_ord(ring, p) <= E;
            };
        int det = std::max(rank, smooth ? 0 : E);

        // certify the stable part by the exact q^d ratio between levels
        bool certified = false;
        int n_used = -1, horizon_used = -1;
        BigInt c_used, prev_count;
        int prev_level = -1, prev_horizon = -1;
        bool have_prev = false;
        res.cert.stable_counts.clear();
        for (int n = det; n + 1 <= opts.max_level; ++n) {
            PiCount pc;
            try {
                pc = count_pi(X, desc, n, stable_pred, det, cache, opts);
            } catch (const Error& e) {
                if (e.cls() != ErrClass::budget) throw;
                break;
            }
            if (!pc.certified) break;
            if (have_prev && pc.count == prev_count * qd) {
                certified = true;
                n_used = prev_level;
                c_used = prev_count;
                horizon_used = std::max(prev_horizon, pc.horizon);
                res.cert.stable_counts.push_back({prev_level, prev_count});
                res.cert.stable_counts.push_back({n, pc.count});
                break;
            }
            prev_count = pc.count;
            prev_level = n;
            prev_horizon = pc.horizon;
            have_prev = true;
        }
        if (!certified) {
            res.cert.notes.push_back("stabilization not observed within budget at gr-level " +
                                     std::to_string(E));
            break;
        }

        Rational value = Rational::from_int(c_used) /
                         Rational::from_int(BigInt::from_u64(q).pow((unsigned)((n_used + 1) * d)));
        res.cert.gr_split = E;
        res.cert.stable_level = n_used;
        res.cert.lift_horizon = horizon_used;

        if (smooth) {
            res.measure.value = value;
            res.measure.err = Rational(0);
            res.measure.prov = RealizedMeasure::Provenance::exact;
            done = true;
            break;
        }

        // bound the remainder A minus gr_E by its realized normalized counts
        std::function<bool(const Ring&, std::span<const uint64_t>)> rem_pred =
            [&, E](const Ring& ring, std::span<const uint64_t> p) {
                if (!member(ring, p)) return false;
                return min_sing_ord(ring, p) > E;
            };
        Rational bound(0);
        bool rem_empty = true, rem_data = false;
        for (int n = det; n <= std::min(n_used + 1, opts.max_level); ++n) {
            PiCount rc;
            try {
                rc = count_pi(X, desc, n, rem_pred, det, cache, opts);
            } catch (const Error& e) {
                if (e.cls() != ErrClass::budget) throw;
                break;
            }
            rem_data = true;
            if (!rc.certified || !rc.count.is_zero()) rem_empty = false;
            Rational norm = Rational::from_int(rc.count) /
                            Rational::from_int(BigInt::from_u64(q).pow((unsigned)((n + 1) * d)));
            if (norm > bound) bound = norm;
        }
        if (!rem_data) rem_empty = false;

        last_value = value;
        last_bound = bound;
        have_partial = true;

        if (rem_empty) {
            res.measure.value = value;
            res.measure.err = Rational(0);
            res.measure.prov = RealizedMeasure::Provenance::stabilized;
            done = true;
            break;
        }
        Rational target = Rational::pow_int(q, -(long long)opts.target_error);
        if (bound <= target) {
            res.measure.value = value;
            res.measure.err = bound;
            res.measure.prov = RealizedMeasure::Provenance::tail_bounded;
            res.cert.remainder_bound = bound;
            res.cert.slack_C = bound * Rational::pow_int(q, E + 1);
            done = true;
            break;
        }
    }
    if (!done) {
        res.resolved = false;
        res.measure.prov = RealizedMeasure::Provenance::unresolved;
        if (have_partial) {
            res.measure.value = last_value;
            res.measure.err = last_bound;
            res.cert.remainder_bound = last_bound;
            res.interval_lo = last_value;
            res.interval_hi = last_value + last_bound;
            res.cert.notes.push_back("partial bounds only: value in the recorded interval");
        }
    }
    return res;
}

}  // namespace

std::optional<MotivicValue> interpolate_laurent(
    const RingDescriptor& base, int smax, int top_start, int window_floor,
    const std::function<std::optional<Rational>(const RingDescriptor&)>& value_at) {
    std::vector<std::pair<uint64_t, Rational>> samples;
    for (int s = 1; s <= smax; ++s) {
        RingDescriptor ds = base;
        ds.f = base.f * s;
        if (ds.f > 4) break;
        std::optional<Rational> v;
        try {
            v = value_at(ds);
        } catch (const Error&) {
            v = std::nullopt;
        }
        if (!v) break;
        samples.push_back({ds.q(), *v});
    }
    if (samples.size() < 2) return std::nullopt;
    size_t k = samples.size();
    bool all_zero = true;
    for (const auto& [q, v] : samples) all_zero = all_zero && v.is_zero();
    if (all_zero) return MotivicValue(0);
    for (int top = top_start; top >= window_floor; --top) {
        std::vector<std::vector<Rational>> M(k, std::vector<Rational>(k));
        std::vector<Rational> b(k);
        for (size_t i = 0; i < k; ++i) {
            for (size_t j = 0; j < k; ++j)
                M[i][j] = Rational::pow_int(samples[i].first, top - (long long)j);
            b[i] = samples[i].second;
        }
        auto sol = solve_linear(M, b);
        if (!sol) continue;
        bool usable = true;
        for (const auto& c : *sol)
            if (!(c.den() == BigInt(1)) || !c.num().fits_ll()) {
                usable = false;
                break;
            }
        if (!usable) continue;
        MotivicValue mv;
        bool nonzero = false;
        for (size_t j = 0; j < k; ++j) {
            long long c = (*sol)[j].num().to_ll();
            if (c) nonzero = true;
            mv = mv + MotivicValue::term(c, top - (int)j);
        }
        if (!nonzero) continue;
        return mv;
    }
    return std::nullopt;
}

MeasureResult measure_spec(const CylinderSpec& A, const RingDescriptor& desc, LevelCache& cache,
                           const MeasureOpts& opts) {
    MeasureResult res = measure_impl(A, desc, nullptr, 0, cache, opts);
    if (opts.interpolate && res.resolved) {
        const Scheme& X = *A.scheme();
        auto value_at = [&](const RingDescriptor& ds) -> std::optional<Rational> {
            if (ds.f == desc.f) return res.measure.value;
            MeasureOpts o2 = opts;
            o2.interpolate = false;
            MeasureResult rs = measure_impl(A, ds, nullptr, 0, cache, o2);
            if (!rs.resolved) return std::nullopt;
            return rs.measure.value;
        };
        auto mv = interpolate_laurent(desc, opts.interp_smax, X.dim, -(opts.target_error + 4),
                                      value_at);
        if (mv) {
            auto ee = res.measure.error_exponent();
            if (!res.measure.exact() && ee) *mv = mv->truncated(*ee);
            res.interpolated = mv;
            res.cert.notes.push_back(
                "interpolated over residue extensions (consistency on sampled s only)");
        }
    }
    return res;
}

MeasureResult measure_pred(const CylinderSpec& A, const RingDescriptor& desc,
                           const std::function<bool(const Ring&, std::span<const uint64_t>)>& pred,
                           int pred_det_level, LevelCache& cache, const MeasureOpts& opts) {
    return measure_impl(A, desc, &pred, pred_det_level, cache, opts);
}

// ---- negligibility ----

NegligibleCertificate negligible(const Scheme& X, const std::vector<Poly>& zgens, int e_max,
                                 const RingDescriptor& desc, LevelCache& cache,
                                 const MeasureOpts& opts) {
    NegligibleCertificate cert;
    if (zgens.empty()) throw Error(ErrClass::precondition, "negligible: no generators for Z");
    uint64_t q = desc.q();
    int d = X.dim;

    // refuse Z = X: every level-0 point inside the tube
    {
        Ring r0(desc, 0);
        const LevelSet& base = cache.get(X, desc, 0, opts.enum_opts);
        bool all_in = true;
        for (size_t i = 0; i < base.size() && all_in; ++i) {
            for (const auto& g : zgens)
                if (g.eval(r0, base.point(i)) != 0) {
                    all_in = false;
                    break;
                }
        }
        if (all_in && base.size() > 0)
            throw Error(ErrClass::precondition,
                        "negligible: Z contains the whole level-0 locus (dimension not smaller)");
    }

    Scheme Z = X;
    Z.name = X.name + "_tube";
    Z.declared_smooth = false;
    Z.declared_ci = false;
    Z.etale.clear();
    for (const auto& g : zgens) Z.gens.push_back(g);
    Z.dim = std::max(d - 1, 0);

    for (int e = 0; e <= e_max; ++e) {
        NegligibleRow row;
        row.e = e;
        // empirical Greenberg level for Z at truncation level e
        std::optional<int> gamma;
        for (int H = e + 2; H <= opts.max_level; ++H) {
            GreenbergEstimate ge;
            try {
                ge = greenberg_estimate(Z, e, desc, H, opts.enum_opts);
            } catch (const Error& err) {
                if (err.cls() != ErrClass::budget) throw;
                break;
            }
            if (ge.m_hat) {
                // stable against one more level of horizon
                if (H == opts.max_level || *ge.m_hat < H - 1) {
                    gamma = *ge.m_hat;
                    break;
                }
                gamma = *ge.m_hat;
            }
        }
        if (!gamma) {
            cert.note = "no empirical Greenberg level within budget at e = " + std::to_string(e);
            cert.ok = false;
            return cert;
        }
        row.gamma_level = *gamma;
        int i = std::max(*gamma, e);
        row.n = i;

        std::function<bool(const Ring&, std::span<const uint64_t>)> tube =
            [&](const Ring& ring, std::span<const uint64_t> p) {
                for (const auto& g : zgens) {
                    int v = ring.val(g.eval(ring, p));
                    if (v != kValNone && v <= i) return false;
                }
                return true;
            };
        PiCount pc = count_pi(X, desc, i, tube, i, cache, opts);
        row.count = pc.count;
        row.normalized = Rational::from_int(pc.count) /
                         Rational::from_int(BigInt::from_u64(q).pow((unsigned)((i + 1) * d)));
        if (e == 0) {
            cert.calibrated_C = row.normalized * Rational::pow_int(q, 1);
            row.bound = row.normalized;
            row.ok = true;
        } else {
            row.bound = cert.calibrated_C * Rational::pow_int(q, -(long long)(e + 1));
            row.ok = row.normalized <= row.bound;
        }
        cert.rows.push_back(row);
    }
    cert.ok = true;
    for (const auto& r : cert.rows) cert.ok = cert.ok && r.ok;
    return cert;
}

}  // namespace gm
