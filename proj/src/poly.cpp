#include "gm/poly.hpp"

#include <algorithm>
#include <sstream>

#include "gm/error.hpp"

namespace gm {

uint64_t CompiledPoly::eval(const Ring& ring, std::span<const uint64_t> pt) const {
    uint64_t acc = 0;
    for (const auto& t : terms) {
        uint64_t v = t.coef;
        for (size_t i = 0; i < t.exps.size(); ++i)
            for (uint16_t e = 0; e < t.exps[i]; ++e) v = ring.mul(v, pt[i]);
        acc = ring.add(acc, v);
    }
    return acc;
}

void Poly::add_term(const std::vector<uint16_t>& exps, uint32_t pi_pow, const BigInt& c) {
    if (c.is_zero()) return;
    PiCoef& pc = terms_[exps];
    BigInt& slot = pc[pi_pow];
    slot += c;
    if (slot.is_zero()) pc.erase(pi_pow);
    if (pc.empty()) terms_.erase(exps);
}

Poly Poly::constant(long long c, int nvars) { return constant_big(BigInt(c), 0, nvars); }

Poly Poly::constant_big(const BigInt& c, uint32_t pi_pow, int nvars) {
    Poly p(nvars);
    p.add_term(std::vector<uint16_t>(nvars, 0), pi_pow, c);
    return p;
}

Poly Poly::variable(int idx, int nvars) {
    Poly p(nvars);
    std::vector<uint16_t> e(nvars, 0);
    e[idx] = 1;
    p.add_term(e, 0, BigInt(1));
    return p;
}

Poly Poly::operator+(const Poly& o) const {
    Poly r = *this;
    for (const auto& [e, pc] : o.terms_)
        for (const auto& [k, c] : pc) r.add_term(e, k, c);
    return r;
}

Poly Poly::operator-() const {
    Poly r(nvars_);
    for (const auto& [e, pc] : terms_)
        for (const auto& [k, c] : pc) r.add_term(e, k, -c);
    return r;
}

Poly Poly::operator-(const Poly& o) const { return *this + (-o); }

Poly Poly::operator*(const Poly& o) const {
    Poly r(nvars_);
    for (const auto& [ea, pa] : terms_)
        for (const auto& [eb, pb] : o.terms_) {
            std::vector<uint16_t> e(nvars_);
            for (int i = 0; i < nvars_; ++i) e[i] = ea[i] + eb[i];
            for (const auto& [ka, ca] : pa)
                for (const auto& [kb, cb] : pb) r.add_term(e, ka + kb, ca * cb);
        }
    return r;
}

Poly Poly::derivative(int var) const {
    Poly r(nvars_);
    for (const auto& [e, pc] : terms_) {
        if (e[var] == 0) continue;
        std::vector<uint16_t> de = e;
        de[var] -= 1;
        for (const auto& [k, c] : pc) r.add_term(de, k, c * BigInt(e[var]));
    }
    return r;
}

Poly Poly::subst(const std::vector<Poly>& images) const {
    if ((int)images.size() != nvars_)
        throw Error(ErrClass::precondition, "subst: wrong number of images");
    int out_vars = images.empty() ? 0 : images[0].nvars();
    Poly r(out_vars);
    for (const auto& [e, pc] : terms_) {
        Poly term(out_vars);
        for (const auto& [k, c] : pc) term = term + constant_big(c, k, out_vars);
        for (int i = 0; i < nvars_; ++i)
            for (uint16_t t = 0; t < e[i]; ++t) term = term * images[i];
        r = r + term;
    }
    return r;
}

CompiledPoly Poly::compile(const Ring& ring) const {
    CompiledPoly cp;
    for (const auto& [e, pc] : terms_) {
        uint64_t coef = 0;
        for (const auto& [k, c] : pc)
            coef = ring.add(coef, ring.shift_up(ring.from_bigint(c), (int)k));
        if (coef == 0) continue;
        cp.terms.push_back({coef, e});
    }
    return cp;
}

uint64_t Poly::eval(const Ring& ring, std::span<const uint64_t> pt) const {
    return compile(ring).eval(ring, pt);
}

bool Poly::zero_mod_pi(uint32_t p) const {
    BigInt bp((long long)p);
    for (const auto& [e, pc] : terms_)
        for (const auto& [k, c] : pc)
            if (k == 0 && !(c % bp).is_zero()) return false;
    return true;
}

int Poly::total_degree() const {
    int deg = 0;
    for (const auto& [e, pc] : terms_) {
        int d = 0;
        for (uint16_t x : e) d += x;
        deg = std::max(deg, d);
    }
    return deg;
}

std::string Poly::render(const std::vector<std::string>& vars) const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [e, pc] : terms_) {
        for (const auto& [k, c] : pc) {
            BigInt a = c.abs();
            bool neg = c.is_neg();
            if (first) {
                if (neg) os << "-";
                first = false;
            } else {
                os << (neg ? " - " : " + ");
            }
            std::vector<std::string> factors;
            bool has_monomial = k > 0;
            for (int i = 0; i < nvars_; ++i) has_monomial = has_monomial || e[i] > 0;
            if (!(a == BigInt(1)) || !has_monomial) factors.push_back(a.str());
            if (k == 1)
                factors.push_back("pi");
            else if (k > 1)
                factors.push_back("pi^" + std::to_string(k));
            for (int i = 0; i < nvars_; ++i) {
                if (e[i] == 1)
                    factors.push_back(vars[i]);
                else if (e[i] > 1)
                    factors.push_back(vars[i] + "^" + std::to_string(e[i]));
            }
            for (size_t i = 0; i < factors.size(); ++i) {
                if (i) os << "*";
                os << factors[i];
            }
        }
    }
    return os.str();
}

namespace {

struct PolyLexer {
    const std::string& s;
    size_t pos = 0;

    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }
    bool eof() {
        skip_ws();
        return pos >= s.size();
    }
    char peek() {
        skip_ws();
        return pos < s.size() ? s[pos] : '\0';
    }
    [[noreturn]] void fail(const std::string& msg) {
        throw Error(ErrClass::parse, "polynomial parse error at column " + std::to_string(pos + 1) +
                                         ": " + msg + " in \"" + s + "\"");
    }
    BigInt integer() {
        skip_ws();
        size_t start = pos;
        while (pos < s.size() && isdigit((unsigned char)s[pos])) ++pos;
        if (start == pos) fail("expected integer");
        return BigInt(s.substr(start, pos - start));
    }
    unsigned exponent() {
        skip_ws();
        size_t start = pos;
        while (pos < s.size() && isdigit((unsigned char)s[pos])) ++pos;
        if (start == pos) fail("expected exponent");
        return (unsigned)std::stoul(s.substr(start, pos - start));
    }
    std::string ident_chunk() {
        skip_ws();
        size_t start = pos;
        while (pos < s.size() && (isalpha((unsigned char)s[pos]) || s[pos] == '_')) ++pos;
        return s.substr(start, pos - start);
    }
};

}  // namespace

Poly Poly::parse(const std::string& text, const std::vector<std::string>& vars) {
    int nvars = (int)vars.size();
    PolyLexer lx{text};
    Poly result(nvars);

    auto parse_term = [&]() -> Poly {
        Poly term = Poly::constant(1, nvars);
        bool any = false;
        for (;;) {
            char c = lx.peek();
            if (c == '*') {
                if (!any) lx.fail("unexpected '*'");
                ++lx.pos;
                c = lx.peek();
            }
            if (isdigit((unsigned char)c)) {
                BigInt n = lx.integer();
                term = term * Poly::constant_big(n, 0, nvars);
                any = true;
                continue;
            }
            if (isalpha((unsigned char)c) || c == '_') {
                std::string chunk = lx.ident_chunk();
                size_t off = 0;
                while (off < chunk.size()) {
                    // greedy longest match against declared names and 'pi'
                    size_t best = 0;
                    int var_idx = -1;
                    bool is_pi = false;
                    for (int i = 0; i < nvars; ++i)
                        if (chunk.compare(off, vars[i].size(), vars[i]) == 0 && vars[i].size() > best) {
                            best = vars[i].size();
                            var_idx = i;
                            is_pi = false;
                        }
                    if (chunk.compare(off, 2, "pi") == 0 && 2 > best) {
                        best = 2;
                        is_pi = true;
                    }
                    if (best == 0) {
                        lx.pos -= chunk.size() - off;
                        lx.fail("unknown variable '" + chunk.substr(off) + "'");
                    }
                    off += best;
                    unsigned e = 1;
                    if (off == chunk.size() && lx.peek() == '^') {
                        ++lx.pos;
                        e = lx.exponent();
                    }
                    Poly base = is_pi ? Poly::pi(nvars) : Poly::variable(var_idx, nvars);
                    for (unsigned i = 0; i < e; ++i) term = term * base;
                }
                any = true;
                continue;
            }
            break;
        }
        if (!any) lx.fail("expected term");
        return term;
    };

    bool neg = false;
    if (lx.peek() == '-') {
        neg = true;
        ++lx.pos;
    } else if (lx.peek() == '+') {
        ++lx.pos;
    }
    if (lx.eof()) lx.fail("empty polynomial");
    Poly t = parse_term();
    result = neg ? -t : t;
    while (!lx.eof()) {
        char c = lx.peek();
        if (c == '+' || c == '-') {
            ++lx.pos;
            if (lx.eof()) lx.fail("dangling operator");
            Poly u = parse_term();
            result = c == '+' ? result + u : result - u;
        } else {
            lx.fail(std::string("unexpected character '") + c + "'");
        }
    }
    return result;
}

Poly det_poly(const std::vector<std::vector<Poly>>& m) {
    size_t k = m.size();
    if (k == 0) throw Error(ErrClass::precondition, "det of empty matrix");
    int nv = m[0][0].nvars();
    if (k == 1) return m[0][0];
    Poly acc(nv);
    for (size_t j = 0; j < k; ++j) {
        std::vector<std::vector<Poly>> sub;
        for (size_t r = 1; r < k; ++r) {
            std::vector<Poly> row;
            for (size_t c = 0; c < k; ++c)
                if (c != j) row.push_back(m[r][c]);
            sub.push_back(std::move(row));
        }
        Poly cof = m[0][j] * det_poly(sub);
        acc = (j % 2 == 0) ? acc + cof : acc - cof;
    }
    return acc;
}

}  // namespace gm
