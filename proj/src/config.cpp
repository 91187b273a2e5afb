#include "gm/config.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

#include "gm/error.hpp"

namespace gm {

const Scheme* JobConfig::find_scheme(const std::string& name) const {
    for (const auto& s : schemes)
        if (s.name == name) return &s;
    return nullptr;
}

const Morphism* JobConfig::find_morphism(const std::string& name) const {
    for (const auto& m : morphisms)
        if (m.name == name) return &m;
    return nullptr;
}

const JobConfig::NamedText* JobConfig::find_cylinder(const std::string& name) const {
    for (const auto& c : cylinders)
        if (c.name == name) return &c;
    return nullptr;
}

const JobConfig::NamedText* JobConfig::find_integrand(const std::string& name) const {
    for (const auto& c : integrands)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

struct Cursor {
    const std::string& s;
    size_t pos = 0;
    int line = 1, col = 1;

    bool eof() const { return pos >= s.size(); }
    char peek() const { return eof() ? '\0' : s[pos]; }
    char get() {
        char c = s[pos++];
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        return c;
    }
    void skip_ws_and_comments(bool stop_at_newline = false) {
        while (!eof()) {
            char c = peek();
            if (c == '#') {
                while (!eof() && peek() != '\n') get();
            } else if (c == '\n') {
                if (stop_at_newline) return;
                get();
            } else if (isspace((unsigned char)c)) {
                get();
            } else {
                return;
            }
        }
    }
};

struct Parser {
    Cursor cur;
    std::vector<ParseIssue>& issues;

    void issue(const std::string& msg) { issues.push_back({cur.line, cur.col, msg}); }

    void skip_to_statement_end() {
        int depth = 0;
        while (!cur.eof()) {
            char c = cur.peek();
            if (c == '}' && depth == 0) return;  // leave block closers to the caller
            if (c == '{' || c == '[') ++depth;
            if (c == '}' || c == ']') --depth;
            if (depth <= 0 && (c == '\n' || c == ';')) {
                cur.get();
                return;
            }
            cur.get();
        }
    }

    bool eat(char c) {
        cur.skip_ws_and_comments();
        if (cur.peek() == c) {
            cur.get();
            return true;
        }
        return false;
    }

    bool eat_tok(const char* tok) {
        cur.skip_ws_and_comments();
        size_t len = strlen(tok);
        if (cur.s.compare(cur.pos, len, tok) == 0) {
            for (size_t i = 0; i < len; ++i) cur.get();
            return true;
        }
        return false;
    }

    std::string ident() {
        cur.skip_ws_and_comments();
        std::string out;
        while (!cur.eof() && (isalnum((unsigned char)cur.peek()) || cur.peek() == '_' || cur.peek() == '-'))
            out.push_back(cur.get());
        return out;
    }

    std::string quoted() {
        cur.skip_ws_and_comments();
        if (cur.peek() != '"') {
            issue("expected a quoted string");
            return "";
        }
        cur.get();
        std::string out;
        while (!cur.eof() && cur.peek() != '"') out.push_back(cur.get());
        if (cur.eof()) {
            issue("unterminated string");
            return out;
        }
        cur.get();
        return out;
    }

    // value forms: "text" | [a, b, ...] | bare-token
    std::vector<std::string> list_value(bool stop_at_comma = false) {
        std::vector<std::string> out;
        cur.skip_ws_and_comments();
        if (cur.peek() == '[') {
            cur.get();
            for (;;) {
                cur.skip_ws_and_comments();
                if (cur.peek() == ']') {
                    cur.get();
                    break;
                }
                if (cur.peek() == '"') {
                    out.push_back(quoted());
                } else {
                    std::string item;
                    int depth = 0;
                    while (!cur.eof()) {
                        char c = cur.peek();
                        if (c == '(') ++depth;
                        if (c == ')') --depth;
                        if (depth == 0 && (c == ',' || c == ']')) break;
                        item.push_back(cur.get());
                    }
                    while (!item.empty() && isspace((unsigned char)item.back())) item.pop_back();
                    if (!item.empty()) out.push_back(item);
                }
                cur.skip_ws_and_comments();
                if (cur.peek() == ',') cur.get();
            }
            return out;
        }
        if (cur.peek() == '"') {
            out.push_back(quoted());
            return out;
        }
        std::string bare;
        while (!cur.eof()) {
            char c = cur.peek();
            if (c == '\n' || c == ';' || c == '#' || c == '}') break;
            if (stop_at_comma && c == ',') break;
            bare.push_back(cur.get());
        }
        while (!bare.empty() && isspace((unsigned char)bare.back())) bare.pop_back();
        if (!bare.empty()) out.push_back(bare);
        return out;
    }

    std::optional<long long> integer_value(const std::string& text) {
        try {
            size_t used = 0;
            long long v = std::stoll(text, &used);
            if (used != text.size()) return std::nullopt;
            return v;
        } catch (...) {
            return std::nullopt;
        }
    }
};

struct PendingMorphism {
    std::string name, src, dst;
    std::vector<std::pair<std::string, std::string>> coord_texts;  // target var -> poly text
    int line = 0;
};

}  // namespace

ConfigParseResult parse_config(const std::string& text) {
    ConfigParseResult result;
    JobConfig& cfg = result.config;
    Parser P{Cursor{text}, result.issues};
    std::vector<PendingMorphism> pending;

    auto parse_fields = [&](std::map<std::string, std::vector<std::string>>& fields, bool braces) {
        for (;;) {
            P.cur.skip_ws_and_comments();
            if (P.cur.eof()) break;
            if (braces && P.cur.peek() == '}') {
                P.cur.get();
                break;
            }
            if (P.cur.peek() == ',') {
                P.cur.get();
                continue;
            }
            if (P.cur.peek() == ';' || P.cur.peek() == '\n') {
                P.cur.get();
                if (!braces) {
                    // single-line form ends at a blank separator before a keyword
                    size_t save = P.cur.pos;
                    Cursor probe = P.cur;
                    probe.skip_ws_and_comments();
                    (void)save;
                    std::string next;
                    size_t pp = probe.pos;
                    while (pp < text.size() && (isalnum((unsigned char)text[pp]) || text[pp] == '_'))
                        next.push_back(text[pp++]);
                    bool keyword = next == "scheme" || next == "morphism" || next == "cylinder" ||
                                   next == "ring" || next == "integrand" || next == "wild";
                    // a bare "key = ..." continues the current block only for
                    // scheme field names
                    bool field = next == "vars" || next == "gens" || next == "dim" ||
                                 next == "smooth" || next == "ci" || next == "etale";
                    if (keyword || (!field && !next.empty())) break;
                }
                continue;
            }
            std::string key = P.ident();
            if (key.empty()) {
                P.issue("expected field name");
                P.skip_to_statement_end();
                if (!braces) break;
                continue;
            }
            if (!P.eat('=')) {
                P.issue("expected '=' after '" + key + "'");
                P.skip_to_statement_end();
                if (!braces) break;
                continue;
            }
            fields[key] = P.list_value(braces);
        }
    };

    auto build_scheme = [&](const std::string& name,
                            std::map<std::string, std::vector<std::string>>& fields, int line) {
        Scheme s;
        s.name = name;
        s.base = cfg.ring;
        if (fields.count("vars")) s.vars = fields["vars"];
        if (s.vars.empty()) {
            result.issues.push_back({line, 1, "scheme " + name + ": vars missing or empty"});
            return;
        }
        if (fields.count("gens"))
            for (const auto& g : fields["gens"]) {
                try {
                    s.gens.push_back(Poly::parse(g, s.vars));
                } catch (const Error& e) {
                    result.issues.push_back({line, 1, std::string(e.what())});
                    return;
                }
            }
        s.dim = (int)s.vars.size() - (int)s.gens.size();
        if (fields.count("dim")) {
            auto v = P.integer_value(fields["dim"].empty() ? "" : fields["dim"][0]);
            if (!v) {
                result.issues.push_back({line, 1, "scheme " + name + ": bad dim"});
                return;
            }
            s.dim = (int)*v;
        }
        if (fields.count("smooth")) s.declared_smooth = !fields["smooth"].empty() && fields["smooth"][0] == "true";
        if (fields.count("ci")) s.declared_ci = !fields["ci"].empty() && fields["ci"][0] == "true";
        if (fields.count("etale"))
            for (const auto& e : fields["etale"]) {
                auto it = std::find(s.vars.begin(), s.vars.end(), e);
                if (it == s.vars.end()) {
                    result.issues.push_back({line, 1, "scheme " + name + ": unknown etale variable " + e});
                    return;
                }
                s.etale.push_back((int)(it - s.vars.begin()));
            }
        try {
            s.validate();
        } catch (const Error& e) {
            result.issues.push_back({line, 1, std::string(e.what())});
            return;
        }
        cfg.schemes.push_back(std::move(s));
    };

    for (;;) {
        P.cur.skip_ws_and_comments();
        while (!P.cur.eof() && P.cur.peek() == ';') {
            P.cur.get();
            P.cur.skip_ws_and_comments();
        }
        if (P.cur.eof()) break;
        int line = P.cur.line;
        std::string kw = P.ident();
        if (kw.empty()) {
            P.issue("expected a statement");
            P.skip_to_statement_end();
            continue;
        }
        if (kw == "ring") {
            if (!P.eat('=') || !P.eat('{')) {
                P.issue("expected ring = { ... }");
                P.skip_to_statement_end();
                continue;
            }
            std::map<std::string, std::vector<std::string>> fields;
            parse_fields(fields, true);
            std::string kind = fields.count("kind") && !fields["kind"].empty() ? fields["kind"][0] : "";
            if (kind == "eq")
                cfg.ring.kind = RingKind::equal_char;
            else if (kind == "padic" || kind == "p-adic")
                cfg.ring.kind = RingKind::p_adic;
            else
                result.issues.push_back({line, 1, "ring kind must be \"eq\" or \"padic\""});
            if (fields.count("p") && !fields["p"].empty()) {
                auto v = P.integer_value(fields["p"][0]);
                if (v && *v >= 2)
                    cfg.ring.p = (uint32_t)*v;
                else
                    result.issues.push_back({line, 1, "bad prime p"});
            }
            if (fields.count("f") && !fields["f"].empty()) {
                auto v = P.integer_value(fields["f"][0]);
                if (v && *v >= 1)
                    cfg.ring.f = (uint32_t)*v;
                else
                    result.issues.push_back({line, 1, "bad extension degree f"});
            }
            if (!is_prime(cfg.ring.p)) result.issues.push_back({line, 1, "p is not prime"});
            cfg.ring_set = true;
            continue;
        }
        if (kw == "scheme") {
            P.cur.skip_ws_and_comments();
            std::string name;
            if (isalpha((unsigned char)P.cur.peek())) name = P.ident();
            std::map<std::string, std::vector<std::string>> fields;
            if (P.eat('{')) {
                parse_fields(fields, true);
            } else if (P.eat(':')) {
                if (name.empty()) name = "main";
                parse_fields(fields, false);
            } else if (P.eat('=')) {
                // e.g. `scheme = plane` selects the default scheme
                auto v = P.list_value();
                if (!v.empty()) cfg.default_scheme = v[0];
                continue;
            } else {
                P.issue("expected '{', ':' or '=' after scheme");
                P.skip_to_statement_end();
                continue;
            }
            if (name.empty()) name = "main";
            build_scheme(name, fields, line);
            continue;
        }
        if (kw == "morphism") {
            PendingMorphism pm;
            pm.line = line;
            pm.name = P.ident();
            if (!P.eat(':')) {
                P.issue("expected ':' after morphism name");
                P.skip_to_statement_end();
                continue;
            }
            pm.src = P.ident();
            if (!P.eat_tok("->")) {
                P.issue("expected '->' in morphism header");
                P.skip_to_statement_end();
                continue;
            }
            pm.dst = P.ident();
            if (!P.eat('{')) {
                P.issue("expected '{' after morphism header");
                P.skip_to_statement_end();
                continue;
            }
            std::map<std::string, std::vector<std::string>> fields;
            parse_fields(fields, true);
            for (auto& [k, v] : fields)
                if (!v.empty()) pm.coord_texts.push_back({k, v[0]});
            pending.push_back(std::move(pm));
            continue;
        }
        if (kw == "cylinder" || kw == "integrand") {
            JobConfig::NamedText nt;
            nt.line = line;
            nt.name = P.ident();
            if (!P.eat_tok("on")) {
                P.issue("expected 'on <scheme>' after the name");
                P.skip_to_statement_end();
                continue;
            }
            nt.scheme = P.ident();
            if (!P.eat('=')) {
                P.issue("expected '='");
                P.skip_to_statement_end();
                continue;
            }
            auto v = P.list_value();
            nt.text = v.empty() ? "" : v[0];
            (kw == "cylinder" ? cfg.cylinders : cfg.integrands).push_back(std::move(nt));
            continue;
        }
        if (kw == "wild") {
            if (!P.eat_tok("on")) {
                P.issue("expected 'on <scheme>'");
                P.skip_to_statement_end();
                continue;
            }
            std::string sname = P.ident();
            if (!P.eat('=')) {
                P.issue("expected '='");
                P.skip_to_statement_end();
                continue;
            }
            cfg.wild[sname] = P.list_value();
            continue;
        }
        // bare parameters: key = value
        if (P.eat('=')) {
            auto vals = P.list_value();
            std::string v = vals.empty() ? "" : vals[0];
            if (kw == "levels") {
                size_t dots = v.find("..");
                if (dots == std::string::npos) {
                    auto x = P.integer_value(v);
                    if (x) cfg.level_lo = cfg.level_hi = (int)*x;
                } else {
                    auto lo = P.integer_value(v.substr(0, dots));
                    auto hi = P.integer_value(v.substr(dots + 2));
                    if (lo && hi) {
                        cfg.level_lo = (int)*lo;
                        cfg.level_hi = (int)*hi;
                    } else {
                        P.issue("bad levels range");
                    }
                }
            } else if (kw == "q") {
                for (const auto& t : vals) {
                    std::stringstream ss(t);
                    std::string item;
                    while (std::getline(ss, item, ',')) {
                        auto x = P.integer_value(item);
                        if (x && *x >= 2) cfg.qs.push_back((uint64_t)*x);
                    }
                }
            } else if (kw == "precision") {
                auto x = P.integer_value(v);
                if (x) cfg.precision = (int)*x;
            } else if (kw == "budget") {
                auto x = P.integer_value(v);
                if (x && *x > 0) cfg.budget = (uint64_t)*x;
            } else if (kw == "threads") {
                auto x = P.integer_value(v);
                if (x && *x >= 1) cfg.threads = (int)*x;
            } else if (kw == "charts") {
                cfg.charts = v;
                for (size_t i = 1; i < vals.size(); ++i) cfg.charts += "," + vals[i];
            } else if (kw == "target") {
                cfg.target = v;
            } else {
                P.issue("unknown parameter '" + kw + "'");
            }
            continue;
        }
        P.issue("unrecognized statement '" + kw + "'");
        P.skip_to_statement_end();
    }

    // resolve morphisms now that all schemes exist
    for (auto& pm : pending) {
        const Scheme* src = cfg.find_scheme(pm.src);
        const Scheme* dst = cfg.find_scheme(pm.dst);
        if (!src || !dst) {
            result.issues.push_back(
                {pm.line, 1, "morphism " + pm.name + ": unresolved scheme reference"});
            continue;
        }
        Morphism m;
        m.name = pm.name;
        m.src = src;
        m.dst = dst;
        m.coords.assign(dst->nvars(), Poly(src->nvars()));
        std::vector<bool> seen(dst->nvars(), false);
        bool ok = true;
        for (const auto& [var, text2] : pm.coord_texts) {
            auto it = std::find(dst->vars.begin(), dst->vars.end(), var);
            if (it == dst->vars.end()) {
                result.issues.push_back({pm.line, 1, "morphism " + pm.name + ": unknown target variable " + var});
                ok = false;
                break;
            }
            try {
                m.coords[it - dst->vars.begin()] = Poly::parse(text2, src->vars);
                seen[it - dst->vars.begin()] = true;
            } catch (const Error& e) {
                result.issues.push_back({pm.line, 1, std::string(e.what())});
                ok = false;
                break;
            }
        }
        for (int i = 0; ok && i < dst->nvars(); ++i)
            if (!seen[i]) {
                result.issues.push_back(
                    {pm.line, 1, "morphism " + pm.name + ": missing coordinate for " + dst->vars[i]});
                ok = false;
            }
        if (ok) cfg.morphisms.push_back(std::move(m));
    }

    // cross-references of named cylinders and integrands
    for (const auto& c : cfg.cylinders)
        if (!cfg.find_scheme(c.scheme))
            result.issues.push_back({c.line, 1, "cylinder " + c.name + ": unknown scheme " + c.scheme});
    for (const auto& c : cfg.integrands)
        if (!cfg.find_scheme(c.scheme))
            result.issues.push_back({c.line, 1, "integrand " + c.name + ": unknown scheme " + c.scheme});
    return result;
}

void merge_config(JobConfig& a, const JobConfig& b) {
    if (b.ring_set) {
        a.ring = b.ring;
        a.ring_set = true;
    }
    // schemes must be re-pointed: copy and fix morphism pointers by name
    for (const auto& s : b.schemes) a.schemes.push_back(s);
    for (const auto& m : b.morphisms) {
        Morphism copy = m;
        copy.src = a.find_scheme(m.src->name);
        copy.dst = a.find_scheme(m.dst->name);
        a.morphisms.push_back(copy);
    }
    for (const auto& c : b.cylinders) a.cylinders.push_back(c);
    for (const auto& c : b.integrands) a.integrands.push_back(c);
    for (const auto& [k, v] : b.wild) a.wild[k] = v;
    a.level_lo = b.level_lo;
    a.level_hi = b.level_hi;
    if (!b.qs.empty()) a.qs = b.qs;
    a.precision = b.precision;
    a.budget = b.budget;
    a.threads = b.threads;
    if (!b.default_scheme.empty()) a.default_scheme = b.default_scheme;
    if (!b.charts.empty()) a.charts = b.charts;
    if (b.target != "full") a.target = b.target;
}

}  // namespace gm
