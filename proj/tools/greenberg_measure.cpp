// greenberg-measure: batch front end for level-set counts, cylinder
// measures and motivic integrals of affine formal schemes over a complete
// discrete valuation ring.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gm/config.hpp"
#include "gm/error.hpp"
#include "gm/integrate.hpp"

using namespace gm;

namespace {

struct Args {
    std::vector<std::string> configs;
    std::string qlist, levels, out;
    int precision = -1;
    uint64_t budget = 0;
    int threads = 0;
    std::string scheme, cylinder, integrand, alpha, charts, morphism, point, zgens, target;
    int point_level = -1, target_level = -1, horizon = -1;
    bool laurent = false;
};

void add_common(CLI::App* cmd, Args& a) {
    cmd->add_option("--config", a.configs, "configuration file(s); later files extend earlier ones")
        ->required();
    cmd->add_option("--q", a.qlist, "comma-separated residue field sizes, e.g. 2,3,5");
    cmd->add_option("--levels", a.levels, "level range lo..hi (or a single level)");
    cmd->add_option("--precision", a.precision, "target error exponent m");
    cmd->add_option("--budget", a.budget, "enumeration budget (points per search space)");
    cmd->add_option("--threads", a.threads, "worker threads for enumeration");
    cmd->add_option("--out", a.out, "directory to copy the report into");
    cmd->add_option("--scheme", a.scheme, "scheme name (default from config)");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrClass::parse, "cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

JobConfig load_configs(const Args& a) {
    JobConfig cfg;
    bool first = true;
    for (const auto& path : a.configs) {
        ConfigParseResult r = parse_config(read_file(path));
        if (!r.ok()) {
            std::string msg = "config " + path + ":";
            for (const auto& i : r.issues) msg += "\n  " + i.str();
            throw Error(ErrClass::parse, msg);
        }
        if (first) {
            cfg = std::move(r.config);
            first = false;
        } else {
            merge_config(cfg, r.config);
        }
    }
    return cfg;
}

void apply_overrides(JobConfig& cfg, const Args& a) {
    if (!a.qlist.empty()) {
        cfg.qs.clear();
        std::stringstream ss(a.qlist);
        std::string item;
        while (std::getline(ss, item, ',')) cfg.qs.push_back(std::stoull(item));
    }
    if (!a.levels.empty()) {
        size_t dots = a.levels.find("..");
        if (dots == std::string::npos) {
            cfg.level_lo = cfg.level_hi = std::stoi(a.levels);
        } else {
            cfg.level_lo = std::stoi(a.levels.substr(0, dots));
            cfg.level_hi = std::stoi(a.levels.substr(dots + 2));
        }
    }
    if (a.precision >= 0) cfg.precision = a.precision;
    if (a.budget > 0) cfg.budget = a.budget;
    if (a.threads > 0) cfg.threads = a.threads;
    if (!a.scheme.empty()) cfg.default_scheme = a.scheme;
    if (!a.charts.empty()) cfg.charts = a.charts;
    if (cfg.qs.empty()) cfg.qs.push_back(cfg.ring.q());
}

RingDescriptor descriptor_for(const JobConfig& cfg, uint64_t q) {
    uint32_t p = 0, f = 0;
    if (!factor_prime_power(q, p, f))
        throw Error(ErrClass::precondition, "q = " + std::to_string(q) + " is not a prime power");
    RingDescriptor d = cfg.ring;
    d.p = p;
    d.f = f;
    return d;
}

const Scheme& pick_scheme(const JobConfig& cfg, const Args& a) {
    std::string name = !a.scheme.empty() ? a.scheme : cfg.default_scheme;
    if (name.empty() && cfg.schemes.size() == 1) name = cfg.schemes.front().name;
    const Scheme* s = cfg.find_scheme(name);
    if (!s)
        throw Error(ErrClass::precondition,
                    name.empty() ? "no scheme selected (use --scheme)" : "unknown scheme " + name);
    return *s;
}

CylinderSpec pick_cylinder(const JobConfig& cfg, const Scheme& X, const std::string& name) {
    if (name.empty() || name == "full") return CylinderSpec::full(&X);
    const auto* nt = cfg.find_cylinder(name);
    if (nt) {
        const Scheme* s = cfg.find_scheme(nt->scheme);
        if (s != &X)
            throw Error(ErrClass::precondition, "cylinder " + name + " lives on scheme " + nt->scheme);
        return CylinderSpec::parse(nt->text, &X);
    }
    // inline spec text
    return CylinderSpec::parse(name, &X);
}

// integrand := term ('+' term)*;
// term := nat ['*' base] | base; base := mult(poly,...) | ordjac(name)
Integrand parse_integrand(const std::string& text, const Scheme* X, const JobConfig& cfg) {
    Integrand out;
    out.domain = X;
    out.a = 0;
    out.b = 0;
    size_t pos = 0;
    auto skip = [&] { while (pos < text.size() && isspace((unsigned char)text[pos])) ++pos; };
    auto fail = [&](const std::string& m) -> void {
        throw Error(ErrClass::parse, "integrand parse error at " + std::to_string(pos) + ": " + m);
    };
    bool any = false;
    while (true) {
        skip();
        if (pos >= text.size()) break;
        if (any) {
            if (text[pos] != '+') fail("expected '+'");
            ++pos;
            skip();
        }
        long long coef = 1;
        bool have_coef = false;
        if (isdigit((unsigned char)text[pos])) {
            size_t start = pos;
            while (pos < text.size() && isdigit((unsigned char)text[pos])) ++pos;
            coef = std::stoll(text.substr(start, pos - start));
            have_coef = true;
            skip();
            if (pos < text.size() && text[pos] == '*') {
                ++pos;
                skip();
            } else {
                out.b += coef;
                any = true;
                continue;
            }
        }
        if (text.compare(pos, 5, "mult(") == 0) {
            pos += 5;
            size_t depth = 1, start = pos;
            while (pos < text.size() && depth) {
                if (text[pos] == '(') ++depth;
                if (text[pos] == ')') --depth;
                if (depth) ++pos;
            }
            if (depth) fail("unbalanced mult()");
            std::string inner = text.substr(start, pos - start);
            ++pos;
            if (!out.mult_gens.empty()) fail("only one mult(...) term is supported");
            std::stringstream ss(inner);
            std::string g;
            while (std::getline(ss, g, ','))
                out.mult_gens.push_back(Poly::parse(g, X->vars));
            out.a = (int)coef;
        } else if (text.compare(pos, 7, "ordjac(") == 0) {
            pos += 7;
            size_t start = pos;
            while (pos < text.size() && text[pos] != ')') ++pos;
            if (pos >= text.size()) fail("unbalanced ordjac()");
            std::string name = text.substr(start, pos - start);
            ++pos;
            if (have_coef && coef != 1) fail("ordjac cannot be scaled");
            const Morphism* h = cfg.find_morphism(name);
            if (!h) fail("unknown morphism " + name);
            if (h->src != X) fail("ordjac morphism source is not the integrand domain");
            out.jac_h = h;
        } else {
            fail("expected mult(...), ordjac(...) or an integer");
        }
        any = true;
    }
    if (!any) fail("empty integrand");
    if (out.mult_gens.empty() && out.a == 0) out.a = 0;
    return out;
}

std::vector<uint64_t> parse_point(const std::string& text, const Ring& ring, int nvars) {
    std::vector<uint64_t> pt;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        Poly c = Poly::parse(item, {});
        pt.push_back(c.eval(ring, std::span<const uint64_t>()));
    }
    if ((int)pt.size() != nvars)
        throw Error(ErrClass::precondition, "point has " + std::to_string(pt.size()) +
                                                " coordinates, scheme needs " + std::to_string(nvars));
    return pt;
}

void emit(const std::string& text, const Args& a, const std::string& name) {
    std::cout << text;
    if (!a.out.empty()) {
        std::ofstream f(a.out + "/" + name + ".out");
        f << text;
    }
}

std::string fmt_measure(const RealizedMeasure& m) {
    std::ostringstream os;
    os << "value\t" << m.value.str() << "\n";
    os << "error\t" << m.err.str() << "\n";
    auto e = m.error_exponent();
    os << "error_exponent\t" << (e ? std::to_string(*e) : "exact") << "\n";
    os << "provenance\t" << m.provenance_str() << "\n";
    return os.str();
}

MeasureOpts measure_opts(const JobConfig& cfg) {
    MeasureOpts o;
    o.target_error = cfg.precision;
    o.enum_opts.budget = cfg.budget;
    o.enum_opts.threads = cfg.threads;
    o.max_level = std::max(14, cfg.level_hi + 2);
    return o;
}

int cmd_count(const JobConfig& cfg, const Args& a, bool with_series) {
    const Scheme& X = pick_scheme(cfg, a);
    std::ostringstream os;
    os << "# greenberg-measure " << (with_series ? "series" : "count") << "\n";
    os << "# scheme: " << X.name << "\n";
    os << "level\tq\tN_n\tN_n/q^((n+1)d)\n";
    EnumOpts eo{cfg.budget, cfg.threads};
    for (uint64_t q : cfg.qs) {
        RingDescriptor d = descriptor_for(cfg, q);
        if (with_series) {
            SerreSeries s = serre_series(X, cfg.level_hi, d, eo);
            for (size_t n = 0; n < s.normalized.size(); ++n)
                os << n << "\t" << q << "\t" << s.counts[n].str() << "\t" << s.normalized[n].str()
                   << "\n";
            if (s.fit)
                os << "# fit\tq=" << q << "\t" << s.fit->str()
                   << (s.fit->holdout_checked ? "\t(holdout term verified)" : "") << "\n";
            else
                os << "# fit\tq=" << q << "\tnone\n";
            for (const auto& note : s.notes) os << "# note\t" << note << "\n";
        } else {
            for (int n = cfg.level_lo; n <= cfg.level_hi; ++n) {
                CountResult c = count_level(X, d, n, eo);
                BigInt den = BigInt::from_u64(q).pow((unsigned)((n + 1) * X.dim));
                Rational norm(c.value, den);
                os << n << "\t" << q << "\t" << c.value.str() << "\t" << norm.str();
                if (c.provenance == CountResult::Provenance::smooth_scaled) os << "\t# smooth-scaled";
                os << "\n";
                if (c.diagnostic) os << "# diagnostic\t" << *c.diagnostic << "\n";
            }
        }
    }
    emit(os.str(), a, with_series ? "series" : "count");
    return 0;
}

int cmd_measure(const JobConfig& cfg, const Args& a) {
    const Scheme& X = pick_scheme(cfg, a);
    CylinderSpec spec = pick_cylinder(cfg, X, a.cylinder);
    std::ostringstream os;
    os << "command\tmeasure\nscheme\t" << X.name << "\ncylinder\t"
       << (a.cylinder.empty() ? "full" : a.cylinder) << "\n";
    LevelCache cache;
    for (uint64_t q : cfg.qs) {
        RingDescriptor d = descriptor_for(cfg, q);
        MeasureOpts mo = measure_opts(cfg);
        mo.interpolate = a.laurent;
        mo.interp_smax = 3;
        MeasureResult r = measure_spec(spec, d, cache, mo);
        os << "q\t" << q << "\n";
        os << fmt_measure(r.measure);
        os << "resolved\t" << (r.resolved ? "true" : "false") << "\n";
        if (!r.resolved)
            os << "interval\t[" << r.interval_lo.str() << ", " << r.interval_hi.str() << "]\n";
        if (r.cert.gr_split >= 0) os << "gr_split\t" << r.cert.gr_split << "\n";
        if (r.cert.stable_level >= 0) os << "stable_level\t" << r.cert.stable_level << "\n";
        if (r.cert.lift_horizon >= 0) os << "lift_horizon\t" << r.cert.lift_horizon << "\n";
        for (const auto& [lvl, cnt] : r.cert.stable_counts)
            os << "stable_count\t" << lvl << ":" << cnt.str() << "\n";
        if (!r.cert.slack_C.is_zero()) os << "slack_C\t" << r.cert.slack_C.str() << "\n";
        if (r.interpolated) os << "interpolated\t" << r.interpolated->str() << "\n";
        for (const auto& n : r.cert.notes) os << "note\t" << n << "\n";
    }
    emit(os.str(), a, "measure");
    return 0;
}

int cmd_mult(const JobConfig& cfg, const Args& a) {
    const Scheme& X = pick_scheme(cfg, a);
    if (a.zgens.empty()) throw Error(ErrClass::precondition, "mult needs --zgens");
    std::vector<Poly> gens;
    std::stringstream ss(a.zgens);
    std::string g;
    while (std::getline(ss, g, ';')) gens.push_back(Poly::parse(g, X.vars));
    int level = a.point_level >= 0 ? a.point_level : cfg.level_hi;
    std::ostringstream os;
    os << "command\tmult\nscheme\t" << X.name << "\n";
    for (uint64_t q : cfg.qs) {
        RingDescriptor d = descriptor_for(cfg, q);
        Ring ring(d, level);
        auto pt = parse_point(a.point, ring, X.nvars());
        if (!point_on_scheme(X, ring, pt))
            throw Error(ErrClass::precondition, "point does not satisfy the scheme generators");
        ArcValue v = mult_at(gens, ring, pt);
        os << "q\t" << q << "\nlevel\t" << level << "\nmult\t"
           << (v.at_least ? ">=" + std::to_string(v.v) : std::to_string(v.v)) << "\n";
    }
    emit(os.str(), a, "mult");
    return 0;
}

int cmd_ordjac(const JobConfig& cfg, const Args& a) {
    if (a.morphism.empty()) throw Error(ErrClass::precondition, "ordjac needs --morphism");
    const Morphism* h = cfg.find_morphism(a.morphism);
    if (!h) throw Error(ErrClass::precondition, "unknown morphism " + a.morphism);
    int level = a.point_level >= 0 ? a.point_level : cfg.level_hi;
    std::ostringstream os;
    os << "command\tordjac\nmorphism\t" << h->name << "\n";
    for (uint64_t q : cfg.qs) {
        RingDescriptor d = descriptor_for(cfg, q);
        Ring ring(d, level);
        auto pt = parse_point(a.point, ring, h->src->nvars());
        if (!point_on_scheme(*h->src, ring, pt))
            throw Error(ErrClass::precondition, "point does not satisfy the source generators");
        OrdJacResult r = ord_jac_at(*h, ring, pt);
        os << "q\t" << q << "\nlevel\t" << level << "\n";
        if (!r.resolved) {
            os << "ordjac\tunresolved\nnote\t" << r.note << "\n";
        } else {
            os << "ordjac\t" << (r.val.at_least ? ">=" + std::to_string(r.val.v) : std::to_string(r.val.v))
               << "\n";
            os << "projection\t";
            for (size_t i = 0; i < r.projection.size(); ++i)
                os << (i ? "," : "") << h->dst->vars[r.projection[i]];
            os << "\n";
        }
    }
    emit(os.str(), a, "ordjac");
    return 0;
}

int cmd_hensel(const JobConfig& cfg, const Args& a) {
    const Scheme& X = pick_scheme(cfg, a);
    if (a.point.empty()) throw Error(ErrClass::precondition, "hensel needs --point");
    int n = a.point_level >= 0 ? a.point_level : cfg.level_lo;
    int m = a.target_level >= 0 ? a.target_level : cfg.level_hi;
    std::ostringstream os;
    os << "command\thensel\nscheme\t" << X.name << "\n";
    for (uint64_t q : cfg.qs) {
        RingDescriptor d = descriptor_for(cfg, q);
        Ring ring(d, n);
        auto pt = parse_point(a.point, ring, X.nvars());
        HenselResult r = hensel_lift_point(X, ring, pt, m);
        os << "q\t" << q << "\nfrom_level\t" << n << "\nto_level\t" << m << "\n";
        if (!r.ok()) throw Error(r.failure->cls, r.failure->message);
        Ring rm(d, m);
        os << "jac_order\t" << r.jac_order << "\n";
        for (int i = 0; i < X.nvars(); ++i)
            os << "lift[" << X.vars[i] << "]\t" << rm.render(r.point[i]) << "\n";
        os << "verified\t" << (point_on_scheme(X, rm, r.point) ? "true" : "false") << "\n";
    }
    emit(os.str(), a, "hensel");
    return 0;
}

int cmd_greenberg(const JobConfig& cfg, const Args& a) {
    const Scheme& X = pick_scheme(cfg, a);
    int n = a.point_level >= 0 ? a.point_level : cfg.level_lo;
    int H = a.horizon >= 0 ? a.horizon : cfg.level_hi;
    std::ostringstream os;
    os << "command\tgreenberg\nscheme\t" << X.name << "\nn\t" << n << "\nhorizon\t" << H << "\n";
    EnumOpts eo{cfg.budget, cfg.threads};
    for (uint64_t q : cfg.qs) {
        RingDescriptor d = descriptor_for(cfg, q);
        GreenbergEstimate ge = greenberg_estimate(X, n, d, H, eo);
        os << "q\t" << q << "\n";
        os << "m_hat\t" << (ge.m_hat ? std::to_string(*ge.m_hat) : "NOT-FOUND") << "\n";
        Ring ring(d, n);
        for (const auto& [m, w] : ge.blockers) {
            os << "blocker\tm=" << m << "\t(";
            for (size_t i = 0; i < w.size(); ++i) os << (i ? ", " : "") << ring.render(w[i]);
            os << ")\n";
        }
    }
    emit(os.str(), a, "greenberg");
    return 0;
}

int cmd_integrate(const JobConfig& cfg, const Args& a) {
    const Scheme& X = pick_scheme(cfg, a);
    CylinderSpec spec = pick_cylinder(cfg, X, a.cylinder);
    std::string alpha_text = a.alpha;
    if (alpha_text.empty() && !a.integrand.empty()) {
        const auto* nt = cfg.find_integrand(a.integrand);
        if (!nt) throw Error(ErrClass::precondition, "unknown integrand " + a.integrand);
        alpha_text = nt->text;
    }
    if (alpha_text.empty()) alpha_text = "0";
    Integrand alpha = parse_integrand(alpha_text, &X, cfg);
    std::ostringstream os;
    os << "command\tintegrate\nscheme\t" << X.name << "\nintegrand\t" << alpha_text << "\n";
    LevelCache cache;
    for (uint64_t q : cfg.qs) {
        RingDescriptor d = descriptor_for(cfg, q);
        MeasureOpts mo = measure_opts(cfg);
        mo.interpolate = a.laurent;
        mo.interp_smax = 3;
        IntegrateResult r = integrate(spec, alpha, cfg.precision, d, cache, mo);
        os << "q\t" << q << "\n";
        os << fmt_measure(r.integral);
        os << "resolved\t" << (r.resolved ? "true" : "false") << "\n";
        os << "truncation_V\t" << r.truncation << "\n";
        for (const auto& f : r.fibers)
            os << "fiber\t" << f.base_value << "\t" << f.mu.value.str() << "\t" << f.term.str() << "\n";
        os << "tail_bound\t" << r.tail_bound.str() << "\n";
        if (r.interpolated) os << "interpolated\t" << r.interpolated->str() << "\n";
        for (const auto& note : r.notes) os << "note\t" << note << "\n";
    }
    emit(os.str(), a, "integrate");
    return 0;
}

int cmd_cov_check(const JobConfig& cfg, const Args& a) {
    if (cfg.charts.empty()) throw Error(ErrClass::precondition, "cov-check needs charts (config or --charts)");
    std::vector<CovChart> charts;
    const Scheme* target = nullptr;
    std::stringstream ss(cfg.charts);
    std::string item;
    auto trim = [](std::string s) {
        while (!s.empty() && isspace((unsigned char)s.front())) s.erase(s.begin());
        while (!s.empty() && isspace((unsigned char)s.back())) s.pop_back();
        return s;
    };
    while (std::getline(ss, item, ',')) {
        size_t colon = item.find(':');
        std::string mname = trim(colon == std::string::npos ? item : item.substr(0, colon));
        std::string cname = trim(colon == std::string::npos ? "full" : item.substr(colon + 1));
        const Morphism* h = cfg.find_morphism(mname);
        if (!h) throw Error(ErrClass::precondition, "unknown morphism " + mname);
        if (auto w = validate_morphism(*h, {0, 1}, descriptor_for(cfg, cfg.qs[0]), cfg.budget))
            throw Error(ErrClass::precondition, *w);
        if (!target) target = h->dst;
        if (target != h->dst) throw Error(ErrClass::precondition, "charts map to different targets");
        charts.push_back({h, pick_cylinder(cfg, *h->src, cname)});
    }
    CylinderSpec A = pick_cylinder(cfg, *target, a.target.empty() ? cfg.target : a.target);
    std::string alpha_text = a.alpha;
    if (alpha_text.empty() && !a.integrand.empty()) {
        const auto* nt = cfg.find_integrand(a.integrand);
        if (!nt) throw Error(ErrClass::precondition, "unknown integrand " + a.integrand);
        alpha_text = nt->text;
    }
    if (alpha_text.empty()) alpha_text = "0";
    Integrand alpha = parse_integrand(alpha_text, target, cfg);
    std::vector<Poly> wild;
    auto wit = cfg.wild.find(target->name);
    if (wit != cfg.wild.end())
        for (const auto& g : wit->second) wild.push_back(Poly::parse(g, target->vars));

    std::ostringstream os;
    os << "command\tcov-check\ntarget\t" << target->name << "\nintegrand\t" << alpha_text << "\n";
    bool all_pass = true;
    LevelCache cache;
    for (uint64_t q : cfg.qs) {
        RingDescriptor d = descriptor_for(cfg, q);
        CovReport rep = cov_check(charts, A, alpha, cfg.precision, d, wild, cache, measure_opts(cfg));
        os << "q\t" << q << "\n";
        os << "verdict\t" << (rep.pass ? "PASS" : "FAIL") << "\n";
        os << "lhs\t" << rep.lhs.integral.value.str() << "\n";
        os << "lhs_error\t" << rep.lhs.integral.err.str() << "\n";
        auto lee = rep.lhs.integral.error_exponent();
        os << "lhs_error_exponent\t" << (lee ? std::to_string(*lee) : "exact") << "\n";
        for (size_t i = 0; i < rep.rhs.size(); ++i) {
            os << "rhs[" << charts[i].h->name << "]\t" << rep.rhs[i].integral.value.str() << "\n";
            for (const auto& f : rep.rhs[i].fibers)
                os << "rhs_fiber[" << charts[i].h->name << "]\t" << f.base_value << "\t"
                   << f.mu.value.str() << "\t" << f.term.str() << "\n";
        }
        os << "rhs_total\t" << rep.rhs_total.str() << "\n";
        os << "rhs_error\t" << rep.rhs_err.str() << "\n";
        RealizedMeasure rhs_m{q, rep.rhs_total, rep.rhs_err, RealizedMeasure::Provenance::tail_bounded};
        auto ree = rhs_m.error_exponent();
        os << "rhs_error_exponent\t" << (ree ? std::to_string(*ree) : "exact") << "\n";
        os << "tolerance\t" << rep.tolerance.str() << "\n";
        os << "difference\t" << (rep.lhs.integral.value - rep.rhs_total).abs().str() << "\n";
        os << "injective\t" << (rep.injective ? "true" : "false") << "\n";
        os << "fibers_ok\t" << (rep.fibers_ok ? "true" : "false") << "\n";
        os << "covered\t" << (rep.covered ? "true" : "false") << "\n";
        os << "leftover_bound\t" << rep.leftover_bound.str() << "\n";
        for (const auto& f : rep.lhs.fibers)
            os << "lhs_fiber\t" << f.base_value << "\t" << f.mu.value.str() << "\t" << f.term.str()
               << "\n";
        for (const auto& n : rep.notes) os << "note\t" << n << "\n";
        all_pass = all_pass && rep.pass;
    }
    emit(os.str(), a, "cov-check");
    return all_pass ? 0 : (int)ErrClass::fail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"greenberg-measure: level sets, measures and motivic integrals of formal schemes"};
    app.require_subcommand(1);
    Args a;

    CLI::App* count = app.add_subcommand("count", "level point counts N_n");
    CLI::App* series = app.add_subcommand("series", "count table with a rational-function fit");
    CLI::App* measure = app.add_subcommand("measure", "measure of a cylinder with certificates");
    CLI::App* mult = app.add_subcommand("mult", "contact order of a point along an ideal");
    CLI::App* ordjac = app.add_subcommand("ordjac", "jacobian order of a morphism at a point");
    CLI::App* hensel = app.add_subcommand("hensel", "lift a level-n point to a higher level");
    CLI::App* greenberg = app.add_subcommand("greenberg", "empirical Greenberg level");
    CLI::App* integrate_cmd = app.add_subcommand("integrate", "motivic integral of L^-alpha");
    CLI::App* cov = app.add_subcommand("cov-check", "change-of-variables verification");

    for (CLI::App* c : {count, series, measure, mult, ordjac, hensel, greenberg, integrate_cmd, cov})
        add_common(c, a);
    for (CLI::App* c : {measure, integrate_cmd})
        c->add_option("--cylinder", a.cylinder, "cylinder name from the config, or an inline spec");
    for (CLI::App* c : {integrate_cmd, cov}) {
        c->add_option("--integrand", a.integrand, "named integrand from the config");
        c->add_option("--alpha", a.alpha, "inline integrand, e.g. \"mult(x, y)\" or \"0\"");
    }
    cov->add_option("--charts", a.charts, "morphism:cylinder pairs, comma separated");
    cov->add_option("--target", a.target, "target cylinder (default full)");
    for (CLI::App* c : {mult, ordjac, hensel})
        c->add_option("--point", a.point, "comma-separated coordinates (integers and pi powers)");
    mult->add_option("--zgens", a.zgens, "semicolon-separated ideal generators");
    ordjac->add_option("--morphism", a.morphism, "morphism name");
    for (CLI::App* c : {mult, ordjac, hensel, greenberg})
        c->add_option("--point-level", a.point_level, "level of the input point / truncation");
    hensel->add_option("--target-level", a.target_level, "level to lift to");
    greenberg->add_option("--horizon", a.horizon, "search horizon H");
    for (CLI::App* c : {measure, integrate_cmd})
        c->add_flag("--laurent", a.laurent, "attempt Laurent interpolation over extensions");

    CLI11_PARSE(app, argc, argv);

    try {
        JobConfig cfg = load_configs(a);
        apply_overrides(cfg, a);
        if (app.got_subcommand(count)) return cmd_count(cfg, a, false);
        if (app.got_subcommand(series)) return cmd_count(cfg, a, true);
        if (app.got_subcommand(measure)) return cmd_measure(cfg, a);
        if (app.got_subcommand(mult)) return cmd_mult(cfg, a);
        if (app.got_subcommand(ordjac)) return cmd_ordjac(cfg, a);
        if (app.got_subcommand(hensel)) return cmd_hensel(cfg, a);
        if (app.got_subcommand(greenberg)) return cmd_greenberg(cfg, a);
        if (app.got_subcommand(integrate_cmd)) return cmd_integrate(cfg, a);
        if (app.got_subcommand(cov)) return cmd_cov_check(cfg, a);
    } catch (const Error& e) {
        std::cout << "failure-class: " << err_class_name(e.cls()) << "\n" << e.what() << "\n";
        return (int)e.cls();
    } catch (const std::exception& e) {
        std::cout << "failure-class: FAIL\n" << e.what() << "\n";
        return (int)ErrClass::fail;
    }
    return 0;
}
