#include "gm/motivic.hpp"

#include <sstream>

#include "gm/error.hpp"
#include "gm/ring.hpp"

namespace gm {

std::string NormBound::str() const {
    switch (kind) {
        case Kind::zero: return "0";
        case Kind::exact: return "2^" + std::to_string(log2exp);
        case Kind::upper: return "<=2^" + std::to_string(log2exp);
    }
    return "";
}

MotivicValue::MotivicValue(long long constant) {
    if (constant) coef_[0] = constant;
}

MotivicValue MotivicValue::term(long long coef, int exp, int prec) {
    MotivicValue v;
    v.prec_ = prec;
    if (coef) v.coef_[exp] = coef;
    v.normalize();
    return v;
}

MotivicValue MotivicValue::zero_at_precision(int prec) {
    MotivicValue v;
    v.prec_ = prec;
    return v;
}

long long MotivicValue::coefficient(int exp) const {
    auto it = coef_.find(exp);
    return it == coef_.end() ? 0 : it->second;
}

void MotivicValue::normalize() {
    for (auto it = coef_.begin(); it != coef_.end();) {
        bool unknown = prec_ != kPrecExact && it->first <= -prec_;
        if (it->second == 0 || unknown)
            it = coef_.erase(it);
        else
            ++it;
    }
}

int MotivicValue::effective_top() const {
    if (!coef_.empty()) return coef_.rbegin()->first;
    return prec_ == kPrecExact ? 0 : -prec_;
}

MotivicValue MotivicValue::operator+(const MotivicValue& o) const {
    MotivicValue r = *this;
    r.prec_ = std::min(prec_, o.prec_);
    for (const auto& [e, c] : o.coef_) r.coef_[e] += c;
    r.normalize();
    return r;
}

MotivicValue MotivicValue::operator-() const {
    MotivicValue r = *this;
    for (auto& [e, c] : r.coef_) c = -c;
    return r;
}

MotivicValue MotivicValue::operator-(const MotivicValue& o) const { return *this + (-o); }

MotivicValue MotivicValue::operator*(const MotivicValue& o) const {
    MotivicValue r;
    // an exactly-zero factor annihilates the other one's unknown tail
    if ((exact() && coef_.empty()) || (o.exact() && o.coef_.empty())) return r;
    if (prec_ == kPrecExact && o.prec_ == kPrecExact) {
        r.prec_ = kPrecExact;
    } else {
        long long cand = std::numeric_limits<long long>::max();
        if (prec_ != kPrecExact) cand = std::min(cand, (long long)prec_ - o.effective_top());
        if (o.prec_ != kPrecExact) cand = std::min(cand, (long long)o.prec_ - effective_top());
        r.prec_ = (int)cand;
    }
    for (const auto& [ea, ca] : coef_)
        for (const auto& [eb, cb] : o.coef_) r.coef_[ea + eb] += ca * cb;
    r.normalize();
    return r;
}

MotivicValue MotivicValue::truncated(int prec) const {
    MotivicValue r = *this;
    r.prec_ = std::min(prec_, prec);
    r.normalize();
    return r;
}

NormBound MotivicValue::norm() const {
    NormBound nb;
    if (!coef_.empty()) {
        nb.kind = NormBound::Kind::exact;
        nb.log2exp = coef_.rbegin()->first;
        return nb;
    }
    if (prec_ == kPrecExact) {
        nb.kind = NormBound::Kind::zero;
        return nb;
    }
    nb.kind = NormBound::Kind::upper;
    nb.log2exp = -prec_;
    return nb;
}

std::string MotivicValue::str() const {
    std::ostringstream os;
    bool first = true;
    for (auto it = coef_.rbegin(); it != coef_.rend(); ++it) {
        long long c = it->second;
        int e = it->first;
        if (first) {
            if (c < 0) os << "-";
            first = false;
        } else {
            os << (c < 0 ? " - " : " + ");
        }
        long long a = c < 0 ? -c : c;
        if (e == 0) {
            os << a;
        } else {
            if (a != 1) os << a << "*";
            os << "L^" << e;
        }
    }
    if (prec_ != kPrecExact) {
        if (!first) os << " + ";
        os << "O(L^" << -prec_ << ")";
    } else if (first) {
        os << "0";
    }
    return os.str();
}

MotivicValue MotivicValue::parse(const std::string& text) {
    MotivicValue v;
    size_t pos = 0;
    auto skip = [&] {
        while (pos < text.size() && text[pos] == ' ') ++pos;
    };
    auto fail = [&](const std::string& m) -> void {
        throw Error(ErrClass::parse, "motivic value parse error at " + std::to_string(pos) + ": " + m);
    };
    auto integer = [&]() -> long long {
        skip();
        bool neg = false;
        if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) {
            neg = text[pos] == '-';
            ++pos;
        }
        skip();
        size_t start = pos;
        while (pos < text.size() && isdigit((unsigned char)text[pos])) ++pos;
        if (start == pos) fail("expected integer");
        long long x = std::stoll(text.substr(start, pos - start));
        return neg ? -x : x;
    };
    bool any = false;
    int sign = 1;
    skip();
    if (pos < text.size() && text[pos] == '-') {
        sign = -1;
        ++pos;
    }
    for (;;) {
        skip();
        if (pos >= text.size()) break;
        if (text.compare(pos, 2, "O(") == 0) {
            pos += 2;
            skip();
            if (text.compare(pos, 2, "L^") != 0) fail("expected L^ in O()");
            pos += 2;
            long long e = integer();
            skip();
            if (pos >= text.size() || text[pos] != ')') fail("expected )");
            ++pos;
            v.prec_ = (int)-e;
            any = true;
        } else if (text.compare(pos, 2, "L^") == 0) {
            pos += 2;
            long long e = integer();
            v.coef_[(int)e] += sign;
            any = true;
        } else if (isdigit((unsigned char)text[pos])) {
            long long c = integer();
            skip();
            if (pos < text.size() && text[pos] == '*') {
                ++pos;
                skip();
                if (text.compare(pos, 2, "L^") != 0) fail("expected L^ after *");
                pos += 2;
                long long e = integer();
                v.coef_[(int)e] += sign * c;
            } else {
                v.coef_[0] += sign * c;
            }
            any = true;
        } else {
            fail("unexpected character");
        }
        skip();
        if (pos >= text.size()) break;
        if (text[pos] == '+') {
            sign = 1;
            ++pos;
        } else if (text[pos] == '-') {
            sign = -1;
            ++pos;
        } else {
            fail("expected + or -");
        }
    }
    if (!any) fail("empty value");
    v.normalize();
    return v;
}

std::optional<int> RealizedMeasure::error_exponent() const {
    if (err.is_zero()) return std::nullopt;
    Rational one(1);
    Rational scaled = err;
    Rational qf = Rational::pow_int(q, 1);
    if (err > one) return 0;
    int e = 0;
    while (e < 256) {
        Rational next = scaled * qf;
        if (next > one) break;
        scaled = next;
        ++e;
    }
    return e;
}

std::string RealizedMeasure::provenance_str() const {
    switch (prov) {
        case Provenance::exact: return "exact";
        case Provenance::stabilized: return "stabilized";
        case Provenance::tail_bounded: return "tail-bounded";
        case Provenance::unresolved: return "unresolved";
    }
    return "";
}

RealizedMeasure specialize(const MotivicValue& a, uint64_t q) {
    uint32_t p = 0, f = 0;
    if (q < 2 || !factor_prime_power(q, p, f))
        throw Error(ErrClass::precondition, "specialize: q must be a prime power >= 2");
    RealizedMeasure m;
    m.q = q;
    for (const auto& [e, c] : a.coefficients())
        m.value += Rational(c) * Rational::pow_int(q, e);
    if (a.exact()) {
        m.err = Rational(0);
        m.prov = RealizedMeasure::Provenance::exact;
    } else {
        m.err = Rational::pow_int(q, -(long long)a.precision());
        m.prov = RealizedMeasure::Provenance::tail_bounded;
    }
    return m;
}

GeometricSum geometric_sum(int r, const MotivicValue& scale, int prec) {
    if (r >= 0) throw Error(ErrClass::precondition, "geometric_sum: ratio exponent must be negative");
    GeometricSum out;
    out.numerator = scale;
    out.denominator = MotivicValue(1) - MotivicValue::L(r);
    int span = 0;
    if (!scale.no_terms())
        span = std::max(0, scale.coefficients().rbegin()->first - scale.coefficients().begin()->first);
    MotivicValue series;
    for (int k = 0; r * k > -(prec + span + 4); ++k) series = series + MotivicValue::L(r * k);
    out.truncated = (scale * series).truncated(prec);
    return out;
}

}  // namespace gm
