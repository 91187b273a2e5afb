#include "gm/ring.hpp"

#include <algorithm>
#include <sstream>

namespace gm {

bool is_prime(uint64_t n) {
    if (n < 2) return false;
    if (n % 2 == 0) return n == 2;
    for (uint64_t d = 3; d * d <= n; d += 2)
        if (n % d == 0) return false;
    return true;
}

uint64_t default_enumeration_budget() { return 1ull << 24; }

bool factor_prime_power(uint64_t q, uint32_t& p, uint32_t& f) {
    if (q < 2) return false;
    uint64_t d = 2;
    while (d * d <= q && q % d != 0) ++d;
    if (d * d > q) d = q;
    uint64_t rest = q;
    uint32_t cnt = 0;
    while (rest % d == 0) {
        rest /= d;
        ++cnt;
    }
    if (rest != 1) return false;
    p = (uint32_t)d;
    f = cnt;
    return true;
}

uint64_t RingDescriptor::q() const {
    uint64_t r = 1;
    for (uint32_t i = 0; i < f; ++i) r *= p;
    return r;
}

std::string RingDescriptor::str() const {
    std::ostringstream os;
    os << (kind == RingKind::equal_char ? "eq" : "padic") << "(p=" << p << ",f=" << f << ")";
    return os.str();
}

namespace {

// Fixed table of defining polynomials (Conway polynomials), constant
// coefficient first, monic. Canonical forms depend on these staying fixed.
struct ConwayEntry {
    uint32_t p, f;
    uint32_t coeffs[5];
};

const ConwayEntry kConwayTable[] = {
    {2, 2, {1, 1, 1, 0, 0}},
    {2, 3, {1, 1, 0, 1, 0}},
    {2, 4, {1, 1, 0, 0, 1}},
    {3, 2, {2, 2, 1, 0, 0}},
    {3, 3, {1, 2, 0, 1, 0}},
    {3, 4, {2, 0, 0, 2, 1}},
    {5, 2, {2, 4, 1, 0, 0}},
    {5, 3, {3, 3, 0, 1, 0}},
    {5, 4, {2, 4, 4, 0, 1}},
    {7, 2, {3, 6, 1, 0, 0}},
    {7, 3, {4, 0, 6, 1, 0}},
    {7, 4, {3, 4, 5, 0, 1}},
};

uint32_t eval_mod_p(const std::vector<uint32_t>& poly, uint32_t x, uint32_t p) {
    uint64_t acc = 0;
    for (size_t i = poly.size(); i-- > 0;) acc = (acc * x + poly[i]) % p;
    return (uint32_t)acc;
}

// remainder of poly by a monic divisor, both over F_p
std::vector<uint32_t> poly_rem_mod_p(std::vector<uint32_t> a, const std::vector<uint32_t>& m, uint32_t p) {
    size_t dm = m.size() - 1;
    while (a.size() > dm) {
        uint64_t lead = a.back();
        size_t sh = a.size() - 1 - dm;
        for (size_t j = 0; j < m.size(); ++j) {
            uint64_t t = (uint64_t)m[j] * lead % p;
            a[sh + j] = (uint32_t)((a[sh + j] + p - t) % p);
        }
        while (!a.empty() && a.back() == 0) a.pop_back();
        if (a.empty()) break;
    }
    return a;
}

void check_irreducible(const std::vector<uint32_t>& mod, uint32_t p, uint32_t f) {
    for (uint32_t x = 0; x < p; ++x)
        if (eval_mod_p(mod, x, p) == 0)
            throw Error(ErrClass::construction,
                        "reducible defining polynomial for F_{" + std::to_string(p) + "^" + std::to_string(f) + "}");
    if (f == 4) {
        // also rule out irreducible quadratic factors
        for (uint32_t b = 0; b < p; ++b)
            for (uint32_t c = 0; c < p; ++c) {
                std::vector<uint32_t> quad = {c, b, 1};
                if (poly_rem_mod_p(mod, quad, p).empty())
                    throw Error(ErrClass::construction, "reducible defining polynomial (quadratic factor)");
            }
    }
}

}  // namespace

ResidueField::ResidueField(uint32_t p, uint32_t f) : p_(p), f_(f) {
    if (!is_prime(p)) throw Error(ErrClass::construction, "p = " + std::to_string(p) + " is not prime");
    if (f < 1) throw Error(ErrClass::construction, "extension degree must be >= 1");
    q_ = 1;
    for (uint32_t i = 0; i < f; ++i) {
        q_ *= p;
        if (q_ > (1ull << 31)) throw Error(ErrClass::construction, "residue field too large");
    }
    if (f == 1) {
        mod_ = {0, 1};  // unused for prime fields
        return;
    }
    for (const auto& e : kConwayTable)
        if (e.p == p && e.f == f) {
            mod_.assign(e.coeffs, e.coeffs + f + 1);
            check_irreducible(mod_, p, f);
            return;
        }
    throw Error(ErrClass::construction,
                "no defining polynomial in table for (p=" + std::to_string(p) + ", f=" + std::to_string(f) + ")");
}

void ResidueField::decode(uint32_t a, uint32_t* c) const {
    for (uint32_t i = 0; i < f_; ++i) {
        c[i] = a % p_;
        a /= p_;
    }
}

uint32_t ResidueField::encode(const uint32_t* c) const {
    uint32_t a = 0;
    for (uint32_t i = f_; i-- > 0;) a = a * p_ + c[i];
    return a;
}

uint32_t ResidueField::add(uint32_t a, uint32_t b) const {
    if (f_ == 1) return (a + b) % p_;
    uint32_t ca[4], cb[4], cr[4];
    decode(a, ca);
    decode(b, cb);
    for (uint32_t i = 0; i < f_; ++i) cr[i] = (ca[i] + cb[i]) % p_;
    return encode(cr);
}

uint32_t ResidueField::neg(uint32_t a) const {
    if (f_ == 1) return a == 0 ? 0 : p_ - a;
    uint32_t ca[4], cr[4];
    decode(a, ca);
    for (uint32_t i = 0; i < f_; ++i) cr[i] = ca[i] == 0 ? 0 : p_ - ca[i];
    return encode(cr);
}

uint32_t ResidueField::sub(uint32_t a, uint32_t b) const { return add(a, neg(b)); }

uint32_t ResidueField::mul(uint32_t a, uint32_t b) const {
    if (f_ == 1) return (uint32_t)((uint64_t)a * b % p_);
    uint32_t ca[4], cb[4];
    decode(a, ca);
    decode(b, cb);
    uint32_t t[7] = {0};
    for (uint32_t i = 0; i < f_; ++i)
        for (uint32_t j = 0; j < f_; ++j) t[i + j] = (uint32_t)((t[i + j] + (uint64_t)ca[i] * cb[j]) % p_);
    for (uint32_t i = 2 * f_ - 2; i >= f_ && i < 7; --i) {
        uint32_t lead = t[i];
        if (lead) {
            t[i] = 0;
            for (uint32_t j = 0; j < f_; ++j) {
                uint64_t s = (uint64_t)mod_[j] * lead % p_;
                t[i - f_ + j] = (uint32_t)((t[i - f_ + j] + p_ - s) % p_);
            }
        }
        if (i == f_) break;
    }
    return encode(t);
}

uint32_t ResidueField::pow(uint32_t a, uint64_t e) const {
    uint32_t acc = 1, base = a;
    while (e) {
        if (e & 1) acc = mul(acc, base);
        base = mul(base, base);
        e >>= 1;
    }
    return acc;
}

uint32_t ResidueField::inv(uint32_t a) const {
    if (a == 0) throw Error(ErrClass::precondition, "inverse of zero in residue field");
    return pow(a, q_ - 2);
}

Ring::Ring(RingDescriptor desc, int level) : desc_(desc), level_(level), fq_(desc.p, desc.f) {
    if (level < 0) throw Error(ErrClass::construction, "ring level must be >= 0");
    q_ = fq_.q();
    card_ = 1;
    for (int i = 0; i <= level; ++i) {
        if (card_ > (1ull << 62) / q_)
            throw Error(ErrClass::construction, "ring too large to represent (q^{n+1} over 2^62)");
        card_ *= q_;
    }
    if (desc.kind == RingKind::p_adic) {
        pmod_ = 1;
        for (int i = 0; i <= level; ++i) pmod_ *= desc.p;
    }
}

uint64_t Ring::pi() const { return level_ >= 1 ? q_ : 0; }

uint32_t Ring::digit(uint64_t a, int i) const {
    for (int k = 0; k < i; ++k) a /= q_;
    return (uint32_t)(a % q_);
}

int Ring::val(uint64_t a) const {
    if (a == 0) return kValNone;
    int i = 0;
    while (a % q_ == 0) {
        a /= q_;
        ++i;
    }
    return i;
}

uint64_t Ring::reduce(uint64_t a, int target_level) const {
    if (target_level > level_)
        throw Error(ErrClass::precondition, "reduce: target level above source level");
    uint64_t m = 1;
    for (int i = 0; i <= target_level; ++i) m *= q_;
    return a % m;
}

uint64_t Ring::shift_down(uint64_t a, int k) const {
    uint64_t m = 1;
    for (int i = 0; i < k; ++i) m *= q_;
    if (a % m != 0) throw Error(ErrClass::precondition, "shift_down: valuation too small");
    return a / m;
}

uint64_t Ring::shift_up(uint64_t a, int k) const {
    if (k > level_) return 0;
    uint64_t keep = card_;
    for (int i = 0; i < k; ++i) keep /= q_;
    uint64_t m = 1;
    for (int i = 0; i < k; ++i) m *= q_;
    return (a % keep) * m;
}

void Ring::gr_decode(uint64_t a, uint64_t* c) const {
    uint32_t f = desc_.f;
    for (uint32_t j = 0; j < f; ++j) c[j] = 0;
    uint64_t ppow = 1;
    for (int i = 0; i <= level_; ++i) {
        uint32_t idx = (uint32_t)(a % q_);
        a /= q_;
        for (uint32_t j = 0; j < f; ++j) {
            c[j] += (uint64_t)(idx % desc_.p) * ppow;
            idx /= desc_.p;
        }
        ppow *= desc_.p;
    }
}

uint64_t Ring::gr_encode(const uint64_t* c_in) const {
    uint32_t f = desc_.f;
    uint64_t c[4];
    for (uint32_t j = 0; j < f; ++j) c[j] = c_in[j] % pmod_;
    uint64_t code = 0, qpow = 1;
    for (int i = 0; i <= level_; ++i) {
        uint32_t idx = 0, ppow = 1;
        for (uint32_t j = 0; j < f; ++j) {
            idx += (uint32_t)(c[j] % desc_.p) * ppow;
            c[j] /= desc_.p;
            ppow *= desc_.p;
        }
        code += (uint64_t)idx * qpow;
        qpow *= q_;
    }
    return code;
}

uint64_t Ring::padd(uint64_t a, uint64_t b) const { return (a + b) % pmod_; }

uint64_t Ring::pmul(uint64_t a, uint64_t b) const {
    return (uint64_t)((unsigned __int128)a * b % pmod_);
}

uint64_t Ring::add(uint64_t a, uint64_t b) const {
    switch (desc_.kind) {
        case RingKind::equal_char: {
            if (desc_.f == 1) {
                uint64_t r = 0, m = 1;
                for (int i = 0; i <= level_; ++i) {
                    r += ((a % q_) + (b % q_)) % q_ * m;
                    a /= q_;
                    b /= q_;
                    m *= q_;
                }
                return r;
            }
            uint64_t r = 0, m = 1;
            for (int i = 0; i <= level_; ++i) {
                r += (uint64_t)fq_.add((uint32_t)(a % q_), (uint32_t)(b % q_)) * m;
                a /= q_;
                b /= q_;
                m *= q_;
            }
            return r;
        }
        case RingKind::p_adic: {
            if (desc_.f == 1) return padd(a, b);
            uint64_t ca[4], cb[4];
            gr_decode(a, ca);
            gr_decode(b, cb);
            for (uint32_t j = 0; j < desc_.f; ++j) ca[j] = padd(ca[j], cb[j]);
            return gr_encode(ca);
        }
    }
    return 0;
}

uint64_t Ring::neg(uint64_t a) const {
    switch (desc_.kind) {
        case RingKind::equal_char: {
            uint64_t r = 0, m = 1;
            for (int i = 0; i <= level_; ++i) {
                r += (uint64_t)fq_.neg((uint32_t)(a % q_)) * m;
                a /= q_;
                m *= q_;
            }
            return r;
        }
        case RingKind::p_adic: {
            if (desc_.f == 1) return a == 0 ? 0 : pmod_ - a;
            uint64_t c[4];
            gr_decode(a, c);
            for (uint32_t j = 0; j < desc_.f; ++j) c[j] = c[j] == 0 ? 0 : pmod_ - c[j];
            return gr_encode(c);
        }
    }
    return 0;
}

uint64_t Ring::mul(uint64_t a, uint64_t b) const {
    switch (desc_.kind) {
        case RingKind::equal_char: {
            uint32_t da[64], db[64];
            int n = level_;
            for (int i = 0; i <= n; ++i) {
                da[i] = (uint32_t)(a % q_);
                a /= q_;
                db[i] = (uint32_t)(b % q_);
                b /= q_;
            }
            uint64_t r = 0, m = 1;
            for (int i = 0; i <= n; ++i) {
                uint32_t acc = 0;
                for (int j = 0; j <= i; ++j)
                    if (da[j] && db[i - j]) acc = fq_.add(acc, fq_.mul(da[j], db[i - j]));
                r += (uint64_t)acc * m;
                m *= q_;
            }
            return r;
        }
        case RingKind::p_adic: {
            if (desc_.f == 1) return pmul(a, b);
            uint32_t f = desc_.f;
            uint64_t ca[4], cb[4];
            gr_decode(a, ca);
            gr_decode(b, cb);
            uint64_t t[7] = {0};
            for (uint32_t i = 0; i < f; ++i)
                for (uint32_t j = 0; j < f; ++j) t[i + j] = padd(t[i + j], pmul(ca[i], cb[j]));
            const auto& mod = fq_.modulus();
            for (uint32_t i = 2 * f - 2; i >= f; --i) {
                uint64_t lead = t[i];
                if (lead) {
                    t[i] = 0;
                    for (uint32_t j = 0; j < f; ++j) {
                        uint64_t s = pmul(mod[j], lead);
                        t[i - f + j] = padd(t[i - f + j], s == 0 ? 0 : pmod_ - s);
                    }
                }
                if (i == f) break;
            }
            return gr_encode(t);
        }
    }
    return 0;
}

uint64_t Ring::pow(uint64_t a, uint64_t e) const {
    uint64_t acc = one(), base = a;
    while (e) {
        if (e & 1) acc = mul(acc, base);
        base = mul(base, base);
        e >>= 1;
    }
    return acc;
}

uint64_t Ring::from_int(long long c) const {
    bool neg_in = c < 0;
    unsigned long long mag = neg_in ? -(unsigned long long)c : (unsigned long long)c;
    uint64_t r = 0;
    switch (desc_.kind) {
        case RingKind::equal_char:
            r = from_residue((uint32_t)(mag % desc_.p));
            break;
        case RingKind::p_adic:
            if (desc_.f == 1) {
                r = mag % pmod_;
            } else {
                uint64_t c0[4] = {mag % pmod_, 0, 0, 0};
                r = gr_encode(c0);
            }
            break;
    }
    return neg_in ? neg(r) : r;
}

uint64_t Ring::from_bigint(const BigInt& c) const {
    uint64_t modulus = desc_.kind == RingKind::equal_char ? desc_.p : pmod_;
    BigInt m = BigInt::from_u64(modulus);
    BigInt r = c % m;
    long long rr = r.to_ll();
    if (rr < 0) rr += (long long)modulus;
    return from_int(rr);
}

uint64_t Ring::from_residue(uint32_t idx) const { return idx % q_; }

uint64_t Ring::inv_unit(uint64_t a) const {
    if (!is_unit(a)) throw Error(ErrClass::precondition, "inv_unit: not a unit");
    uint64_t x = from_residue(fq_.inv(residue(a)));
    uint64_t two = from_int(2);
    for (int it = 0; it < 8; ++it) {
        uint64_t ax = mul(a, x);
        if (ax == one()) return x;
        x = mul(x, sub(two, ax));
    }
    throw Error(ErrClass::fail, "inv_unit: Newton iteration failed");
}

uint64_t Ring::teichmueller(uint32_t residue_idx) const {
    if (desc_.kind != RingKind::p_adic)
        throw Error(ErrClass::unsupported,
                    "teichmueller: equal-characteristic rings use the coefficient embedding");
    uint64_t x = from_residue(residue_idx % (uint32_t)q_);
    for (int i = 0; i <= level_; ++i) x = pow(x, q_);
    return x;
}

std::string Ring::render(uint64_t a) const {
    if (a == 0) return "0";
    std::ostringstream os;
    bool first = true;
    for (int i = 0; i <= level_; ++i) {
        uint32_t d = digit(a, i);
        if (!d) continue;
        if (!first) os << " + ";
        first = false;
        if (desc_.f == 1) {
            if (i == 0)
                os << d;
            else if (d == 1)
                os << "pi" << (i > 1 ? "^" + std::to_string(i) : "");
            else
                os << d << "*pi" << (i > 1 ? "^" + std::to_string(i) : "");
        } else {
            os << "#" << d;
            if (i >= 1) os << "*pi" << (i > 1 ? "^" + std::to_string(i) : "");
        }
    }
    return os.str();
}

RingEnumerator::RingEnumerator(const Ring& ring, uint64_t budget) : card_(ring.cardinality()) {
    if (card_ > budget)
        throw Error(ErrClass::budget, "ring enumeration needs budget >= " + std::to_string(card_) +
                                          " (configured " + std::to_string(budget) + ")");
}

bool RingEnumerator::next(uint64_t& out) {
    if (next_ >= card_) return false;
    out = next_++;
    return true;
}

}  // namespace gm
