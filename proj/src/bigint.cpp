#include "gm/bigint.hpp"

#include <algorithm>
#include <stdexcept>

namespace gm {

static constexpr uint64_t kBase = 1ull << 32;

BigInt::BigInt(long long v) {
    if (v == 0) return;
    neg_ = v < 0;
    unsigned long long mag = neg_ ? (~(unsigned long long)v + 1ull) : (unsigned long long)v;
    while (mag) {
        limbs_.push_back((uint32_t)(mag & 0xffffffffu));
        mag >>= 32;
    }
}

BigInt BigInt::from_u64(uint64_t v) {
    BigInt r;
    while (v) {
        r.limbs_.push_back((uint32_t)(v & 0xffffffffu));
        v >>= 32;
    }
    return r;
}

BigInt::BigInt(const std::string& s) {
    size_t i = 0;
    bool neg = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        neg = s[i] == '-';
        ++i;
    }
    if (i >= s.size()) throw std::invalid_argument("BigInt: empty literal");
    BigInt acc;
    for (; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("BigInt: bad digit");
        acc = acc * BigInt(10) + BigInt(s[i] - '0');
    }
    acc.neg_ = neg && !acc.limbs_.empty();
    *this = acc;
}

void BigInt::trim() {
    while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
    if (limbs_.empty()) neg_ = false;
}

int BigInt::cmp_mag(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    for (size_t i = a.size(); i-- > 0;)
        if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
    return 0;
}

int BigInt::cmp(const BigInt& o) const {
    if (neg_ != o.neg_) return neg_ ? -1 : 1;
    int c = cmp_mag(limbs_, o.limbs_);
    return neg_ ? -c : c;
}

std::vector<uint32_t> BigInt::add_mag(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
    std::vector<uint32_t> r;
    r.reserve(std::max(a.size(), b.size()) + 1);
    uint64_t carry = 0;
    for (size_t i = 0; i < std::max(a.size(), b.size()) || carry; ++i) {
        uint64_t s = carry;
        if (i < a.size()) s += a[i];
        if (i < b.size()) s += b[i];
        r.push_back((uint32_t)(s & 0xffffffffu));
        carry = s >> 32;
    }
    return r;
}

std::vector<uint32_t> BigInt::sub_mag(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
    std::vector<uint32_t> r = a;
    int64_t borrow = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        int64_t d = (int64_t)a[i] - borrow - (i < b.size() ? (int64_t)b[i] : 0);
        borrow = 0;
        if (d < 0) {
            d += (int64_t)kBase;
            borrow = 1;
        }
        r[i] = (uint32_t)d;
    }
    while (!r.empty() && r.back() == 0) r.pop_back();
    return r;
}

std::vector<uint32_t> BigInt::mul_mag(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
    if (a.empty() || b.empty()) return {};
    std::vector<uint32_t> r(a.size() + b.size(), 0);
    for (size_t i = 0; i < a.size(); ++i) {
        uint64_t carry = 0;
        for (size_t j = 0; j < b.size() || carry; ++j) {
            uint64_t cur = r[i + j] + carry;
            if (j < b.size()) cur += (uint64_t)a[i] * b[j];
            r[i + j] = (uint32_t)(cur & 0xffffffffu);
            carry = cur >> 32;
        }
    }
    while (!r.empty() && r.back() == 0) r.pop_back();
    return r;
}

// Knuth algorithm D, base 2^32.
void BigInt::divmod_mag(const std::vector<uint32_t>& u_in, const std::vector<uint32_t>& v_in,
                        std::vector<uint32_t>& q, std::vector<uint32_t>& r) {
    if (v_in.empty()) throw std::domain_error("BigInt: division by zero");
    if (cmp_mag(u_in, v_in) < 0) {
        q.clear();
        r = u_in;
        return;
    }
    if (v_in.size() == 1) {
        uint64_t d = v_in[0], rem = 0;
        q.assign(u_in.size(), 0);
        for (size_t i = u_in.size(); i-- > 0;) {
            uint64_t cur = (rem << 32) | u_in[i];
            q[i] = (uint32_t)(cur / d);
            rem = cur % d;
        }
        while (!q.empty() && q.back() == 0) q.pop_back();
        r.clear();
        if (rem) r.push_back((uint32_t)rem);
        return;
    }

    // normalize so that the top limb of v is >= 2^31
    int shift = 0;
    uint32_t top = v_in.back();
    while (!(top & 0x80000000u)) {
        top <<= 1;
        ++shift;
    }
    size_t n = v_in.size(), m = u_in.size() - n;
    auto shl = [shift](const std::vector<uint32_t>& a, size_t outsize) {
        std::vector<uint32_t> out(outsize, 0);
        uint64_t carry = 0;
        for (size_t i = 0; i < a.size(); ++i) {
            uint64_t cur = ((uint64_t)a[i] << shift) | carry;
            out[i] = (uint32_t)(cur & 0xffffffffu);
            carry = cur >> 32;
        }
        if (a.size() < outsize) out[a.size()] = (uint32_t)carry;
        return out;
    };
    std::vector<uint32_t> u = shl(u_in, u_in.size() + 1);
    std::vector<uint32_t> v = shl(v_in, n);

    q.assign(m + 1, 0);
    for (size_t j = m + 1; j-- > 0;) {
        uint64_t num = ((uint64_t)u[j + n] << 32) | u[j + n - 1];
        uint64_t qhat = num / v[n - 1];
        uint64_t rhat = num % v[n - 1];
        while (qhat >= kBase || qhat * v[n - 2] > ((rhat << 32) | u[j + n - 2])) {
            --qhat;
            rhat += v[n - 1];
            if (rhat >= kBase) break;
        }
        // multiply-subtract
        int64_t borrow = 0;
        uint64_t carry = 0;
        for (size_t i = 0; i < n; ++i) {
            uint64_t p = qhat * v[i] + carry;
            carry = p >> 32;
            int64_t t = (int64_t)u[i + j] - (int64_t)(p & 0xffffffffu) - borrow;
            borrow = 0;
            if (t < 0) {
                t += (int64_t)kBase;
                borrow = 1;
            }
            u[i + j] = (uint32_t)t;
        }
        int64_t t = (int64_t)u[j + n] - (int64_t)carry - borrow;
        if (t < 0) {
            // qhat was one too large; add back
            t += (int64_t)kBase;
            --qhat;
            uint64_t c2 = 0;
            for (size_t i = 0; i < n; ++i) {
                uint64_t s = (uint64_t)u[i + j] + v[i] + c2;
                u[i + j] = (uint32_t)(s & 0xffffffffu);
                c2 = s >> 32;
            }
            t += (int64_t)c2;
        }
        u[j + n] = (uint32_t)t;
        q[j] = (uint32_t)qhat;
    }
    while (!q.empty() && q.back() == 0) q.pop_back();
    r.assign(u.begin(), u.begin() + n);
    if (shift) {
        for (size_t i = 0; i + 1 < n; ++i)
            r[i] = (r[i] >> shift) | (uint32_t)((uint64_t)r[i + 1] << (32 - shift));
        r[n - 1] >>= shift;
    }
    while (!r.empty() && r.back() == 0) r.pop_back();
}

BigInt BigInt::operator-() const {
    BigInt r = *this;
    if (!r.limbs_.empty()) r.neg_ = !r.neg_;
    return r;
}

BigInt BigInt::operator+(const BigInt& o) const {
    BigInt r;
    if (neg_ == o.neg_) {
        r.limbs_ = add_mag(limbs_, o.limbs_);
        r.neg_ = neg_;
    } else {
        int c = cmp_mag(limbs_, o.limbs_);
        if (c == 0) return BigInt();
        if (c > 0) {
            r.limbs_ = sub_mag(limbs_, o.limbs_);
            r.neg_ = neg_;
        } else {
            r.limbs_ = sub_mag(o.limbs_, limbs_);
            r.neg_ = o.neg_;
        }
    }
    r.trim();
    return r;
}

BigInt BigInt::operator-(const BigInt& o) const { return *this + (-o); }

BigInt BigInt::operator*(const BigInt& o) const {
    BigInt r;
    r.limbs_ = mul_mag(limbs_, o.limbs_);
    r.neg_ = !r.limbs_.empty() && (neg_ != o.neg_);
    return r;
}

void BigInt::divmod(const BigInt& num, const BigInt& den, BigInt& q, BigInt& r) {
    divmod_mag(num.limbs_, den.limbs_, q.limbs_, r.limbs_);
    q.neg_ = !q.limbs_.empty() && (num.neg_ != den.neg_);
    r.neg_ = !r.limbs_.empty() && num.neg_;
    q.trim();
    r.trim();
}

BigInt BigInt::operator/(const BigInt& o) const {
    BigInt q, r;
    divmod(*this, o, q, r);
    return q;
}

BigInt BigInt::operator%(const BigInt& o) const {
    BigInt q, r;
    divmod(*this, o, q, r);
    return r;
}

BigInt BigInt::abs() const {
    BigInt r = *this;
    r.neg_ = false;
    return r;
}

BigInt BigInt::pow(unsigned e) const {
    BigInt base = *this, acc(1);
    while (e) {
        if (e & 1) acc *= base;
        base *= base;
        e >>= 1;
    }
    return acc;
}

BigInt BigInt::gcd(BigInt a, BigInt b) {
    a.neg_ = false;
    b.neg_ = false;
    while (!b.is_zero()) {
        BigInt q, r;
        divmod(a, b, q, r);
        a = b;
        b = r;
    }
    return a;
}

bool BigInt::fits_ll() const {
    if (limbs_.size() > 2) return false;
    uint64_t mag = 0;
    if (limbs_.size() >= 1) mag = limbs_[0];
    if (limbs_.size() == 2) mag |= (uint64_t)limbs_[1] << 32;
    return neg_ ? mag <= 0x8000000000000000ull : mag <= 0x7fffffffffffffffull;
}

long long BigInt::to_ll() const {
    if (!fits_ll()) throw std::overflow_error("BigInt: does not fit in long long");
    uint64_t mag = 0;
    if (limbs_.size() >= 1) mag = limbs_[0];
    if (limbs_.size() == 2) mag |= (uint64_t)limbs_[1] << 32;
    return neg_ ? -(long long)mag : (long long)mag;
}

std::string BigInt::str() const {
    if (limbs_.empty()) return "0";
    std::string out;
    BigInt cur = abs();
    BigInt ten(10);
    while (!cur.is_zero()) {
        BigInt q, r;
        divmod(cur, ten, q, r);
        out.push_back(r.limbs_.empty() ? '0' : (char)('0' + r.limbs_[0]));
        cur = q;
    }
    if (neg_) out.push_back('-');
    std::reverse(out.begin(), out.end());
    return out;
}

Rational::Rational(BigInt num, BigInt den) : num_(std::move(num)), den_(std::move(den)) {
    if (den_.is_zero()) throw std::domain_error("Rational: zero denominator");
    normalize();
}

void Rational::normalize() {
    if (den_.is_neg()) {
        num_ = -num_;
        den_ = -den_;
    }
    if (num_.is_zero()) {
        den_ = BigInt(1);
        return;
    }
    BigInt g = BigInt::gcd(num_, den_);
    if (g != BigInt(1)) {
        num_ = num_ / g;
        den_ = den_ / g;
    }
}

Rational Rational::pow_int(uint64_t base, long long e) {
    BigInt b = BigInt::from_u64(base);
    if (e >= 0) return Rational(b.pow((unsigned)e), BigInt(1));
    return Rational(BigInt(1), b.pow((unsigned)(-e)));
}

Rational Rational::operator-() const {
    Rational r = *this;
    r.num_ = -r.num_;
    return r;
}

Rational Rational::operator+(const Rational& o) const {
    return Rational(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
}

Rational Rational::operator-(const Rational& o) const {
    return Rational(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
}

Rational Rational::operator*(const Rational& o) const {
    return Rational(num_ * o.num_, den_ * o.den_);
}

Rational Rational::operator/(const Rational& o) const {
    if (o.is_zero()) throw std::domain_error("Rational: division by zero");
    return Rational(num_ * o.den_, den_ * o.num_);
}

bool Rational::operator<(const Rational& o) const {
    return (num_ * o.den_).cmp(o.num_ * den_) < 0;
}

bool Rational::operator<=(const Rational& o) const {
    return (num_ * o.den_).cmp(o.num_ * den_) <= 0;
}

Rational Rational::abs() const {
    Rational r = *this;
    r.num_ = r.num_.abs();
    return r;
}

std::string Rational::str() const {
    if (den_ == BigInt(1)) return num_.str();
    return num_.str() + "/" + den_.str();
}

}  // namespace gm
