#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gm/bigint.hpp"
#include "gm/error.hpp"

namespace gm {

// val(0 in R_n): all digits vanish at this precision, true valuation >= n+1.
constexpr int kValNone = std::numeric_limits<int>::max();

enum class RingKind { equal_char, p_adic };

// A complete DVR R with finite residue field F_{p^f}:
//   equal_char -> R = F_q[[t]], uniformizer t
//   p_adic     -> the unramified extension of Z_p with residue F_{p^f},
//                 uniformizer p (f > 1 handled through Galois rings)
struct RingDescriptor {
    RingKind kind = RingKind::equal_char;
    uint32_t p = 2;
    uint32_t f = 1;

    uint64_t q() const;
    std::string str() const;
    bool operator==(const RingDescriptor& o) const {
        return kind == o.kind && p == o.p && f == o.f;
    }
};

bool is_prime(uint64_t n);

// q = p^f for a prime p; false when q is not a prime power
bool factor_prime_power(uint64_t q, uint32_t& p, uint32_t& f);

// Residue field F_{p^f}. Elements are indices in [0, p^f): the index encodes
// the coefficient vector of a polynomial residue, base p, constant term first.
// The defining polynomial comes from a fixed table (Conway polynomials,
// f <= 4) so canonical forms are reproducible across runs.
class ResidueField {
public:
    ResidueField() = default;
    ResidueField(uint32_t p, uint32_t f);

    uint32_t p() const { return p_; }
    uint32_t f() const { return f_; }
    uint64_t q() const { return q_; }

    uint32_t add(uint32_t a, uint32_t b) const;
    uint32_t sub(uint32_t a, uint32_t b) const;
    uint32_t neg(uint32_t a) const;
    uint32_t mul(uint32_t a, uint32_t b) const;
    uint32_t inv(uint32_t a) const;
    uint32_t pow(uint32_t a, uint64_t e) const;

    // coefficients of the defining polynomial, constant first, length f+1
    const std::vector<uint32_t>& modulus() const { return mod_; }

private:
    uint32_t p_ = 2, f_ = 1;
    uint64_t q_ = 2;
    std::vector<uint32_t> mod_;

    void decode(uint32_t a, uint32_t* c) const;
    uint32_t encode(const uint32_t* c) const;
};

// The finite quotient R_n = R/(pi)^{n+1}. Elements are opaque codes in
// [0, q^{n+1}): digit i of the canonical expansion (a_0, ..., a_n) is the
// residue-field index (code / q^i) % q. Enumeration order, truncation and
// valuation are uniform across the three ring kinds; only add/mul differ.
class Ring {
public:
    Ring(RingDescriptor desc, int level);

    const RingDescriptor& descriptor() const { return desc_; }
    int level() const { return level_; }
    uint64_t q() const { return q_; }
    uint64_t cardinality() const { return card_; }
    const ResidueField& residue_field() const { return fq_; }

    uint64_t zero() const { return 0; }
    uint64_t one() const { return 1; }
    uint64_t pi() const;  // the uniformizer; equals 0 in R_0

    uint64_t add(uint64_t a, uint64_t b) const;
    uint64_t neg(uint64_t a) const;
    uint64_t sub(uint64_t a, uint64_t b) const { return add(a, neg(b)); }
    uint64_t mul(uint64_t a, uint64_t b) const;
    uint64_t pow(uint64_t a, uint64_t e) const;

    uint32_t digit(uint64_t a, int i) const;
    uint32_t residue(uint64_t a) const { return digit(a, 0); }

    // smallest i with digit a_i != 0, or kValNone when a == 0 in R_n
    int val(uint64_t a) const;
    bool is_unit(uint64_t a) const { return residue(a) != 0; }

    // digit truncation to a lower level; a ring homomorphism
    uint64_t reduce(uint64_t a, int target_level) const;

    // exact division by pi^k; requires val(a) >= k (or a == 0)
    uint64_t shift_down(uint64_t a, int k) const;
    uint64_t shift_up(uint64_t a, int k) const;  // multiply by pi^k

    uint64_t from_int(long long c) const;
    uint64_t from_bigint(const BigInt& c) const;
    uint64_t from_residue(uint32_t idx) const;  // coefficient embedding of F_q

    uint64_t inv_unit(uint64_t a) const;  // requires val(a) == 0

    // the multiplicative (Teichmueller) lift: x = a mod pi and x^q = x;
    // p-adic descriptors only
    uint64_t teichmueller(uint32_t residue_idx) const;

    std::string render(uint64_t a) const;

private:
    RingDescriptor desc_;
    int level_;
    uint64_t q_, card_;
    ResidueField fq_;
    uint64_t pmod_ = 0;  // p^{n+1} for p-adic kinds

    // Galois-ring scratch conversions (f > 1, p-adic)
    void gr_decode(uint64_t a, uint64_t* c) const;
    uint64_t gr_encode(const uint64_t* c) const;
    uint64_t padd(uint64_t a, uint64_t b) const;
    uint64_t pmul(uint64_t a, uint64_t b) const;
};

// Convenience value wrapper used in non-hot paths and tests.
struct Elem {
    const Ring* ring = nullptr;
    uint64_t code = 0;

    friend Elem operator+(Elem a, Elem b) { return {a.ring, a.ring->add(a.code, b.code)}; }
    friend Elem operator-(Elem a, Elem b) { return {a.ring, a.ring->sub(a.code, b.code)}; }
    friend Elem operator*(Elem a, Elem b) { return {a.ring, a.ring->mul(a.code, b.code)}; }
    friend Elem operator-(Elem a) { return {a.ring, a.ring->neg(a.code)}; }
    friend bool operator==(Elem a, Elem b) { return a.code == b.code; }
};

// Stream of every element of R_n, exactly once, in canonical (code) order.
// Restartable; prefix-partitionable for parallel consumers.
class RingEnumerator {
public:
    explicit RingEnumerator(const Ring& ring, uint64_t budget);
    bool next(uint64_t& out);

private:
    uint64_t next_ = 0, card_;
};

uint64_t default_enumeration_budget();

}  // namespace gm
