#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace mdr {

using Scalar = std::uint32_t;

// Coefficients: either Z/p^n (s = 1) or the field F_{p^s} (n = 1).
// Field elements are stored as base-p digit strings of their coordinates in
// the basis 1, t, ..., t^{s-1}, where t is a root of the lexicographically
// smallest monic irreducible polynomial of degree s over F_p.
class ScalarRing {
public:
    ScalarRing(int p, int n = 1, int s = 1);

    int p() const { return p_; }
    int n() const { return n_; }
    int s() const { return s_; }
    bool is_field() const { return n_ == 1; }
    // Number of elements: p^n or p^s.
    std::uint32_t size() const { return size_; }

    Scalar zero() const { return 0; }
    Scalar one() const { return 1; }
    Scalar from_int(long long v) const;
    // Canonical integer lift in [0, p^n); only meaningful for s = 1.
    long long to_int(Scalar a) const { return a; }

    Scalar add(Scalar a, Scalar b) const;
    Scalar sub(Scalar a, Scalar b) const;
    Scalar neg(Scalar a) const;
    Scalar mul(Scalar a, Scalar b) const;
    Scalar pow(Scalar a, std::uint64_t e) const;
    bool is_unit(Scalar a) const;
    Scalar inv(Scalar a) const;
    // x -> x^p on F_{p^s}; the identity when s = 1.
    Scalar frob(Scalar a) const;

    // p-adic valuation in Z/p^n; returns n for zero.
    int valuation(Scalar a) const;
    // For a in p*(Z/p^n), the element a/p of Z/p^{n-1} (as a canonical lift).
    Scalar divide_by_p(Scalar a) const;

    // Coefficients of the modulus polynomial, constant term first (field case).
    const std::vector<int>& modulus_poly() const { return modulus_; }

    std::string to_string(Scalar a) const;

    bool operator==(const ScalarRing& o) const { return p_ == o.p_ && n_ == o.n_ && s_ == o.s_; }
    bool operator!=(const ScalarRing& o) const { return !(*this == o); }

private:
    Scalar field_mul_slow(Scalar a, Scalar b) const;

    int p_;
    int n_;
    int s_;
    std::uint32_t size_;
    std::vector<int> modulus_;
    std::vector<Scalar> mul_table_;
};

using RingPtr = std::shared_ptr<const ScalarRing>;

RingPtr make_ring(int p, int n = 1, int s = 1);

bool is_prime(long long v);

}  // namespace mdr
