#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mdr/scalar.hpp"

namespace mdr {

constexpr int kMaxVars = 8;

// Exponent vector of a monomial T^alpha.
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(int nvars);
    MultiIndex(std::initializer_list<int> exps);
    explicit MultiIndex(const std::vector<int>& exps);

    int size() const { return n_; }
    int total() const { return total_; }
    int operator[](int i) const { return e_[i]; }
    void set(int i, int v);

    MultiIndex operator+(const MultiIndex& o) const;
    MultiIndex operator-(const MultiIndex& o) const;
    MultiIndex scaled(int k) const;
    // Componentwise >=.
    bool dominates(const MultiIndex& o) const;
    bool nonnegative() const;

    std::vector<int> to_vector() const { return std::vector<int>(e_.begin(), e_.begin() + n_); }
    std::string to_string() const;

    bool operator==(const MultiIndex& o) const { return n_ == o.n_ && e_ == o.e_; }
    bool operator!=(const MultiIndex& o) const { return !(*this == o); }
    bool operator<(const MultiIndex& o) const
    {
        if (n_ != o.n_)
            return n_ < o.n_;
        return e_ < o.e_;
    }

private:
    std::array<int, kMaxVars> e_{};
    int n_ = 0;
    int total_ = 0;
};

// All exponent vectors with nvars entries and total degree <= window, in
// lexicographic order.
std::vector<MultiIndex> monomials_up_to(int nvars, int window);

// Element of R[T_0, ..., T_{n-1}] / (monomials of total degree > window).
class TruncatedPoly {
public:
    TruncatedPoly(RingPtr ring, int nvars, int window);

    static TruncatedPoly constant(RingPtr ring, int nvars, int window, Scalar c);
    static TruncatedPoly monomial(RingPtr ring, int window, const MultiIndex& a, Scalar c);
    // Sums repeated monomials; cheaper than add_term for bulk construction.
    static TruncatedPoly from_terms(RingPtr ring, int nvars, int window,
                                    std::vector<std::pair<MultiIndex, Scalar>> terms);

    const RingPtr& ring() const { return ring_; }
    int nvars() const { return nvars_; }
    int window() const { return window_; }
    // Sorted by exponent, no zero coefficients.
    const std::vector<std::pair<MultiIndex, Scalar>>& terms() const { return terms_; }

    Scalar coeff(const MultiIndex& a) const;
    Scalar constant_term() const;
    // Adds c*T^a; terms above the window are discarded.
    void add_term(const MultiIndex& a, Scalar c);
    bool is_zero() const { return terms_.empty(); }
    // Smallest total degree of a stored term; -1 for zero.
    int min_degree() const;

    TruncatedPoly operator+(const TruncatedPoly& o) const;
    TruncatedPoly operator-(const TruncatedPoly& o) const;
    TruncatedPoly operator-() const;
    TruncatedPoly scaled(Scalar c) const;

    // Ring Frobenius lift T^a -> T^{pa}, coefficients x -> x^p on F_{p^s}.
    TruncatedPoly frobenius() const;
    // Reinterprets integer coefficients in another Z/p^k (s = 1 only).
    TruncatedPoly with_ring(RingPtr ring) const;
    TruncatedPoly with_window(int window) const;

    std::string to_string() const;

    bool operator==(const TruncatedPoly& o) const;
    bool operator!=(const TruncatedPoly& o) const { return !(*this == o); }

private:
    RingPtr ring_;
    int nvars_;
    int window_;
    std::vector<std::pair<MultiIndex, Scalar>> terms_;
};

TruncatedPoly trunc_mul(const TruncatedPoly& f, const TruncatedPoly& g);
TruncatedPoly trunc_pow(const TruncatedPoly& f, int k);

// Inverse of 1 + f with f of positive degree, by the geometric series.
TruncatedPoly principal_unit_inverse(const TruncatedPoly& u);

// How log(1 + f) handles the terms f^k/k with p | k.
enum class LogPolicy {
    // Requires window < p, so no such term survives truncation.
    safe,
    // Works in Z/p^3 and divides f^k exactly by p; requires window < p^2.
    extended,
};

// log(u) = sum (-1)^{k+1} f^k / k for a principal unit u = 1 + f over Z/p^2.
TruncatedPoly pd_log(const TruncatedPoly& u, LogPolicy policy = LogPolicy::safe);

// Z/p^n -> Z/p^{n-1}: divides every coefficient by p. Throws
// DivisibilityViolation if some coefficient is not divisible.
TruncatedPoly exact_divide_by_p(const TruncatedPoly& f);

// Z/p^{n} -> Z/p^{n+1}: multiplication by p on canonical lifts.
TruncatedPoly multiply_by_p(const TruncatedPoly& f);

}  // namespace mdr
