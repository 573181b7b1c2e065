#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mdr/poly.hpp"
#include "mdr/scalar.hpp"

namespace mdr {

// Degree e and coefficients a_0, ..., a_{e-1} of an Eisenstein polynomial
// T^e + p(a_{e-1}T^{e-1} + ... + a_0), taken mod p.
struct EisensteinData {
    int e = 1;
    std::vector<Scalar> a{1};
};

// Local model: coordinates T_0 (the parameter), T_1..T_d (divisor
// components) and T_inf (non-log, only used by the divided-power model).
// All of T_0..T_d carry log structure.
struct Chart {
    int p = 3;
    int s = 1;
    int d = 1;
    int window = 9;
    EisensteinData eis;
    LogPolicy log_policy = LogPolicy::safe;
    RingPtr ring;

    // Number of form-engine coordinates T_0..T_d.
    int nvars() const { return d + 1; }
};

Chart make_chart(int p, int s, int d, int window, EisensteinData eis = {},
                 LogPolicy policy = LogPolicy::safe);

// Effective divisor sum m_j {T_j = 0} over the components T_1..T_d.
class Divisor {
public:
    Divisor() = default;
    explicit Divisor(std::vector<int> mult);

    int size() const { return static_cast<int>(mult_.size()); }
    const std::vector<int>& mult() const { return mult_; }
    // Multiplicity of chart coordinate j; zero for T_0.
    int at(int j) const { return j == 0 ? 0 : mult_[j - 1]; }
    int total() const;
    bool is_zero() const { return total() == 0; }
    bool dominates(const Divisor& o) const;
    // Componentwise ceil(m / p).
    Divisor prime(int p) const;
    Divisor scaled(int k) const;
    // Exponent vector over T_0..T_d (zero at T_0).
    MultiIndex as_index() const;
    std::string to_string() const;

    bool operator==(const Divisor& o) const { return mult_ == o.mult_; }
    bool operator!=(const Divisor& o) const { return mult_ != o.mult_; }
    bool operator<(const Divisor& o) const { return mult_ < o.mult_; }

private:
    std::vector<int> mult_;
};

enum class FormMode {
    // log forms of the ambient chart
    full,
    // modulo dlog T_0: no index set contains T_0
    relative,
    // coefficients reduced mod T_0
    special_fiber,
};

// Bit j set means dlog T_j is a factor.
using Mask = std::uint32_t;

int mask_size(Mask m);
std::vector<Mask> subsets_of_size(Mask universe, int q);
Mask full_mask(int nvars);
Mask relative_mask(int nvars);
// Indices allowed for forms in the given mode.
Mask allowed_mask(FormMode mode, int nvars);
// Sign of dlog T_j ^ dlog T_I after sorting; 0 if j is in I.
int insert_sign(int j, Mask I);
// Sign of dlog T_I ^ dlog T_J after sorting; 0 if they overlap.
int merge_sign(Mask I, Mask J);

// q-form sum c * T^alpha * dlog T_I. A form on a twisted complex is stored as
// its coefficient form: the actual element is the form times T^D.
class LogForm {
public:
    using Key = std::pair<MultiIndex, Mask>;

    LogForm(RingPtr ring, int nvars, int window, int degree, FormMode mode = FormMode::full);
    static LogForm like(const LogForm& o, int degree);
    static LogForm term(RingPtr ring, int window, FormMode mode, const MultiIndex& alpha, Mask I, Scalar c);

    const RingPtr& ring() const { return ring_; }
    int nvars() const { return nvars_; }
    int window() const { return window_; }
    int degree() const { return q_; }
    FormMode mode() const { return mode_; }
    // Sorted by key, no zero coefficients.
    const std::vector<std::pair<Key, Scalar>>& terms() const { return terms_; }

    void add_term(const MultiIndex& alpha, Mask I, Scalar c);
    // Bulk add_term: sorts and merges once.
    void add_terms(std::vector<std::pair<Key, Scalar>> terms);
    Scalar coeff(const MultiIndex& alpha, Mask I) const;
    bool is_zero() const { return terms_.empty(); }
    std::vector<MultiIndex> multidegrees() const;
    LogForm homogeneous_part(const MultiIndex& alpha) const;

    LogForm operator+(const LogForm& o) const;
    LogForm operator-(const LogForm& o) const;
    LogForm operator-() const;
    LogForm scaled(Scalar c) const;
    LogForm with_window(int window) const;
    // Same terms reinterpreted in another ring Z/p^k (s = 1 only).
    LogForm with_ring(RingPtr ring) const;

    std::string to_string() const;

    bool operator==(const LogForm& o) const;
    bool operator!=(const LogForm& o) const { return !(*this == o); }

private:
    RingPtr ring_;
    int nvars_;
    int window_;
    int q_;
    FormMode mode_;
    std::vector<std::pair<Key, Scalar>> terms_;
};

LogForm wedge(const LogForm& w, const LogForm& e);
LogForm poly_times(const TruncatedPoly& f, const LogForm& w);
LogForm form_from_poly(const TruncatedPoly& f, Mask I, FormMode mode = FormMode::full);
LogForm dlog_coordinate(RingPtr ring, int nvars, int window, int j, FormMode mode = FormMode::full);
// dlog of a unit of the truncated ring (constant term invertible).
LogForm dlog_unit(const TruncatedPoly& u, FormMode mode = FormMode::full);
// dlog of T^k for an integer exponent vector k (negative entries allowed).
LogForm dlog_monomial(RingPtr ring, int window, const std::vector<int>& k, FormMode mode = FormMode::full);
// Reduces to the given mode: relative drops dlog T_0 terms, special fiber
// drops terms divisible by T_0.
LogForm to_mode(const LogForm& w, FormMode mode);

// d w + sum_j m_j dlog T_j ^ w on coefficient forms of the D-twist.
LogForm differential_twisted(const LogForm& w, const Divisor& D);
LogForm differential(const LogForm& w);

// Contraction against dlog T_mu, for forms whose coefficients are taken mod T_mu.
LogForm residue(const LogForm& w, int mu, const Divisor& level);

// T^alpha dlog T_I -> T^{p alpha} dlog T_I with Frobenius on scalars.
// Throws WindowError if p*|alpha| exceeds the window.
LogForm frobenius_pullback(const LogForm& w);

// Coefficient form on the D'-twist -> d_D-closed coefficient form on the
// D-twist representing the inverse Cartier image.
LogForm cartier_inverse(const LogForm& w, const Divisor& D);

// Splits w = dlog T_0 ^ res + rel with rel and res free of dlog T_0.
struct RelativeSplit {
    LogForm rel;
    LogForm res;
};
RelativeSplit relative_projection(const LogForm& w);

}  // namespace mdr
