#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mdr/cohomology.hpp"
#include "mdr/report.hpp"

namespace mdr {

// ---- divided powers ---------------------------------------------------

// Base ring R[T_0, ..., T_d, T_inf] truncated at total degree `window`, with
// the free basis g1^[i] g2^[j] (i + j <= max_order), g1 = T_inf and
// g2 = T_1...T_d - T_0. Products beyond max_order are dropped, i.e. the model
// is taken modulo J^[max_order + 1].
class PDTruncated {
public:
    PDTruncated(RingPtr ring, int d, int window, int max_order);

    static PDTruncated basis_element(RingPtr ring, int d, int window, int max_order, int i, int j,
                                     Scalar c = 1);
    // Embeds a base polynomial (nvars d + 2) as a multiple of g^[0].
    static PDTruncated from_base(const TruncatedPoly& f, int max_order);

    const RingPtr& ring() const { return ring_; }
    int d() const { return d_; }
    int nvars() const { return d_ + 2; }
    int inf_index() const { return d_ + 1; }
    int window() const { return window_; }
    int max_order() const { return max_order_; }
    const std::map<std::pair<int, int>, TruncatedPoly>& terms() const { return terms_; }

    void add(int i, int j, const TruncatedPoly& a);
    TruncatedPoly coeff(int i, int j) const;
    bool is_zero() const { return terms_.empty(); }
    // Smallest i + j with a nonzero coefficient; a large value for zero.
    int min_order() const;
    // True iff the element lies in the span of g1^[i] g2^[j] with i + j >= r.
    bool in_ideal_power(int r) const { return min_order() >= r; }

    PDTruncated operator+(const PDTruncated& o) const;
    PDTruncated operator-(const PDTruncated& o) const;
    PDTruncated scaled(Scalar c) const;
    PDTruncated times_base(const TruncatedPoly& f) const;
    PDTruncated with_ring(RingPtr ring) const;
    PDTruncated with_max_order(int max_order) const;

    bool operator==(const PDTruncated& o) const;
    bool operator!=(const PDTruncated& o) const { return !(*this == o); }
    std::string to_string() const;

private:
    RingPtr ring_;
    int d_;
    int window_;
    int max_order_;
    std::map<std::pair<int, int>, TruncatedPoly> terms_;
};

PDTruncated pd_multiply(const PDTruncated& x, const PDTruncated& y);
// Frobenius lift: T -> T^p on every coordinate, g1^[i] -> (pi)!/i! g1^[pi],
// g2^[j] -> p^j h^j / j! with phi(g2) = p h. The result uses `max_order`.
PDTruncated pd_frobenius(const PDTruncated& x, int max_order);
// phi(x) / p^r reduced mod p, for x in J^[r] over Z/p^{r+1}. The result keeps
// the extended basis up to p * x.max_order(). Throws DivisibilityViolation.
PDTruncated phi_r(const PDTruncated& x, int r);

// Rank of multiplication by f on polynomials of degree <= window - deg f,
// certified by distinct leading monomials when possible.
struct MultiplicationRank {
    int columns = 0;
    int rank = 0;
    bool certified = false;  // leading-term certificate succeeded
};
MultiplicationRank multiplication_rank(const TruncatedPoly& f);

// f = prod T_j^{m_j} - T_inf acting on the truncated divided-power model.
CheckOutcome check_pd_envelope(const Chart& chart, const Divisor& D);

// (a_0^p + a_1^p T^p + ... + a_{e-1}^p T^{(e-1)p})^k over the chart scalars
// in one variable (T_0), truncated at `window`.
TruncatedPoly eisenstein_phi(const Chart& chart, int k, int window);
TruncatedPoly eisenstein_phi(RingPtr ring, const EisensteinData& eis, int k, int window);

// ---- graded pieces of the syntomic complex -------------------------------

// gr^m of the fiber of 1 - phi_r : A -> B in degrees q-1..q+1, on the
// D-twist. A^j is J^[r-j] (x) omega^j, whose gr^m is the full-mode piece at
// T_0-exponent level(j); B^j is the full-mode piece at exponent m.
class SyntomicGrPiece {
public:
    SyntomicGrPiece(const Chart& chart, Divisor D, int q, int r, int m);

    const Chart& chart() const { return chart_; }
    const Divisor& divisor() const { return D_; }
    int q() const { return q_; }
    int r() const { return r_; }
    int m() const { return m_; }

    // T_0-exponent of gr^m A^j, nullopt when that graded piece vanishes.
    std::optional<int> a_level(int j) const;
    bool b_present(int j) const;
    // The identity component A^j -> B^j survives in gr^m.
    bool one_nonzero(int j) const;
    // Constant a_0^{p(r-j)} when the Frobenius component survives in gr^m.
    std::optional<Scalar> phi_scalar(int j) const;

    // Complexes for the T_0-exponents used (full mode).
    const GradedComplex& a_complex(int j) const;
    const GradedComplex& b_complex() const { return *levels_.at(m_); }

    // (1 - phi_r) on a coefficient form of gr^m A^j, as a coefficient form of
    // gr^m B^j. Cells past the window are kept.
    LogForm one_minus_phi(const LogForm& a) const;
    // The differential of gr^m A (zero between different levels).
    LogForm d_a(const LogForm& a) const;

    std::string describe() const;

private:
    Chart chart_;
    Divisor D_;
    int q_, r_, m_;
    std::map<int, std::shared_ptr<GradedComplex>> levels_;
};

SyntomicGrPiece build_syntomic_gr(const Chart& chart, const Divisor& D, int q, int r, int m);

// Integer-only threshold tests for theta = r - q.
// sign(m (p-1) - e p theta)
int compare_lower(int p, int e, int theta, int m);
// sign(m (p-1) - e p (theta + 1))
int compare_upper(int p, int e, int theta, int m);

CheckOutcome check_gr_structure(const Chart& chart, const Divisor& D, int q, int r, int m);

// ---- symbols ----------------------------------------------------------

// unit * T^monomial with the unit over Z/p^2 (nvars d + 1).
struct SymbolFactor {
    TruncatedPoly unit;
    std::vector<int> monomial;
};

struct SymbolInput {
    TruncatedPoly x;  // principal unit, x - 1 in the ideal of D
    std::vector<SymbolFactor> a;

    int degree() const { return static_cast<int>(a.size()) + 1; }
};

// The two components over F_p as untwisted forms in full mode.
struct SymbolCocycle {
    LogForm first;   // degree q
    LogForm second;  // degree q - 1
};

// p^{-1} log(u^p phi(u)^{-1}) mod p for a unit u over Z/p^2.
TruncatedPoly symbol_log(const TruncatedPoly& u);
// phi on forms mod p: T^a dlog T_I -> T^{pa} dlog T_I; terms pushed past the
// window are dropped.
LogForm frobenius_truncated(const LogForm& w);

SymbolCocycle symbol_cocycle(const SymbolInput& S, const Divisor& D);
// Empty iff d(second) = first - phi(first) and d(first) = 0 mod p.
std::optional<std::string> symbol_closedness_defect(const SymbolCocycle& c);

CheckOutcome check_symbol_filtration(const Chart& chart, const Divisor& D, const SymbolInput& S, int m);
CheckOutcome check_graded_symbol_map(const Chart& chart, const Divisor& D, int q, int r, int m,
                                     int random_symbols = 50);

// ---- comparison maps --------------------------------------------------

CheckOutcome check_product_iso(const Chart& chart, const Divisor& D, int q, int r);
CheckOutcome check_tame_base_change(const Chart& chart, const Divisor& D, int q, int r, int w);

// Dispatch for the syntomic checks by report name.
CheckOutcome rerun_syntomic_check(const std::string& check, const Chart& chart, const Json& params);

}  // namespace mdr
