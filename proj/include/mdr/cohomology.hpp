#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mdr/linalg.hpp"
#include "mdr/logform.hpp"

namespace mdr {

// Complex of twisted log forms that splits into finite cells, one per
// multidegree alpha of the coefficient form. In each cell the differential is
// wedge with sum_j (alpha_j + m_j) dlog T_j over the allowed indices.
//   relative:       indices T_1..T_d, alpha_0 = 0 (forms on the special fiber modulo dlog T_0)
//   special_fiber:  indices T_0..T_d, alpha_0 = 0
//   full:           indices T_0..T_d, alpha_0 = t0_label (the graded piece T_0^label O / T_0^{label+1} O)
// Cells range over alpha with |alpha_1..alpha_d| <= window.
class GradedComplex {
public:
    GradedComplex(const Chart& chart, Divisor D, FormMode mode, int t0_label = 0);
    GradedComplex(const Chart& chart, Divisor D, FormMode mode, int t0_label, int window);

    const Chart& chart() const { return chart_; }
    const Divisor& divisor() const { return D_; }
    FormMode mode() const { return mode_; }
    int t0_label() const { return label_; }
    int window() const { return window_; }
    // Window for the coefficient forms, including the T_0 label.
    int form_window() const { return window_ + label_; }
    Mask index_set() const { return S_; }
    int top_degree() const { return mask_size(S_); }

    const std::vector<Mask>& basis(int q) const;
    int rank_of(int q) const { return static_cast<int>(basis(q).size()); }
    int index_of(Mask I) const { return index_[I]; }

    bool contains_cell(const MultiIndex& alpha) const;
    std::vector<MultiIndex> cells() const;
    MultiIndex cell_of(const std::vector<int>& beta) const;
    // Koszul coefficient alpha_j + m_j.
    Scalar koszul(const MultiIndex& alpha, int j) const;
    // True when every Koszul coefficient vanishes mod p (all differentials zero).
    bool resonant(const MultiIndex& alpha) const;

    // Matrix of d: C^q_alpha -> C^{q+1}_alpha (rows: degree q+1 basis).
    FpMatrix differential(int q, const MultiIndex& alpha) const;

    Vec to_vector(const LogForm& w, const MultiIndex& alpha) const;
    LogForm from_vector(const Vec& v, int q, const MultiIndex& alpha) const;
    LogForm zero_form(int q) const;
    // d on coefficient forms of this complex.
    LogForm d(const LogForm& w) const;

    std::string describe() const;

private:
    Chart chart_;
    Divisor D_;
    FormMode mode_;
    int label_;
    int window_;
    Mask S_;
    std::vector<std::vector<Mask>> bases_;
    std::vector<int> index_;
};

struct CohomologyBasis {
    int q = 0;
    MultiIndex alpha;
    int dim_Z = 0;
    int dim_B = 0;
    int dim_H = 0;
    std::vector<Vec> cocycles;
    std::vector<Vec> coboundaries;
    std::shared_ptr<const QuotientSpace> quotient;

    const std::vector<Vec>& representatives() const { return quotient->representatives(); }
    bool is_cocycle(const Vec& v) const { return quotient->in_numerator(v); }
    bool is_coboundary(const Vec& v) const { return quotient->in_denominator(v); }
    std::optional<Vec> class_of(const Vec& v) const { return quotient->class_of(v); }
};

CohomologyBasis graded_cohomology(const GradedComplex& C, int q, const MultiIndex& alpha);

// Dimensions of Z, B, H in every degree of a cell, without representatives.
struct CellDims {
    std::vector<int> Z, B, H;
};
CellDims cell_dims(const GradedComplex& C, const MultiIndex& alpha);

// A degree-preserving map between graded complexes given on forms. It may be
// Frobenius-semilinear; matrices are then taken on basis vectors.
struct ChainMap {
    const GradedComplex* source = nullptr;
    const GradedComplex* target = nullptr;
    std::function<LogForm(const LogForm&)> apply;
    // Degree of the target minus the degree of the source.
    int shift = 0;
    std::string name;
};

// Target cell of a cell under a monomial map, or nullopt if it maps to zero.
std::optional<MultiIndex> target_cell(const ChainMap& f, int q, const MultiIndex& alpha);

// Matrix of f: C^q_alpha -> C^{q+shift}_{target}.
FpMatrix map_matrix(const ChainMap& f, int q, const MultiIndex& alpha, const MultiIndex& target);

// Throws StructuralError if f does not commute with d on the cell.
void assert_chain_map(const ChainMap& f, int q, const MultiIndex& alpha);

struct InducedMap {
    MultiIndex source_alpha;
    std::optional<MultiIndex> target_alpha;
    CohomologyBasis source_H;
    std::optional<CohomologyBasis> target_H;
    // Columns: images of the source representatives in target coordinates.
    FpMatrix matrix;
};

InducedMap induced_on_H(const ChainMap& f, int q, const MultiIndex& alpha_source);

// 0 -> A -> B -> C -> 0 with given maps and cell correspondences.
struct ShortExactSequence {
    ChainMap i;
    ChainMap pi;
    // Cell of B lying over a cell of C, and cell of A lying under a cell of B.
    std::function<MultiIndex(const MultiIndex&)> b_cell_of_c;
    std::function<MultiIndex(const MultiIndex&)> a_cell_of_b;
};

// Throws StructuralError unless A_q -> B_q -> C_q is exact on the cell of B.
void assert_exact(const ShortExactSequence& S, int q, const MultiIndex& alpha_b);

struct ConnectingMap {
    CohomologyBasis source_H;  // H^q(C)
    CohomologyBasis target_H;  // H^{q+1}(A)
    FpMatrix matrix;
};

// Snake construction H^q(C)_alpha -> H^{q+1}(A); checks exactness and that
// the result does not depend on the chosen lift.
ConnectingMap connecting_map(const ShortExactSequence& S, int q, const MultiIndex& alpha_c);

// Dimension check of the long exact sequence on one cell of B.
bool long_exact_sequence_exact(const ShortExactSequence& S, const MultiIndex& alpha_b, std::string* why = nullptr);

// C^{-1} on coefficient forms of the D-twist: alpha -> p alpha + (p-1) m.
LogForm cartier_on_twist(const LogForm& w, const Divisor& D);

struct SemilinearKernel {
    bool conclusive = true;
    std::string note;
    // F_p-dimension of the truncated kernel.
    int dim = 0;
    // F_p-basis of the kernel as forms.
    std::vector<LogForm> basis;
    int seeds = 0;
    int closed_orbits = 0;
};

// Kernel of x -> x - a C^{-1}(x) (mod B) on Z^q of a relative or special
// fiber complex, modulo terms above the window.
SemilinearKernel semilinear_kernel(Scalar a, const GradedComplex& C, int q);

// Value of [x] - a [C^{-1} x] per cell: empty iff x is killed modulo B
// inside the window. Returns the first offending cell otherwise.
std::optional<MultiIndex> semilinear_defect(Scalar a, const GradedComplex& C, const LogForm& x);

// F_p-coordinates of a vector over F_{p^s} (base-p digits).
std::vector<Scalar> fp_coordinates(const ScalarRing& R, const Vec& v);

}  // namespace mdr
