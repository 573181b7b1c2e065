#pragma once

#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "mdr/scalar.hpp"

namespace mdr {

using Vec = std::vector<Scalar>;
// Sorted (index, nonzero value) pairs.
using SparseVec = std::vector<std::pair<int, Scalar>>;

SparseVec to_sparse(const Vec& v);
Vec to_dense(const SparseVec& v, int dim);
// v + c*w.
SparseVec axpy(const ScalarRing& R, const SparseVec& v, Scalar c, const SparseVec& w);
bool is_zero(const Vec& v);

// Matrix over a finite field, stored as sorted sparse rows.
class FpMatrix {
public:
    FpMatrix() = default;
    FpMatrix(RingPtr ring, int rows, int cols);

    static FpMatrix from_dense(RingPtr ring, const std::vector<Vec>& rows, int cols);
    static FpMatrix from_triplets(RingPtr ring, int rows, int cols,
                                  const std::vector<std::tuple<int, int, Scalar>>& entries);
    static FpMatrix identity(RingPtr ring, int n);

    const RingPtr& ring() const { return ring_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    Scalar get(int i, int j) const;
    void set(int i, int j, Scalar v);
    void add_to(int i, int j, Scalar v);
    const SparseVec& row(int i) const { return data_[i]; }

    Vec apply(const Vec& x) const;
    FpMatrix operator*(const FpMatrix& o) const;
    FpMatrix operator-(const FpMatrix& o) const;
    FpMatrix transpose() const;
    bool is_zero() const;
    std::vector<std::tuple<int, int, Scalar>> triplets() const;
    std::vector<Vec> to_dense_rows() const;

private:
    RingPtr ring_;
    int rows_ = 0;
    int cols_ = 0;
    std::vector<SparseVec> data_;
};

// Reduced row echelon form built incrementally. Every stored row carries a
// tag vector recording the combination of inserted inputs it equals, so
// reduce() can express a vector in terms of what was inserted.
class Echelon {
public:
    Echelon(RingPtr ring, int dim, int tag_dim = 0);

    int dim() const { return dim_; }
    int rank() const { return static_cast<int>(rows_.size()); }
    const RingPtr& ring() const { return ring_; }

    // Returns false if v was already in the span.
    bool insert(const SparseVec& v, const SparseVec& tag = {});
    bool insert(const Vec& v) { return insert(to_sparse(v)); }
    // (remainder, tag) with v = remainder + (span element described by tag).
    std::pair<SparseVec, SparseVec> reduce(const SparseVec& v) const;
    bool contains(const SparseVec& v) const { return reduce(v).first.empty(); }
    bool contains(const Vec& v) const { return contains(to_sparse(v)); }

    // Basis rows ordered by pivot column.
    std::vector<Vec> basis() const;
    std::vector<int> pivots() const;

private:
    RingPtr ring_;
    int dim_;
    int tag_dim_;
    // pivot column -> (row, tag)
    std::vector<std::pair<int, std::pair<SparseVec, SparseVec>>> rows_;
    std::vector<int> row_of_pivot_;
};

struct RankKernelImage {
    int rank = 0;
    std::vector<Vec> kernel_basis;
    std::vector<Vec> image_basis;
};

// Deterministic: kernel vectors are indexed by free columns in increasing
// order, the image basis is the reduced echelon basis of the column space.
RankKernelImage rank_kernel_image(const FpMatrix& M);
int rank(const FpMatrix& M);
std::optional<Vec> solve(const FpMatrix& M, const Vec& b);

// Quotient Z/B of a subspace by a subspace, with fixed representatives.
class QuotientSpace {
public:
    QuotientSpace(RingPtr ring, int ambient, const std::vector<Vec>& Z, const std::vector<Vec>& B);

    int dim() const { return static_cast<int>(reps_.size()); }
    int ambient() const { return ambient_; }
    const std::vector<Vec>& representatives() const { return reps_; }
    bool in_numerator(const Vec& z) const { return numerator_.contains(z); }
    bool in_denominator(const Vec& z) const { return denominator_.contains(z); }
    // Coordinates of the class of z; nullopt if z is not in Z.
    std::optional<Vec> class_of(const Vec& z) const;

private:
    RingPtr ring_;
    int ambient_;
    std::vector<Vec> reps_;
    Echelon numerator_;
    Echelon denominator_;
    Echelon tagged_;
};

}  // namespace mdr
