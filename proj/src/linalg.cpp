#include "mdr/linalg.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "mdr/errors.hpp"

namespace mdr {

SparseVec to_sparse(const Vec& v)
{
    SparseVec out;
    for (int i = 0; i < static_cast<int>(v.size()); ++i)
        if (v[i] != 0)
            out.emplace_back(i, v[i]);
    return out;
}

Vec to_dense(const SparseVec& v, int dim)
{
    Vec out(dim, 0);
    for (auto& [i, c] : v)
        out[i] = c;
    return out;
}

bool is_zero(const Vec& v)
{
    return std::all_of(v.begin(), v.end(), [](Scalar c) { return c == 0; });
}

SparseVec axpy(const ScalarRing& R, const SparseVec& v, Scalar c, const SparseVec& w)
{
    if (c == 0 || w.empty())
        return v;
    SparseVec out;
    out.reserve(v.size() + w.size());
    size_t i = 0, j = 0;
    while (i < v.size() || j < w.size()) {
        if (j == w.size() || (i < v.size() && v[i].first < w[j].first)) {
            out.push_back(v[i++]);
        } else if (i == v.size() || w[j].first < v[i].first) {
            out.emplace_back(w[j].first, R.mul(c, w[j].second));
            ++j;
        } else {
            Scalar s = R.add(v[i].second, R.mul(c, w[j].second));
            if (s != 0)
                out.emplace_back(v[i].first, s);
            ++i;
            ++j;
        }
    }
    return out;
}

namespace {

Scalar coeff_at(const SparseVec& v, int col)
{
    auto it = std::lower_bound(v.begin(), v.end(), col, [](const auto& e, int c) { return e.first < c; });
    return (it != v.end() && it->first == col) ? it->second : 0;
}

SparseVec scale(const ScalarRing& R, const SparseVec& v, Scalar c)
{
    SparseVec out;
    out.reserve(v.size());
    for (auto& [i, x] : v) {
        Scalar y = R.mul(x, c);
        if (y != 0)
            out.emplace_back(i, y);
    }
    return out;
}

}  // namespace

FpMatrix::FpMatrix(RingPtr ring, int rows, int cols)
    : ring_(std::move(ring)), rows_(rows), cols_(cols), data_(rows)
{
    if (!ring_->is_field())
        throw ConfigError("matrices need field coefficients");
}

FpMatrix FpMatrix::from_dense(RingPtr ring, const std::vector<Vec>& rows, int cols)
{
    FpMatrix M(std::move(ring), static_cast<int>(rows.size()), cols);
    for (int i = 0; i < M.rows_; ++i)
        M.data_[i] = to_sparse(rows[i]);
    return M;
}

FpMatrix FpMatrix::from_triplets(RingPtr ring, int rows, int cols,
                                 const std::vector<std::tuple<int, int, Scalar>>& entries)
{
    FpMatrix M(std::move(ring), rows, cols);
    for (auto& [i, j, v] : entries)
        M.add_to(i, j, v);
    return M;
}

FpMatrix FpMatrix::identity(RingPtr ring, int n)
{
    FpMatrix M(std::move(ring), n, n);
    for (int i = 0; i < n; ++i)
        M.data_[i] = {{i, 1}};
    return M;
}

Scalar FpMatrix::get(int i, int j) const { return coeff_at(data_[i], j); }

void FpMatrix::set(int i, int j, Scalar v) { add_to(i, j, ring_->sub(v, get(i, j))); }

void FpMatrix::add_to(int i, int j, Scalar v)
{
    if (i < 0 || i >= rows_ || j < 0 || j >= cols_)
        throw PreconditionError(fmt::format("matrix index ({}, {}) out of range", i, j));
    data_[i] = axpy(*ring_, data_[i], v, SparseVec{{j, 1}});
}

Vec FpMatrix::apply(const Vec& x) const
{
    if (static_cast<int>(x.size()) != cols_)
        throw PreconditionError("vector length does not match matrix columns");
    Vec y(rows_, 0);
    for (int i = 0; i < rows_; ++i) {
        Scalar s = 0;
        for (auto& [j, c] : data_[i])
            s = ring_->add(s, ring_->mul(c, x[j]));
        y[i] = s;
    }
    return y;
}

FpMatrix FpMatrix::operator*(const FpMatrix& o) const
{
    if (cols_ != o.rows_)
        throw PreconditionError("matrix product dimension mismatch");
    FpMatrix M(ring_, rows_, o.cols_);
    for (int i = 0; i < rows_; ++i) {
        SparseVec acc;
        for (auto& [k, c] : data_[i])
            acc = axpy(*ring_, acc, c, o.data_[k]);
        M.data_[i] = std::move(acc);
    }
    return M;
}

FpMatrix FpMatrix::operator-(const FpMatrix& o) const
{
    if (rows_ != o.rows_ || cols_ != o.cols_)
        throw PreconditionError("matrix difference dimension mismatch");
    FpMatrix M = *this;
    for (int i = 0; i < rows_; ++i)
        M.data_[i] = axpy(*ring_, data_[i], ring_->neg(1), o.data_[i]);
    return M;
}

FpMatrix FpMatrix::transpose() const
{
    FpMatrix T(ring_, cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (auto& [j, c] : data_[i])
            T.data_[j].emplace_back(i, c);
    return T;
}

bool FpMatrix::is_zero() const
{
    return std::all_of(data_.begin(), data_.end(), [](const SparseVec& r) { return r.empty(); });
}

std::vector<std::tuple<int, int, Scalar>> FpMatrix::triplets() const
{
    std::vector<std::tuple<int, int, Scalar>> out;
    for (int i = 0; i < rows_; ++i)
        for (auto& [j, c] : data_[i])
            out.emplace_back(i, j, c);
    return out;
}

std::vector<Vec> FpMatrix::to_dense_rows() const
{
    std::vector<Vec> out;
    out.reserve(rows_);
    for (auto& r : data_)
        out.push_back(to_dense(r, cols_));
    return out;
}

Echelon::Echelon(RingPtr ring, int dim, int tag_dim)
    : ring_(std::move(ring)), dim_(dim), tag_dim_(tag_dim), row_of_pivot_(dim, -1)
{
}

namespace {

// Dense accumulator: one allocation per call instead of one per pivot hit.
void accumulate(const ScalarRing& R, Vec& acc, Scalar c, const SparseVec& w)
{
    for (auto& [i, x] : w)
        acc[i] = R.add(acc[i], R.mul(c, x));
}

SparseVec collect(const Vec& acc)
{
    SparseVec out;
    for (int i = 0; i < static_cast<int>(acc.size()); ++i)
        if (acc[i] != 0)
            out.emplace_back(i, acc[i]);
    return out;
}

}  // namespace

std::pair<SparseVec, SparseVec> Echelon::reduce(const SparseVec& v) const
{
    const auto& R = *ring_;
    Vec rem(dim_, 0), tag(tag_dim_, 0);
    bool hit = false;
    for (auto& [col, c] : v)
        rem[col] = c;
    // Rows are fully reduced, so the coefficient of v at a pivot column is final.
    for (auto& [col, c] : v) {
        int r = row_of_pivot_[col];
        if (r < 0)
            continue;
        hit = true;
        accumulate(R, rem, R.neg(c), rows_[r].second.first);
        if (tag_dim_ > 0)
            accumulate(R, tag, c, rows_[r].second.second);
    }
    if (!hit)
        return {v, {}};
    return {collect(rem), collect(tag)};
}

bool Echelon::insert(const SparseVec& v, const SparseVec& tag)
{
    const auto& R = *ring_;
    auto [rem, t] = reduce(v);
    if (rem.empty())
        return false;
    SparseVec new_tag = tag_dim_ > 0 ? axpy(R, tag, R.neg(1), t) : SparseVec{};
    int lead = rem.front().first;
    Scalar inv = R.inv(rem.front().second);
    rem = scale(R, rem, inv);
    new_tag = scale(R, new_tag, inv);
    for (auto& [piv, rt] : rows_) {
        Scalar c = coeff_at(rt.first, lead);
        if (c == 0)
            continue;
        rt.first = axpy(R, rt.first, R.neg(c), rem);
        if (tag_dim_ > 0)
            rt.second = axpy(R, rt.second, R.neg(c), new_tag);
    }
    row_of_pivot_[lead] = static_cast<int>(rows_.size());
    rows_.push_back({lead, {std::move(rem), std::move(new_tag)}});
    return true;
}

std::vector<int> Echelon::pivots() const
{
    std::vector<int> out;
    for (int c = 0; c < dim_; ++c)
        if (row_of_pivot_[c] >= 0)
            out.push_back(c);
    return out;
}

std::vector<Vec> Echelon::basis() const
{
    std::vector<Vec> out;
    for (int c : pivots())
        out.push_back(to_dense(rows_[row_of_pivot_[c]].second.first, dim_));
    return out;
}

RankKernelImage rank_kernel_image(const FpMatrix& M)
{
    const auto& R = *M.ring();
    Echelon rows(M.ring(), M.cols());
    for (int i = 0; i < M.rows(); ++i)
        rows.insert(M.row(i));
    RankKernelImage out;
    out.rank = rows.rank();

    auto piv = rows.pivots();
    auto basis = rows.basis();
    std::vector<bool> is_pivot(M.cols(), false);
    for (int c : piv)
        is_pivot[c] = true;
    for (int f = 0; f < M.cols(); ++f) {
        if (is_pivot[f])
            continue;
        Vec x(M.cols(), 0);
        x[f] = 1;
        for (size_t k = 0; k < piv.size(); ++k)
            x[piv[k]] = R.neg(basis[k][f]);
        out.kernel_basis.push_back(std::move(x));
    }

    FpMatrix T = M.transpose();
    Echelon cols(M.ring(), M.rows());
    for (int j = 0; j < T.rows(); ++j)
        cols.insert(T.row(j));
    out.image_basis = cols.basis();

    if (out.rank + static_cast<int>(out.kernel_basis.size()) != M.cols() ||
        static_cast<int>(out.image_basis.size()) != out.rank)
        throw StructuralError("rank-nullity failed after factorization");
    return out;
}

int rank(const FpMatrix& M)
{
    Echelon rows(M.ring(), M.cols());
    for (int i = 0; i < M.rows(); ++i)
        rows.insert(M.row(i));
    return rows.rank();
}

std::optional<Vec> solve(const FpMatrix& M, const Vec& b)
{
    FpMatrix T = M.transpose();
    Echelon cols(M.ring(), M.rows(), M.cols());
    for (int j = 0; j < T.rows(); ++j)
        cols.insert(T.row(j), SparseVec{{j, 1}});
    auto [rem, tag] = cols.reduce(to_sparse(b));
    if (!rem.empty())
        return std::nullopt;
    return to_dense(tag, M.cols());
}

QuotientSpace::QuotientSpace(RingPtr ring, int ambient, const std::vector<Vec>& Z, const std::vector<Vec>& B)
    : ring_(ring), ambient_(ambient), numerator_(ring, ambient), denominator_(ring, ambient),
      tagged_(ring, ambient, static_cast<int>(Z.size()))
{
    for (auto& b : B)
        denominator_.insert(b);
    for (auto& z : Z)
        numerator_.insert(z);
    for (auto& b : denominator_.basis())
        if (!numerator_.contains(b))
            throw StructuralError("quotient denominator is not contained in the numerator");
    Echelon span(ring, ambient);
    for (auto& b : denominator_.basis()) {
        span.insert(b);
        tagged_.insert(to_sparse(b));
    }
    for (auto& z : numerator_.basis()) {
        if (span.insert(z)) {
            int idx = static_cast<int>(reps_.size());
            reps_.push_back(z);
            tagged_.insert(to_sparse(z), SparseVec{{idx, 1}});
        }
    }
}

std::optional<Vec> QuotientSpace::class_of(const Vec& z) const
{
    auto [rem, tag] = tagged_.reduce(to_sparse(z));
    if (!rem.empty())
        return std::nullopt;
    return to_dense(tag, dim());
}

}  // namespace mdr
