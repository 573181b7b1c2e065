#include <random>

#include <gtest/gtest.h>

#include "mdr/cohomology.hpp"
#include "mdr/errors.hpp"

namespace mdr {
namespace {

MultiIndex cell(std::vector<int> a) { return MultiIndex(a); }

TEST(GradedCohomology, UntwistedLineExamples)
{
    for (int p : {3, 5}) {
        auto chart = make_chart(p, 1, 1, p * p);
        GradedComplex C(chart, Divisor({0}), FormMode::relative);
        EXPECT_EQ(graded_cohomology(C, 1, cell({0, p})).dim_H, 1);
        EXPECT_EQ(graded_cohomology(C, 1, cell({0, 0})).dim_H, 1);
        for (int k = 1; k < p; ++k)
            EXPECT_EQ(graded_cohomology(C, 1, cell({0, k})).dim_H, 0);
        EXPECT_EQ(graded_cohomology(C, 0, cell({0, 0})).dim_H, 1);
    }
}

// Dimension of H^q of the whole window, computed on one big matrix assembled
// from the form-level differential.
int naive_total_dim(const GradedComplex& C, int q)
{
    const auto& R = C.chart().ring;
    auto cells = C.cells();
    auto index = [&](int deg) {
        std::vector<std::pair<MultiIndex, Mask>> out;
        for (auto& a : cells)
            for (Mask I : C.basis(deg))
                out.push_back({a, I});
        return out;
    };
    auto build = [&](int deg) {
        auto src = index(deg), tgt = index(deg + 1);
        std::vector<Vec> rows(tgt.size(), Vec(src.size(), 0));
        for (size_t k = 0; k < src.size(); ++k) {
            LogForm x = LogForm::term(R, C.form_window(), C.mode(), src[k].first, src[k].second, 1);
            LogForm dx = differential_twisted(x, C.divisor());
            for (auto& [key, c] : dx.terms()) {
                auto it = std::find(tgt.begin(), tgt.end(), std::make_pair(key.first, key.second));
                rows[it - tgt.begin()][k] = c;
            }
        }
        return FpMatrix::from_dense(R, rows, static_cast<int>(src.size()));
    };
    int n = static_cast<int>(index(q).size());
    int rq = q < C.top_degree() ? rank(build(q)) : 0;
    int rprev = q > 0 ? rank(build(q - 1)) : 0;
    return n - rq - rprev;
}

TEST(GradedCohomology, AgreesWithWholeComplexOracle)
{
    struct Case {
        int p, d, N;
        std::vector<int> m;
        FormMode mode;
        int label;
    };
    std::vector<Case> cases = {
        {3, 1, 9, {0}, FormMode::relative, 0},          {3, 2, 5, {1, 2}, FormMode::relative, 0},
        {3, 2, 4, {3, 1}, FormMode::special_fiber, 0},  {5, 2, 4, {2, 5}, FormMode::full, 3},
        {3, 2, 3, {0, 0}, FormMode::full, 3},           {5, 3, 2, {1, 0, 5}, FormMode::relative, 0},
    };
    for (auto& c : cases) {
        auto chart = make_chart(c.p, 1, c.d, std::max(c.N, c.p));
        GradedComplex C(chart, Divisor(c.m), c.mode, c.label, c.N);
        for (int q = 0; q <= C.top_degree(); ++q) {
            int sum = 0;
            for (auto& a : C.cells())
                sum += graded_cohomology(C, q, a).dim_H;
            EXPECT_EQ(sum, naive_total_dim(C, q)) << C.describe() << " q=" << q;
        }
    }
}

TEST(GradedCohomology, CellDimsMatchFullComputation)
{
    auto chart = make_chart(3, 1, 2, 6);
    GradedComplex C(chart, Divisor({1, 3}), FormMode::special_fiber);
    for (auto& a : C.cells()) {
        auto dims = cell_dims(C, a);
        for (int q = 0; q <= C.top_degree(); ++q) {
            auto H = graded_cohomology(C, q, a);
            EXPECT_EQ(dims.Z[q], H.dim_Z);
            EXPECT_EQ(dims.B[q], H.dim_B);
            EXPECT_EQ(dims.H[q], H.dim_H);
        }
    }
}

TEST(InducedOnH, IdentityIsIdentity)
{
    auto chart = make_chart(3, 1, 2, 9);
    GradedComplex C(chart, Divisor({0, 0}), FormMode::relative);
    ChainMap id{&C, &C, [](const LogForm& w) { return w; }, 0, "id"};
    for (auto& a : C.cells())
        for (int q = 0; q <= 2; ++q) {
            auto m = induced_on_H(id, q, a);
            EXPECT_EQ(m.matrix.to_dense_rows(), FpMatrix::identity(chart.ring, m.source_H.dim_H).to_dense_rows());
        }
}

TEST(InducedOnH, MultiplicationByTpIsInjective)
{
    auto chart = make_chart(3, 1, 2, 9);
    GradedComplex C(chart, Divisor({0, 0}), FormMode::relative);
    auto R = chart.ring;
    ChainMap mult{&C, &C,
                  [&](const LogForm& w) {
                      return poly_times(TruncatedPoly::monomial(R, w.window(), MultiIndex{0, 3, 0}, 1), w);
                  },
                  0, "T1^p"};
    for (auto& a : C.cells()) {
        if (a.total() + 3 > 9)
            continue;
        for (int q = 0; q <= 2; ++q) {
            auto m = induced_on_H(mult, q, a);
            EXPECT_EQ(rank(m.matrix), m.source_H.dim_H);
        }
    }
}

TEST(InducedOnH, NonChainMapIsStructuralError)
{
    auto chart = make_chart(3, 1, 1, 9);
    GradedComplex C(chart, Divisor({0}), FormMode::relative);
    auto R = chart.ring;
    ChainMap bad{&C, &C,
                 [&](const LogForm& w) {
                     return poly_times(TruncatedPoly::monomial(R, w.window(), MultiIndex{0, 1}, 1), w);
                 },
                 0, "T1"};
    EXPECT_THROW(induced_on_H(bad, 0, cell({0, 1})), StructuralError);
}

TEST(InducedOnH, InverseCartierTwoPaths)
{
    for (int p : {3, 5}) {
        auto chart = make_chart(p, 1, 2, p * p);
        for (auto D : {Divisor({0, 0}), Divisor({1, 0}), Divisor({2, p + 1})}) {
            GradedComplex C(chart, D, FormMode::relative);
            Divisor Dp = D.prime(p);
            MultiIndex shift = Dp.scaled(p).as_index() - D.as_index();
            for (auto& src : monomials_up_to(2, 2)) {
                MultiIndex alpha{0, src[0], src[1]};
                MultiIndex target = alpha.scaled(p) + shift;
                if (!C.contains_cell(target))
                    continue;
                for (int q = 0; q <= 2; ++q) {
                    auto H = graded_cohomology(C, q, target);
                    for (Mask I : C.basis(q)) {
                        LogForm x = LogForm::term(chart.ring, C.form_window(), FormMode::relative, alpha, I, 1);
                        auto a = H.class_of(C.to_vector(cartier_inverse(x, D), target));
                        LogForm y = poly_times(TruncatedPoly::monomial(chart.ring, C.form_window(), shift, 1),
                                               frobenius_pullback(x));
                        auto b = H.class_of(C.to_vector(y, target));
                        ASSERT_TRUE(a && b);
                        EXPECT_EQ(*a, *b);
                        EXPECT_FALSE(is_zero(*a));
                    }
                }
            }
        }
    }
}

// 0 -> A[-1] -> B -> A -> 0 with B the special fiber complex, which splits.
struct SplitSequence {
    Chart chart;
    GradedComplex A, B;
    ShortExactSequence ses;
    SplitSequence(const Chart& c, const Divisor& D)
        : chart(c), A(c, D, FormMode::relative), B(c, D, FormMode::special_fiber)
    {
        auto R = chart.ring;
        ses.i = ChainMap{&A, &B,
                         [this](const LogForm& y) {
                             LogForm full = to_mode(y, FormMode::special_fiber);
                             return wedge(full, dlog_coordinate(chart.ring, chart.nvars(), full.window(), 0,
                                                                FormMode::special_fiber));
                         },
                         1, "wedge dlog T0"};
        ses.pi = ChainMap{&B, &A, [](const LogForm& w) { return relative_projection(w).rel; }, 0, "rel"};
        ses.b_cell_of_c = [](const MultiIndex& a) { return a; };
        ses.a_cell_of_b = [](const MultiIndex& a) { return a; };
    }
};

TEST(ConnectingMap, SplitSequenceGivesZero)
{
    auto chart = make_chart(3, 1, 2, 6);
    SplitSequence S(chart, Divisor({1, 3}));
    for (auto& a : S.A.cells())
        for (int q = 0; q <= 2; ++q) {
            auto delta = connecting_map(S.ses, q, a);
            EXPECT_TRUE(delta.matrix.is_zero());
        }
}

TEST(ConnectingMap, LongExactSequenceIsExact)
{
    auto chart = make_chart(3, 1, 2, 6);
    SplitSequence S(chart, Divisor({2, 0}));
    for (auto& a : S.B.cells()) {
        std::string why;
        EXPECT_TRUE(long_exact_sequence_exact(S.ses, a, &why)) << why;
    }
}

TEST(SemilinearKernel, ConstantsForTrivialDivisor)
{
    auto chart = make_chart(3, 1, 1, 9);
    GradedComplex C(chart, Divisor({0}), FormMode::relative);
    auto K = semilinear_kernel(1, C, 0);
    EXPECT_TRUE(K.conclusive);
    ASSERT_EQ(K.dim, 1);
    EXPECT_EQ(K.basis[0], LogForm::term(chart.ring, 9, FormMode::relative, MultiIndex{0, 0}, 0, 1));
}

TEST(SemilinearKernel, ConstantsOverExtensionField)
{
    auto chart = make_chart(3, 2, 1, 9);
    GradedComplex C(chart, Divisor({0}), FormMode::relative);
    // x = x^p has the solutions F_p inside F_9.
    EXPECT_EQ(semilinear_kernel(1, C, 0).dim, 1);
    // x = a x^p has nonzero solutions iff a is a (p-1)-st power; count them directly.
    const auto& R = *chart.ring;
    for (Scalar a = 1; a < R.size(); ++a) {
        bool solvable = false;
        for (Scalar x = 1; x < R.size(); ++x)
            solvable |= R.mul(a, R.frob(x)) == x;
        EXPECT_EQ(semilinear_kernel(a, C, 0).dim, solvable ? 1 : 0) << a;
    }
    // a = 1 + t generates F_9^* and is not a square.
    EXPECT_EQ(semilinear_kernel(4, C, 0).dim, 0);
}

TEST(SemilinearKernel, ContainsDlogOfPrincipalUnit)
{
    auto chart = make_chart(3, 1, 1, 9);
    GradedComplex C(chart, Divisor({1}), FormMode::relative);
    auto K = semilinear_kernel(1, C, 1);
    TruncatedPoly u = TruncatedPoly::constant(chart.ring, 2, 9, 1);
    u.add_term(MultiIndex{0, 1}, 1);
    // coefficient form of the 1-twist: dlog(1 + T_1) / T_1
    LogForm full = dlog_unit(u, FormMode::relative);
    LogForm w(chart.ring, 2, 9, 1, FormMode::relative);
    for (auto& [k, c] : full.terms())
        w.add_term(k.first - MultiIndex{0, 1}, k.second, c);
    EXPECT_FALSE(semilinear_defect(1, C, w));
    // w lies in the span of the kernel basis.
    auto cells = C.cells();
    Echelon span(chart.ring, static_cast<int>(cells.size()));
    auto flatten = [&](const LogForm& f) {
        Vec v(cells.size(), 0);
        for (size_t i = 0; i < cells.size(); ++i)
            v[i] = f.coeff(cells[i], 0b10);
        return v;
    };
    for (auto& b : K.basis)
        span.insert(flatten(b));
    EXPECT_TRUE(span.contains(flatten(w)));
    for (auto& b : K.basis)
        EXPECT_FALSE(semilinear_defect(1, C, b));
}

TEST(SemilinearKernel, ZeroScalarRejected)
{
    auto chart = make_chart(3, 1, 1, 9);
    GradedComplex C(chart, Divisor({0}), FormMode::relative);
    EXPECT_THROW(semilinear_kernel(0, C, 0), PreconditionError);
}

}  // namespace
}  // namespace mdr
