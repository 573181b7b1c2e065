#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "mdr/errors.hpp"
#include "mdr/linalg.hpp"
#include "mdr/poly.hpp"

namespace mdr {
namespace {

// Plain Gaussian elimination on a dense copy, used as an oracle.
int naive_rank(const ScalarRing& R, std::vector<Vec> a, int cols)
{
    int r = 0;
    for (int c = 0; c < cols && r < static_cast<int>(a.size()); ++c) {
        int piv = -1;
        for (int i = r; i < static_cast<int>(a.size()); ++i)
            if (a[i][c] != 0) {
                piv = i;
                break;
            }
        if (piv < 0)
            continue;
        std::swap(a[r], a[piv]);
        Scalar inv = R.inv(a[r][c]);
        for (int i = 0; i < static_cast<int>(a.size()); ++i) {
            if (i == r || a[i][c] == 0)
                continue;
            Scalar f = R.mul(a[i][c], inv);
            for (int j = 0; j < cols; ++j)
                a[i][j] = R.sub(a[i][j], R.mul(f, a[r][j]));
        }
        ++r;
    }
    return r;
}

std::vector<Vec> random_dense(const ScalarRing& R, int rows, int cols, std::mt19937& rng, int zero_bias = 0)
{
    std::uniform_int_distribution<std::uint32_t> dist(0, R.size() - 1 + zero_bias);
    std::vector<Vec> a(rows, Vec(cols));
    for (auto& row : a)
        for (auto& x : row) {
            auto v = dist(rng);
            x = v >= R.size() ? 0 : v;
        }
    return a;
}

TEST(ScalarRing, RejectsBadParameters)
{
    EXPECT_THROW(ScalarRing(4), ConfigError);
    EXPECT_THROW(ScalarRing(2), ConfigError);
    EXPECT_THROW(ScalarRing(3, 2, 2), ConfigError);
}

TEST(ScalarRing, AxiomsOnRandomSamples)
{
    std::mt19937 rng(7);
    for (auto [p, n, s] : {std::tuple{3, 1, 1}, {5, 1, 1}, {3, 2, 1}, {5, 2, 1}, {3, 1, 2}, {5, 1, 2}, {3, 1, 3}}) {
        ScalarRing R(p, n, s);
        std::uniform_int_distribution<std::uint32_t> dist(0, R.size() - 1);
        for (int t = 0; t < 200; ++t) {
            Scalar a = dist(rng), b = dist(rng), c = dist(rng);
            EXPECT_EQ(R.add(R.add(a, b), c), R.add(a, R.add(b, c)));
            EXPECT_EQ(R.mul(R.mul(a, b), c), R.mul(a, R.mul(b, c)));
            EXPECT_EQ(R.mul(a, R.add(b, c)), R.add(R.mul(a, b), R.mul(a, c)));
            EXPECT_EQ(R.mul(a, b), R.mul(b, a));
            EXPECT_EQ(R.add(a, R.neg(a)), 0u);
            if (R.is_unit(a))
                EXPECT_EQ(R.mul(a, R.inv(a)), 1u);
            EXPECT_EQ(R.frob(R.mul(a, b)), R.mul(R.frob(a), R.frob(b)));
            EXPECT_EQ(R.frob(R.add(a, b)), R.add(R.frob(a), R.frob(b)));
            if (s == 1)
                EXPECT_EQ(R.frob(a), a);
        }
    }
}

TEST(ScalarRing, FrobeniusIsBijectiveOnExtensionField)
{
    ScalarRing R(3, 1, 2);
    std::vector<bool> hit(R.size(), false);
    for (Scalar a = 0; a < R.size(); ++a)
        hit[R.frob(a)] = true;
    for (bool h : hit)
        EXPECT_TRUE(h);
    // Fixed points of Frobenius are exactly the prime field.
    int fixed = 0;
    for (Scalar a = 0; a < R.size(); ++a)
        fixed += R.frob(a) == a;
    EXPECT_EQ(fixed, 3);
}

TEST(RankKernelImage, IdentityOverF3)
{
    auto R = make_ring(3);
    auto out = rank_kernel_image(FpMatrix::identity(R, 2));
    EXPECT_EQ(out.rank, 2);
    EXPECT_TRUE(out.kernel_basis.empty());
}

TEST(RankKernelImage, ZeroOneByOneOverF5)
{
    auto R = make_ring(5);
    auto out = rank_kernel_image(FpMatrix(R, 1, 1));
    EXPECT_EQ(out.rank, 0);
    ASSERT_EQ(out.kernel_basis.size(), 1u);
    EXPECT_EQ(out.kernel_basis[0], Vec{1});
}

TEST(RankKernelImage, EmptyMatrix)
{
    auto R = make_ring(3);
    EXPECT_EQ(rank_kernel_image(FpMatrix(R, 0, 0)).rank, 0);
    EXPECT_EQ(rank_kernel_image(FpMatrix(R, 0, 3)).kernel_basis.size(), 3u);
}

TEST(RankKernelImage, RandomAgainstDenseOracle)
{
    std::mt19937 rng(11);
    for (int p : {3, 5}) {
        auto R = make_ring(p);
        for (int t = 0; t < 60; ++t) {
            int rows = 1 + rng() % 8, cols = 1 + rng() % 8;
            auto a = random_dense(*R, rows, cols, rng, t % 3 == 0 ? 3 * p : 0);
            auto M = FpMatrix::from_dense(R, a, cols);
            auto out = rank_kernel_image(M);
            EXPECT_EQ(out.rank, naive_rank(*R, a, cols));
            for (auto& k : out.kernel_basis)
                EXPECT_TRUE(is_zero(M.apply(k)));
            // Image basis spans the column space.
            Echelon colspace(R, rows);
            for (auto& v : out.image_basis)
                colspace.insert(v);
            for (int j = 0; j < cols; ++j) {
                Vec col(rows);
                for (int i = 0; i < rows; ++i)
                    col[i] = a[i][j];
                EXPECT_TRUE(colspace.contains(col));
            }
            // Re-echelonizing an echelon basis returns it unchanged.
            Echelon again(R, rows);
            for (auto& v : out.image_basis)
                again.insert(v);
            EXPECT_EQ(again.basis(), out.image_basis);
        }
    }
}

TEST(RankKernelImage, DeterministicBases)
{
    std::mt19937 rng(3);
    auto R = make_ring(5);
    auto a = random_dense(*R, 6, 9, rng);
    auto M = FpMatrix::from_dense(R, a, 9);
    auto x = rank_kernel_image(M);
    auto y = rank_kernel_image(FpMatrix::from_triplets(R, 6, 9, M.triplets()));
    EXPECT_EQ(x.kernel_basis, y.kernel_basis);
    EXPECT_EQ(x.image_basis, y.image_basis);
}

TEST(Solve, FindsPreimageOrReportsNone)
{
    auto R = make_ring(3);
    auto M = FpMatrix::from_dense(R, {{1, 2}, {2, 1}, {0, 0}}, 2);
    auto x = solve(M, Vec{0, 0, 0});
    ASSERT_TRUE(x);
    auto y = solve(M, Vec{1, 2, 0});
    ASSERT_TRUE(y);
    EXPECT_EQ(M.apply(*y), (Vec{1, 2, 0}));
    EXPECT_FALSE(solve(M, Vec{0, 0, 1}));
}

TEST(QuotientSpace, ClassCoordinates)
{
    auto R = make_ring(5);
    // Z = span(e0, e1), B = span(e0 + e1)
    QuotientSpace Q(R, 3, {{1, 0, 0}, {0, 1, 0}}, {{1, 1, 0}});
    EXPECT_EQ(Q.dim(), 1);
    auto c0 = Q.class_of({1, 1, 0});
    ASSERT_TRUE(c0);
    EXPECT_EQ((*c0)[0], 0u);
    auto c1 = Q.class_of(Q.representatives()[0]);
    EXPECT_EQ((*c1)[0], 1u);
    EXPECT_FALSE(Q.class_of({0, 0, 1}));
}

TruncatedPoly poly(RingPtr R, int nvars, int N, std::vector<std::pair<std::vector<int>, long long>> terms)
{
    TruncatedPoly f(R, nvars, N);
    for (auto& [e, c] : terms)
        f.add_term(MultiIndex(e), R->from_int(c));
    return f;
}

TEST(TruncMul, OnePlusTTimesOneMinusT)
{
    auto R = make_ring(3);
    auto f = poly(R, 1, 5, {{{0}, 1}, {{1}, 1}});
    auto g = poly(R, 1, 5, {{{0}, 1}, {{1}, -1}});
    EXPECT_EQ(trunc_mul(f, g), poly(R, 1, 5, {{{0}, 1}, {{2}, -1}}));
}

TEST(TruncMul, TruncatesAboveWindow)
{
    auto R = make_ring(3);
    auto t3 = poly(R, 1, 5, {{{3}, 1}});
    EXPECT_TRUE(trunc_mul(t3, t3).is_zero());
}

TEST(TruncMul, MatchesNaiveConvolution)
{
    auto R = make_ring(3);
    int N = 4;
    auto f = poly(R, 2, N, {{{0, 0}, 1}, {{1, 0}, 1}, {{0, 1}, 1}});
    auto got = trunc_mul(f, f);
    // dense convolution on a (N+1)x(N+1) grid
    std::vector<std::vector<long long>> a(N + 1, std::vector<long long>(N + 1, 0)), c = a;
    a[0][0] = a[1][0] = a[0][1] = 1;
    for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j)
            for (int k = 0; k <= N; ++k)
                for (int l = 0; l <= N; ++l)
                    if (i + j + k + l <= N && i + k <= N && j + l <= N)
                        c[i + k][j + l] += a[i][j] * a[k][l];
    TruncatedPoly want(R, 2, N);
    for (int i = 0; i <= N; ++i)
        for (int j = 0; i + j <= N; ++j)
            want.add_term(MultiIndex{i, j}, R->from_int(c[i][j]));
    EXPECT_EQ(got, want);
}

TEST(TruncMul, WindowMismatchIsConfigError)
{
    auto R = make_ring(3);
    EXPECT_THROW(trunc_mul(TruncatedPoly(R, 1, 4), TruncatedPoly(R, 1, 5)), ConfigError);
}

TEST(TruncatedPoly, RingAxiomsOnRandomSamples)
{
    std::mt19937 rng(5);
    auto R = make_ring(5);
    auto rnd = [&] {
        TruncatedPoly f(R, 2, 6);
        for (int t = 0; t < 6; ++t)
            f.add_term(MultiIndex{int(rng() % 4), int(rng() % 4)}, rng() % 5);
        return f;
    };
    for (int t = 0; t < 30; ++t) {
        auto f = rnd(), g = rnd(), h = rnd();
        EXPECT_EQ(trunc_mul(trunc_mul(f, g), h), trunc_mul(f, trunc_mul(g, h)));
        EXPECT_EQ(trunc_mul(f, g + h), trunc_mul(f, g) + trunc_mul(f, h));
        EXPECT_EQ(trunc_mul(f, g), trunc_mul(g, f));
    }
}

TEST(TruncatedPoly, BulkConstructionMatchesTermwise)
{
    std::mt19937 rng(11);
    auto R = make_ring(3, 2);
    for (int t = 0; t < 20; ++t) {
        std::vector<std::pair<MultiIndex, Scalar>> terms;
        TruncatedPoly f(R, 3, 4);
        for (int k = 0; k < 15; ++k) {
            MultiIndex a{int(rng() % 3), int(rng() % 3), int(rng() % 3)};
            Scalar c = rng() % 9;
            terms.emplace_back(a, c);
            f.add_term(a, c);
        }
        auto g = TruncatedPoly::from_terms(R, 3, 4, terms);
        EXPECT_EQ(g, f);
        EXPECT_TRUE(std::is_sorted(g.terms().begin(), g.terms().end(),
                                   [](const auto& x, const auto& y) { return x.first < y.first; }));
        for (auto& [a, c] : g.terms()) {
            EXPECT_NE(c, 0u);
            EXPECT_LE(a.total(), 4);
        }
        EXPECT_TRUE((f - g).is_zero());
    }
}

TEST(PrincipalUnitInverse, One)
{
    auto R = make_ring(5);
    auto one = TruncatedPoly::constant(R, 1, 3, 1);
    EXPECT_EQ(principal_unit_inverse(one), one);
}

TEST(PrincipalUnitInverse, GeometricSeries)
{
    auto R = make_ring(5);
    auto u = poly(R, 1, 3, {{{0}, 1}, {{1}, 1}});
    EXPECT_EQ(principal_unit_inverse(u), poly(R, 1, 3, {{{0}, 1}, {{1}, -1}, {{2}, 1}, {{3}, -1}}));
}

TEST(PrincipalUnitInverse, MultipliesBackToOne)
{
    std::mt19937 rng(9);
    for (auto R : {make_ring(3), make_ring(5, 2), make_ring(3, 1, 2)}) {
        for (int t = 0; t < 20; ++t) {
            TruncatedPoly u = TruncatedPoly::constant(R, 3, 7, 1);
            for (int k = 0; k < 5; ++k) {
                MultiIndex a{int(rng() % 3), int(rng() % 3), int(rng() % 3)};
                if (a.total() > 0)
                    u.add_term(a, rng() % R->size());
            }
            EXPECT_EQ(trunc_mul(u, principal_unit_inverse(u)), TruncatedPoly::constant(R, 3, 7, 1));
        }
    }
}

TEST(PrincipalUnitInverse, RejectsNonPrincipal)
{
    auto R = make_ring(5);
    EXPECT_THROW(principal_unit_inverse(poly(R, 1, 3, {{{0}, 2}, {{1}, 1}})), PreconditionError);
}

TEST(PdLog, LogOfOneIsZero)
{
    auto R = make_ring(5, 2);
    EXPECT_TRUE(pd_log(TruncatedPoly::constant(R, 2, 3, 1)).is_zero());
}

TEST(PdLog, HomomorphismP5)
{
    auto R = make_ring(5, 2);
    auto a = poly(R, 2, 3, {{{0, 0}, 1}, {{1, 0}, 1}});
    auto b = poly(R, 2, 3, {{{0, 0}, 1}, {{0, 1}, 1}});
    EXPECT_EQ(pd_log(trunc_mul(a, b)), pd_log(a) + pd_log(b));
}

TEST(PdLog, HomomorphismOnRandomUnits)
{
    std::mt19937 rng(21);
    auto R = make_ring(5, 2);
    for (int t = 0; t < 20; ++t) {
        auto mk = [&] {
            TruncatedPoly u = TruncatedPoly::constant(R, 2, 4, 1);
            for (int k = 0; k < 4; ++k) {
                MultiIndex a{int(rng() % 3), int(rng() % 3)};
                if (a.total() > 0)
                    u.add_term(a, rng() % 25);
            }
            return u;
        };
        auto u = mk(), v = mk();
        EXPECT_EQ(pd_log(trunc_mul(u, v)), pd_log(u) + pd_log(v));
    }
}

TEST(PdLog, SafePolicyRejectsLargeWindow)
{
    auto R = make_ring(3, 2);
    EXPECT_THROW(pd_log(poly(R, 1, 3, {{{0}, 1}, {{1}, 1}})), PreconditionError);
}

TEST(PdLog, ExtendedPolicy)
{
    auto R = make_ring(3, 2);
    // log(1 + T) needs T^3/3, which is not integral.
    EXPECT_THROW(pd_log(poly(R, 1, 5, {{{0}, 1}, {{1}, 1}}), LogPolicy::extended), PreconditionError);
    // Units congruent to 1 mod p are fine up to window p^2 - 1, and log stays additive.
    auto u = poly(R, 1, 8, {{{0}, 1}, {{1}, 3}, {{2}, 6}});
    auto v = poly(R, 1, 8, {{{0}, 1}, {{3}, 3}});
    EXPECT_EQ(pd_log(trunc_mul(u, v), LogPolicy::extended),
              pd_log(u, LogPolicy::extended) + pd_log(v, LogPolicy::extended));
    EXPECT_THROW(pd_log(poly(R, 1, 9, {{{0}, 1}}), LogPolicy::extended), PreconditionError);
    // Below p the two policies agree.
    auto w = poly(R, 1, 2, {{{0}, 1}, {{1}, 1}, {{2}, 4}});
    EXPECT_EQ(pd_log(w), pd_log(w, LogPolicy::extended));
}

TEST(ExactDivideByP, Basics)
{
    auto R = make_ring(3, 2);
    auto R1 = make_ring(3);
    EXPECT_EQ(exact_divide_by_p(poly(R, 1, 5, {{{1}, 3}})), poly(R1, 1, 5, {{{1}, 1}}));
    EXPECT_TRUE(exact_divide_by_p(TruncatedPoly(R, 1, 5)).is_zero());
    EXPECT_THROW(exact_divide_by_p(poly(R, 1, 5, {{{1}, 1}})), DivisibilityViolation);
}

TEST(ExactDivideByP, BinomialExpansion)
{
    auto R = make_ring(3, 2);
    auto one_plus_t = poly(R, 1, 5, {{{0}, 1}, {{1}, 1}});
    auto f = trunc_pow(one_plus_t, 3) - poly(R, 1, 5, {{{0}, 1}, {{3}, 1}});
    EXPECT_EQ(exact_divide_by_p(f), poly(make_ring(3), 1, 5, {{{1}, 1}, {{2}, 1}}));
}

TEST(ExactDivideByP, InvertsMultiplyByP)
{
    std::mt19937 rng(4);
    auto R = make_ring(5);
    for (int t = 0; t < 20; ++t) {
        TruncatedPoly f(R, 2, 5);
        for (int k = 0; k < 6; ++k)
            f.add_term(MultiIndex{int(rng() % 3), int(rng() % 3)}, rng() % 5);
        EXPECT_EQ(exact_divide_by_p(multiply_by_p(f)), f);
    }
}

}  // namespace
}  // namespace mdr
