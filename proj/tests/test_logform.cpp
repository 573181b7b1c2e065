#include <random>

#include <gtest/gtest.h>

#include "mdr/errors.hpp"
#include "mdr/logform.hpp"

namespace mdr {
namespace {

LogForm dlogT(RingPtr R, int nvars, int window, int j) { return dlog_coordinate(R, nvars, window, j); }

LogForm one(RingPtr R, int nvars, int window) { return LogForm::term(R, window, FormMode::full, MultiIndex(nvars), 0, 1); }

LogForm mono(RingPtr R, int window, std::vector<int> a, Mask I, long long c = 1, FormMode mode = FormMode::full)
{
    return LogForm::term(R, window, mode, MultiIndex(a), I, R->from_int(c));
}

LogForm random_form(RingPtr R, int nvars, int window, int q, std::mt19937& rng, FormMode mode = FormMode::full,
                    int fixed_zero = -1)
{
    LogForm w(R, nvars, window, q, mode);
    auto subsets = subsets_of_size(allowed_mask(mode, nvars), q);
    if (subsets.empty())
        return w;
    for (int t = 0; t < 6; ++t) {
        MultiIndex a(nvars);
        for (int j = 0; j < nvars; ++j)
            a.set(j, j == fixed_zero ? 0 : int(rng() % 3));
        if (mode == FormMode::special_fiber)
            a.set(0, 0);
        w.add_term(a, subsets[rng() % subsets.size()], rng() % R->size());
    }
    return w;
}

TEST(LogForm, BulkAddMatchesTermwise)
{
    std::mt19937 rng(21);
    auto R = make_ring(5);
    for (int t = 0; t < 20; ++t) {
        LogForm a = random_form(R, 3, 5, 1, rng), b = random_form(R, 3, 5, 1, rng);
        LogForm sum = a;
        for (auto& [k, c] : b.terms())
            sum.add_term(k.first, k.second, c);
        EXPECT_EQ(a + b, sum);
        EXPECT_TRUE((a + b - b - a).is_zero());
        LogForm bulk = a;
        bulk.add_terms({b.terms().begin(), b.terms().end()});
        EXPECT_EQ(bulk, sum);
    }
}

TEST(Wedge, RepeatedIndexVanishes)
{
    auto R = make_ring(3);
    EXPECT_TRUE(wedge(dlogT(R, 3, 6, 1), dlogT(R, 3, 6, 1)).is_zero());
}

TEST(Wedge, Antisymmetry)
{
    auto R = make_ring(3);
    EXPECT_EQ(wedge(dlogT(R, 3, 6, 1), dlogT(R, 3, 6, 2)), -wedge(dlogT(R, 3, 6, 2), dlogT(R, 3, 6, 1)));
}

TEST(Wedge, ExpandedProduct)
{
    auto R = make_ring(3);
    auto a = mono(R, 6, {0, 1, 0}, 0b010);
    auto b = mono(R, 6, {0, 0, 1}, 0b100) + mono(R, 6, {0, 0, 0}, 0b010);
    EXPECT_EQ(wedge(a, b), mono(R, 6, {0, 1, 1}, 0b110));
}

TEST(Wedge, GradedCommutativeAndAssociative)
{
    std::mt19937 rng(1);
    auto R = make_ring(5);
    for (int t = 0; t < 40; ++t) {
        int q1 = rng() % 3, q2 = rng() % 3, q3 = rng() % 2;
        auto a = random_form(R, 4, 8, q1, rng), b = random_form(R, 4, 8, q2, rng), c = random_form(R, 4, 8, q3, rng);
        auto ab = wedge(a, b), ba = wedge(b, a);
        EXPECT_EQ(ab, (q1 * q2) % 2 ? -ba : ba);
        EXPECT_EQ(wedge(ab, c), wedge(a, wedge(b, c)));
    }
}

TEST(DifferentialTwisted, LogTermOfConstant)
{
    auto R = make_ring(3);
    EXPECT_EQ(differential_twisted(one(R, 2, 6), Divisor({2})), dlogT(R, 2, 6, 1).scaled(2));
    EXPECT_TRUE(differential_twisted(one(R, 2, 6), Divisor({3})).is_zero());
}

TEST(DifferentialTwisted, ExpandBothSummands)
{
    auto R = make_ring(3);
    auto w = mono(R, 6, {0, 0, 1}, 0b010);
    EXPECT_EQ(differential_twisted(w, Divisor({1, 0})), mono(R, 6, {0, 0, 1}, 0b110, -1));
}

TEST(DifferentialTwisted, SquaresToZeroAndKeepsMultidegree)
{
    std::mt19937 rng(2);
    for (int p : {3, 5}) {
        auto R = make_ring(p);
        for (auto mode : {FormMode::full, FormMode::relative, FormMode::special_fiber})
            for (auto D : {Divisor({0, 0, 0}), Divisor({1, 2, 0}), Divisor({p, p + 1, 2 * p})}) {
                for (int t = 0; t < 10; ++t) {
                    auto w = random_form(R, 4, 9, rng() % 3, rng, mode);
                    auto dw = differential_twisted(w, D);
                    EXPECT_TRUE(differential_twisted(dw, D).is_zero());
                    for (auto& a : dw.multidegrees()) {
                        auto ws = w.multidegrees();
                        EXPECT_NE(std::find(ws.begin(), ws.end(), a), ws.end());
                    }
                }
            }
    }
}

TEST(Residue, Properties)
{
    auto R = make_ring(5);
    auto rel = FormMode::relative;
    Divisor level({2, 0});
    EXPECT_EQ(residue(mono(R, 6, {0, 0, 0}, 0b110, 1, rel), 1, level), mono(R, 6, {0, 0, 0}, 0b100, 1, rel));
    EXPECT_TRUE(residue(mono(R, 6, {0, 0, 1}, 0b100, 1, rel), 1, level).is_zero());
}

TEST(Residue, HomotopyOnDlogT2)
{
    auto R = make_ring(5);
    Divisor level({2, 0});
    auto x = mono(R, 6, {0, 0, 0}, 0b100, 1, FormMode::relative);
    auto lhs = differential_twisted(residue(x, 1, level), level) + residue(differential_twisted(x, level), 1, level);
    EXPECT_EQ(lhs, x.scaled(2));
}

TEST(Residue, HomotopyOnRandomForms)
{
    std::mt19937 rng(8);
    for (int p : {3, 5}) {
        auto R = make_ring(p);
        for (int m = 0; m <= 2 * p; ++m) {
            Divisor level({m, 1, 3});
            for (int t = 0; t < 10; ++t) {
                auto x = random_form(R, 4, 9, rng() % 4, rng, FormMode::relative, 1);
                auto lhs =
                    differential_twisted(residue(x, 1, level), level) + residue(differential_twisted(x, level), 1, level);
                EXPECT_EQ(lhs, x.scaled(R->from_int(m)));
            }
        }
    }
}

TEST(Residue, Preconditions)
{
    auto R = make_ring(3);
    EXPECT_THROW(residue(mono(R, 6, {0, 1, 0}, 0b010, 1, FormMode::relative), 1, Divisor({1, 0})), PreconditionError);
    EXPECT_THROW(residue(mono(R, 6, {0, 0, 0}, 0b010, 1, FormMode::relative), 0, Divisor({1, 0})), PreconditionError);
}

TEST(FrobeniusPullback, Examples)
{
    auto R = make_ring(3);
    EXPECT_EQ(frobenius_pullback(dlogT(R, 2, 9, 0)), dlogT(R, 2, 9, 0));
    EXPECT_EQ(frobenius_pullback(mono(R, 9, {0, 1}, 0b10)), mono(R, 9, {0, 3}, 0b10));
    auto F9 = make_ring(3, 1, 2);
    for (Scalar c = 0; c < 9; ++c)
        EXPECT_EQ(frobenius_pullback(one(F9, 2, 9).scaled(c)), one(F9, 2, 9).scaled(F9->pow(c, 3)));
    EXPECT_THROW(frobenius_pullback(mono(R, 9, {0, 4}, 0b10)), WindowError);
}

TEST(FrobeniusPullback, MultipliesMultidegreeByP)
{
    std::mt19937 rng(3);
    auto R = make_ring(3);
    for (int t = 0; t < 20; ++t) {
        auto w = random_form(R, 3, 18, rng() % 3, rng);
        auto f = frobenius_pullback(w);
        auto a = w.multidegrees(), b = f.multidegrees();
        ASSERT_EQ(a.size(), b.size());
        for (size_t i = 0; i < a.size(); ++i)
            EXPECT_EQ(a[i].scaled(3), b[i]);
    }
}

TEST(CartierInverse, Examples)
{
    auto R = make_ring(3);
    Divisor D0({0});
    EXPECT_EQ(cartier_inverse(one(R, 2, 9), D0), one(R, 2, 9));
    EXPECT_EQ(cartier_inverse(dlogT(R, 2, 9, 1), D0), dlogT(R, 2, 9, 1));
    EXPECT_EQ(cartier_inverse(mono(R, 9, {0, 1}, 0b10), D0), mono(R, 9, {0, 3}, 0b10));
}

TEST(CartierInverse, OutputIsClosed)
{
    std::mt19937 rng(6);
    for (int p : {3, 5}) {
        auto R = make_ring(p);
        for (auto D : {Divisor({0, 0}), Divisor({1, 2}), Divisor({p, p + 1}), Divisor({2 * p, p - 1})}) {
            for (int t = 0; t < 10; ++t) {
                auto w = random_form(R, 3, 4 * p * p, rng() % 3, rng);
                auto c = cartier_inverse(w, D);
                EXPECT_TRUE(differential_twisted(c, D).is_zero());
            }
        }
    }
}

TEST(RelativeProjection, Examples)
{
    auto R = make_ring(3);
    auto split0 = relative_projection(dlogT(R, 3, 6, 0));
    EXPECT_TRUE(split0.rel.is_zero());
    EXPECT_EQ(split0.res, mono(R, 6, {0, 0, 0}, 0, 1, FormMode::relative));
    auto split1 = relative_projection(dlogT(R, 3, 6, 1));
    EXPECT_EQ(split1.rel, mono(R, 6, {0, 0, 0}, 0b010, 1, FormMode::relative));
    EXPECT_TRUE(split1.res.is_zero());
    auto split2 = relative_projection(wedge(dlogT(R, 3, 6, 1), dlogT(R, 3, 6, 0)));
    EXPECT_TRUE(split2.rel.is_zero());
    EXPECT_EQ(split2.res, mono(R, 6, {0, 0, 0}, 0b010, -1, FormMode::relative));
}

TEST(RelativeProjection, Reassembles)
{
    std::mt19937 rng(12);
    auto R = make_ring(5);
    for (int t = 0; t < 20; ++t) {
        auto w = random_form(R, 3, 8, 1 + rng() % 2, rng);
        auto s = relative_projection(w);
        auto back = wedge(dlogT(R, 3, 8, 0), to_mode(s.res, FormMode::full)) + to_mode(s.rel, FormMode::full);
        EXPECT_EQ(back, w);
    }
}

TEST(PdLog, DerivativeMatchesDlog)
{
    auto R = make_ring(5, 2);
    TruncatedPoly u = TruncatedPoly::constant(R, 2, 3, 1);
    u.add_term(MultiIndex{0, 1}, 1);
    auto lhs = differential(form_from_poly(pd_log(u), 0));
    EXPECT_EQ(lhs, dlog_unit(u));
}

TEST(Dlog, LogarithmicDerivativeIsAdditive)
{
    std::mt19937 rng(14);
    auto R = make_ring(3);
    for (int t = 0; t < 10; ++t) {
        TruncatedPoly u = TruncatedPoly::constant(R, 3, 7, 1 + rng() % 2), v = u;
        for (int k = 0; k < 4; ++k) {
            u.add_term(MultiIndex{int(rng() % 2), 1 + int(rng() % 2), 0}, rng() % 3);
            v.add_term(MultiIndex{0, int(rng() % 2), 1 + int(rng() % 2)}, rng() % 3);
        }
        EXPECT_EQ(dlog_unit(trunc_mul(u, v)), dlog_unit(u) + dlog_unit(v));
        EXPECT_TRUE(differential(dlog_unit(u)).is_zero());
    }
}

}  // namespace
}  // namespace mdr
