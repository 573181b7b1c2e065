// Acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mdr/linalg.hpp"
#include "mdr/runner.hpp"

namespace {

using namespace mdr;

struct Tally {
    SuiteSummary s;
    std::string first_failure;
    void absorb(const SuiteReport& r)
    {
        s.pass += r.summary.pass;
        s.fail += r.summary.fail;
        s.inconclusive += r.summary.inconclusive;
        s.hypothesis_not_met += r.summary.hypothesis_not_met;
        if (first_failure.empty())
            for (auto& o : r.checks)
                if (o.status == Status::fail || o.status == Status::inconclusive) {
                    first_failure = fmt::format("{} {}: {}", o.name, o.params.dump(), o.note);
                    break;
                }
    }
    // Everything attempted either passes or is outside the hypotheses.
    bool clean() const { return s.fail == 0 && s.inconclusive == 0 && s.pass > 0; }
    std::string str() const
    {
        return fmt::format("pass {} fail {} inconclusive {} hnm {}{}", s.pass, s.fail, s.inconclusive,
                           s.hypothesis_not_met, first_failure.empty() ? "" : "; first: " + first_failure);
    }
};

std::vector<int> grid_values(int p)
{
    std::set<int> v{0, 1, 2, p - 1, p, p + 1, 2 * p};
    return {v.begin(), v.end()};
}

RunConfig g0(int p, int d, std::vector<std::string> suites, std::vector<EisensteinData> eis = {EisensteinData{}})
{
    RunConfig c;
    c.p = p;
    c.d = d;
    c.window = p * p;
    c.mults = multiplicity_grid(grid_values(p), d);
    c.eisenstein = std::move(eis);
    c.suites = std::move(suites);
    return c;
}

// e in {1, 2}; a_0 = 1 and, with `generic`, a_0 = 2.
std::vector<EisensteinData> g0_eisenstein(bool generic)
{
    std::vector<EisensteinData> out{{1, {1}}, {2, {1, 1}}};
    if (generic) {
        out.push_back({1, {2}});
        out.push_back({2, {2, 1}});
    }
    return out;
}

Tally over_g0(const std::vector<std::string>& suites, std::vector<int> dims = {1, 2, 3},
              const std::function<void(RunConfig&)>& tweak = {})
{
    Tally t;
    for (int p : {3, 5})
        for (int d : dims) {
            RunConfig c = g0(p, d, suites);
            if (tweak)
                tweak(c);
            t.absorb(run(c));
        }
    return t;
}

// ---- criteria -------------------------------------------------------------

struct Result {
    bool ok;
    std::string detail;
};

Result cartier()
{
    auto t = over_g0({"cartier"});
    return {t.clean(), t.str()};
}

Result acyclicity()
{
    auto t = over_g0({"acyclicity"});
    return {t.clean(), t.str()};
}

Result connecting()
{
    auto t = over_g0({"connecting"});
    return {t.clean(), t.str()};
}

Result tm_sequences()
{
    auto t = over_g0({"tm_sequences"});
    return {t.clean(), t.str()};
}

Result gr_structure()
{
    auto t = over_g0({"gr_structure"}, {1, 2, 3}, [](RunConfig& c) { c.eisenstein = g0_eisenstein(true); });
    return {t.clean(), t.str()};
}

Result symbols()
{
    auto t = over_g0({"symbols"}, {1, 2, 3}, [](RunConfig& c) {
        c.eisenstein = g0_eisenstein(false);
        c.random_symbols = 50;
    });
    return {t.clean(), t.str()};
}

Result ml_transition()
{
    auto t = over_g0({"ml_transition"});
    return {t.clean(), t.str()};
}

Result product()
{
    Tally t;
    for (int p : {3, 5})
        for (int d : {1, 2}) {
            std::vector<EisensteinData> eis{{1, {1}}, {2, {1, 1}}};
            if (p - 1 > 2)
                eis.push_back({p - 1, std::vector<Scalar>(p - 1, 1)});
            RunConfig c = g0(p, d, {"product"}, eis);
            t.absorb(run(c));
        }
    return {t.clean(), t.str()};
}

Result base_change()
{
    auto t = over_g0({"base_change"}, {1, 2, 3}, [](RunConfig& c) { c.eisenstein = g0_eisenstein(false); });
    return {t.clean(), t.str()};
}

Result pd_envelope()
{
    auto t = over_g0({"pd_envelope"});
    return {t.clean(), t.str()};
}

// Plain Gaussian elimination on dense rows, the oracle for the sparse code.
int dense_rank(std::vector<std::vector<long long>> a, int p)
{
    int rows = static_cast<int>(a.size()), cols = rows ? static_cast<int>(a[0].size()) : 0, r = 0;
    auto inv = [p](long long x) {
        for (long long y = 1; y < p; ++y)
            if (x * y % p == 1)
                return y;
        return 0LL;
    };
    for (int c = 0; c < cols && r < rows; ++c) {
        int piv = -1;
        for (int i = r; i < rows; ++i)
            if (a[i][c] % p) {
                piv = i;
                break;
            }
        if (piv < 0)
            continue;
        std::swap(a[r], a[piv]);
        long long iv = inv(a[r][c]);
        for (auto& x : a[r])
            x = x * iv % p;
        for (int i = 0; i < rows; ++i)
            if (i != r && a[i][c]) {
                long long f = a[i][c];
                for (int k = 0; k < cols; ++k)
                    a[i][k] = ((a[i][k] - f * a[r][k]) % p + p) % p;
            }
        ++r;
    }
    return r;
}

Result linear_algebra_and_determinism()
{
    std::mt19937 rng(20240611u);
    int bad = 0;
    std::string first;
    for (int trial = 0; trial < 500; ++trial) {
        int p = trial % 2 ? 5 : 3;
        RingPtr R = make_ring(p, 1);
        int rows = std::uniform_int_distribution<int>(1, 30)(rng);
        int cols = std::uniform_int_distribution<int>(1, 30)(rng);
        double density = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
        std::vector<Vec> M(rows, Vec(cols, 0));
        std::vector<std::vector<long long>> A(rows, std::vector<long long>(cols, 0));
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                if (std::uniform_real_distribution<double>(0, 1)(rng) < density)
                    A[i][j] = M[i][j] = std::uniform_int_distribution<int>(1, p - 1)(rng);
        FpMatrix F = FpMatrix::from_dense(R, M, cols);
        auto rk = rank_kernel_image(F);
        int oracle = dense_rank(A, p);
        std::string why;
        if (rk.rank != oracle || rank(F) != oracle)
            why = fmt::format("rank {} vs oracle {}", rk.rank, oracle);
        else if (static_cast<int>(rk.kernel_basis.size()) != cols - oracle)
            why = "kernel dimension";
        else if (static_cast<int>(rk.image_basis.size()) != oracle)
            why = "image dimension";
        if (why.empty()) {
            std::vector<std::vector<long long>> K;
            for (auto& k : rk.kernel_basis) {
                for (int i = 0; i < rows; ++i) {
                    long long acc = 0;
                    for (int j = 0; j < cols; ++j)
                        acc += A[i][j] * k[j];
                    if (acc % p)
                        why = "kernel vector not in the kernel";
                }
                K.emplace_back(k.begin(), k.end());
            }
            if (why.empty() && !K.empty() && dense_rank(K, p) != static_cast<int>(K.size()))
                why = "kernel basis dependent";
            // Image basis spans the column space: appending it to the columns keeps the rank.
            std::vector<std::vector<long long>> cols_and_image;
            for (int j = 0; j < cols; ++j) {
                std::vector<long long> col(rows);
                for (int i = 0; i < rows; ++i)
                    col[i] = A[i][j];
                cols_and_image.push_back(col);
            }
            std::vector<std::vector<long long>> image;
            for (auto& v : rk.image_basis)
                image.emplace_back(v.begin(), v.end());
            cols_and_image.insert(cols_and_image.end(), image.begin(), image.end());
            if (why.empty() && (dense_rank(cols_and_image, p) != oracle ||
                                (!image.empty() && dense_rank(image, p) != oracle)))
                why = "image basis does not span the column space";
        }
        if (!why.empty()) {
            ++bad;
            if (first.empty())
                first = fmt::format("trial {} ({}x{} over F_{}): {}", trial, rows, cols, p, why);
        }
    }

    RunConfig c;
    c.p = 3;
    c.d = 2;
    c.window = 9;
    c.mults = {{1, 0}, {3, 2}, {2, 2}};
    c.eisenstein = {EisensteinData{1, {1}}, EisensteinData{2, {1, 1}}};
    c.suites = known_suites();
    c.random_symbols = 10;
    c.jobs = 1;
    auto a = report_fingerprint(run(c)).dump();
    c.jobs = 4;
    auto b = report_fingerprint(run(c)).dump();
    bool same = a == b;
    return {bad == 0 && same, fmt::format("{} of 500 matrices disagree{}; reports {} across jobs 1 and 4", bad,
                                          first.empty() ? "" : " (" + first + ")", same ? "identical" : "differ")};
}

struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Result()> fn;
};

}  // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {1, "cartier_modulus", 120, cartier},
        {2, "residue_homotopy_acyclicity", 60, acyclicity},
        {3, "connecting_identity", 60, connecting},
        {4, "tm_sequences", 120, tm_sequences},
        {5, "syntomic_graded_structure", 300, gr_structure},
        {6, "symbol_cocycles", 180, symbols},
        {7, "mittag_leffler_transition", 60, ml_transition},
        {8, "product_isomorphism", 180, product},
        {9, "tame_base_change", 120, base_change},
        {10, "pd_sanity", 60, pd_envelope},
        {11, "linear_algebra_oracle_and_determinism", 60, linear_algebra_and_determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        auto t0 = std::chrono::steady_clock::now();
        Result r;
        try {
            r = c.fn();
        } catch (const std::exception& e) {
            r = {false, fmt::format("exception: {}", e.what())};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool in_time = secs <= c.limit_seconds;
        bool ok = r.ok && in_time;
        failures += !ok;
        std::printf("%s %2d %-38s %7.1fs / %.0fs  %s%s\n", ok ? "PASS" : "FAIL", c.id, c.name, secs, c.limit_seconds,
                    r.detail.c_str(), in_time ? "" : " [over time limit]");
        std::fflush(stdout);
    }
    return failures ? 1 : 0;
}
