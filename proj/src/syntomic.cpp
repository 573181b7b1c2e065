#include "mdr/syntomic.hpp"

#include <map>
#include <tuple>

#include <fmt/format.h>

#include "gr_fiber.hpp"
#include "mdr/errors.hpp"
#include "mdr/modulus.hpp"

namespace mdr {

using namespace detail;

namespace {

Json divisor_json(const Divisor& D) { return Json(D.mult()); }

void check_range(const Chart& chart, const Divisor& D, int q, int r, int m)
{
    if (D.size() != chart.d)
        throw PreconditionError(fmt::format("divisor {} does not match dim {}", D.to_string(), chart.d));
    if (q < 0 || q > r || r > chart.p - 2)
        throw PreconditionError(fmt::format("need 0 <= q <= r <= p-2, got q={} r={} p={}", q, r, chart.p));
    if (m < 0)
        throw PreconditionError("negative filtration index");
}

enum class Region { below, endpoint, interior, above };

Region region_of(int p, int e, int theta, int m)
{
    int lo = compare_lower(p, e, theta, m);
    if (lo < 0)
        return Region::below;
    if (lo == 0)
        return Region::endpoint;
    return compare_upper(p, e, theta, m) < 0 ? Region::interior : Region::above;
}

const char* region_name(Region r)
{
    switch (r) {
    case Region::below:
        return "below";
    case Region::endpoint:
        return "endpoint";
    case Region::interior:
        return "interior";
    case Region::above:
        return "above";
    }
    return "?";
}

Scalar a0(const Chart& chart) { return chart.eis.a.empty() ? 0 : chart.eis.a[0]; }

// Obstruction monomials of degree q-1 whose cell p w - D lies in the window.
int obstruction_cells_in_window(const Chart& chart, const Divisor& D, int q)
{
    using Key = std::tuple<int, int, int, std::vector<int>, int>;
    thread_local std::map<Key, int> cache;
    Key key{chart.p, chart.d, chart.window, D.mult(), q};
    if (auto it = cache.find(key); it != cache.end())
        return it->second;
    int n = 0;
    for (auto& [w, I] : obstruction_basis(chart, D, q)) {
        int t = 0;
        for (int j = 1; j <= chart.d; ++j)
            t += chart.p * w[j] - D.at(j);
        if (t <= chart.window)
            ++n;
    }
    cache.emplace(key, n);
    return n;
}

// Resonant chain starts whose obstruction monomial (c + D)/p fits the window.
int resonant_starts_with_small_monomial(const Chart& chart, const Divisor& D)
{
    using Key = std::tuple<int, int, int, std::vector<int>>;
    thread_local std::map<Key, int> cache;
    Key key{chart.p, chart.d, chart.window, D.mult()};
    if (auto it = cache.find(key); it != cache.end())
        return it->second;
    int n = 0;
    for (auto& e : monomials_up_to(chart.d, chart.window)) {
        MultiIndex c(chart.nvars());
        for (int j = 0; j < chart.d; ++j)
            c.set(j + 1, e[j]);
        if (D.is_zero() && c.total() == 0)
            continue;
        if (frobenius_predecessor(c, D, chart.p))
            continue;
        bool resonant = true;
        int w = 0;
        for (int j = 1; j <= chart.d; ++j) {
            if ((c[j] + D.at(j)) % chart.p != 0)
                resonant = false;
            w += (c[j] + D.at(j)) / chart.p;
        }
        if (resonant && w <= chart.window)
            ++n;
    }
    cache.emplace(key, n);
    return n;
}

}  // namespace

int compare_lower(int p, int e, int theta, int m)
{
    long long v = 1LL * m * (p - 1) - 1LL * e * p * theta;
    return v < 0 ? -1 : v > 0 ? 1 : 0;
}

int compare_upper(int p, int e, int theta, int m) { return compare_lower(p, e, theta + 1, m); }

// ---- SyntomicGrPiece ----------------------------------------------------

SyntomicGrPiece::SyntomicGrPiece(const Chart& chart, Divisor D, int q, int r, int m)
    : chart_(chart), D_(std::move(D)), q_(q), r_(r), m_(m)
{
    check_range(chart_, D_, q, r, m);
    if (chart_.eis.e < 1 || a0(chart_) == 0)
        throw PreconditionError("Eisenstein data needs e >= 1 and a_0 != 0");
    levels_[m_] = std::make_shared<GradedComplex>(chart_, D_, FormMode::full, m_);
    for (int j = q_ - 1; j <= q_ + 1; ++j)
        if (auto L = a_level(j); L && !levels_.count(*L))
            levels_[*L] = std::make_shared<GradedComplex>(chart_, D_, FormMode::full, *L);
}

std::optional<int> SyntomicGrPiece::a_level(int j) const
{
    if (j < 0 || j > chart_.nvars())
        return std::nullopt;
    int p = chart_.p, e = chart_.eis.e;
    int L = syntomic_level(p, e, r_, j, m_);
    if (syntomic_level(p, e, r_, j, m_ + 1) == L)
        return std::nullopt;
    return L;
}

bool SyntomicGrPiece::b_present(int j) const { return j >= 0 && j <= chart_.nvars(); }

bool SyntomicGrPiece::one_nonzero(int j) const
{
    auto L = a_level(j);
    return L && *L == m_ && b_present(j);
}

std::optional<Scalar> SyntomicGrPiece::phi_scalar(int j) const
{
    auto L = a_level(j);
    if (!L || j > r_ || !b_present(j))
        return std::nullopt;
    int theta = r_ - j;
    int e = chart_.eis.e;
    if (chart_.p * (*L - e * theta) != m_)
        return std::nullopt;
    const auto& R = *chart_.ring;
    return R.pow(a0(chart_), static_cast<std::uint64_t>(chart_.p) * theta);
}

const GradedComplex& SyntomicGrPiece::a_complex(int j) const
{
    auto L = a_level(j);
    if (!L)
        throw PreconditionError(fmt::format("gr^{} A^{} vanishes", m_, j));
    return *levels_.at(*L);
}

LogForm SyntomicGrPiece::one_minus_phi(const LogForm& a) const
{
    int j = a.degree();
    auto L = a_level(j);
    int big = chart_.p * (chart_.window + D_.total() + (L ? *L : 0) + 1);
    LogForm out(chart_.ring, chart_.nvars(), big + m_, j, FormMode::full);
    if (!L || !b_present(j))
        return out;
    const auto& R = *chart_.ring;
    if (one_nonzero(j))
        for (auto& [k, c] : a.terms())
            if (k.first[0] == *L)
                out.add_term(k.first, k.second, c);
    if (!phi_scalar(j))
        return out;
    int theta = r_ - j;
    int shift = *L - chart_.eis.e * theta;
    TruncatedPoly E1 = eisenstein_phi(chart_, theta, big);
    // E as a polynomial in T_0 among nvars coordinates.
    TruncatedPoly E(chart_.ring, chart_.nvars(), big);
    for (auto& [k, c] : E1.terms()) {
        MultiIndex t(chart_.nvars());
        t.set(0, k[0]);
        E.add_term(t, c);
    }
    MultiIndex Dx = D_.as_index();
    for (auto& [k, c] : a.terms()) {
        if (k.first[0] != *L)
            continue;
        MultiIndex y = k.first + Dx;
        y.set(0, shift);
        LogForm actual = LogForm::term(chart_.ring, big, FormMode::full, y, k.second, c);
        LogForm img = poly_times(E, frobenius_pullback(actual));
        for (auto& [k2, c2] : img.terms()) {
            if (k2.first[0] != m_)
                continue;
            MultiIndex beta = k2.first - Dx;
            if (beta.nonnegative())
                out.add_term(beta, k2.second, R.neg(c2));
        }
    }
    return out;
}

LogForm SyntomicGrPiece::d_a(const LogForm& a) const
{
    int j = a.degree();
    auto L0 = a_level(j), L1 = a_level(j + 1);
    if (!L0 || !L1 || *L0 != *L1)
        return LogForm(chart_.ring, chart_.nvars(), a.window(), j + 1, FormMode::full);
    return a_complex(j).d(a);
}

std::string SyntomicGrPiece::describe() const
{
    return fmt::format("p={} e={} D={} q={} r={} m={}", chart_.p, chart_.eis.e, D_.to_string(), q_, r_, m_);
}

SyntomicGrPiece build_syntomic_gr(const Chart& chart, const Divisor& D, int q, int r, int m)
{
    return SyntomicGrPiece(chart, D, q, r, m);
}

// ---- check_gr_structure -------------------------------------------------

namespace {

struct ClassResult {
    FiberDims dims;
    int bq = 0;          // dim B^q of gr B on the chain
    int zb_qm2 = 0;      // dim Z^{q-2} of gr B on the chain
    int ker_sf = -1;     // kernel of 1 - a C^-1 on the special fiber
    int ker_rel_qm1 = -1, ker_rel_q = -1;
    bool unipotent_ok = true;
    std::string error;
};

using ClassKey = std::tuple<int, int, int, int, std::vector<Scalar>, int, int, int, long long>;

ClassKey class_key(const Chart& chart, int q, int r, int m, const ChainSig& sig)
{
    return {chart.p, chart.s, chart.d, chart.eis.e, chart.eis.a, q, r, m, sig.code(chart.p)};
}

// Compares the matrix of 1 - phi with the form-level map on every basis vector.
std::string cross_check_f(const SyntomicGrPiece& P, const ChainFiber& F, const Chain& chain)
{
    const auto& R = *P.chart().ring;
    for (auto& [j, M] : F.f) {
        const GradedComplex& A = P.a_complex(j);
        int rk = F.a_rank.at(j);
        for (int i = 0; i < F.ncells; ++i) {
            MultiIndex cell = chain.cells[i];
            cell.set(0, A.t0_label());
            for (int b = 0; b < rk; ++b)
                for (int u = 0; u < F.s; ++u) {
                    LogForm x = A.zero_form(j);
                    x.add_term(cell, A.basis(j)[b], field_basis(R, u));
                    Vec img = chain_vector(F, chain, P.b_complex(), j, true, P.one_minus_phi(x));
                    int col = F.a_offset(j, i, b) + u;
                    for (int row = 0; row < M.rows(); ++row)
                        if (M.get(row, col) != img[row])
                            return fmt::format("matrix of 1 - phi disagrees with the form map in degree {}", j);
                }
        }
    }
    return {};
}

// 1 - phi_r on T^m O / T^M O (x) omega^j of the chain, for levels above the
// upper threshold. Returns true iff the matrix is invertible.
bool unipotent_on_tail(const SyntomicGrPiece& P, const Chain& chain, int j)
{
    const Chart& chart = P.chart();
    const auto& R = *chart.ring;
    int p = chart.p, s = R.s(), e = chart.eis.e;
    int theta = P.r() - j;
    int n = static_cast<int>(chain.cells.size());
    int rk = binomial(chart.nvars(), j);
    int lo = P.m(), hi = P.m() + 2 * p;
    int levels = hi - lo;
    int dim = levels * n * rk * s;
    RingPtr fp = make_ring(p);
    FpMatrix M = FpMatrix::identity(fp, dim);
    TruncatedPoly E = eisenstein_phi(chart, theta, hi);
    auto idx = [&](int L, int i, int b) { return (((L - lo) * n + i) * rk + b) * s; };
    for (int L = lo; L < hi; ++L) {
        int base = p * (L - e * theta);
        for (auto& [k, c] : E.terms()) {
            int L2 = base + k[0];
            if (L2 < lo || L2 >= hi)
                continue;
            for (int i = 0; i < n; ++i) {
                int t = chain.fixed ? i : i + 1;
                if (t >= n)
                    continue;
                auto block = scalar_block(R, R.neg(c), true);
                for (int b = 0; b < rk; ++b)
                    for (int x = 0; x < s; ++x)
                        for (int y = 0; y < s; ++y)
                            if (block[x][y])
                                M.add_to(idx(L2, t, b) + x, idx(L, i, b) + y, fp->from_int(block[x][y]));
            }
        }
    }
    return rank(M) == dim;
}

ClassResult compute_class(const SyntomicGrPiece& P, const Chain& chain, Region region)
{
    ClassResult res;
    const Chart& chart = P.chart();
    int q = P.q(), s = chart.s;
    ChainFiber F;
    try {
        F = build_chain_fiber(P, chain);
    } catch (const StructuralError& e) {
        res.error = e.what();
        return res;
    }
    res.dims = analyze(F);
    res.error = cross_check_f(P, F, chain);
    for (auto& cell : chain.cells) {
        MultiIndex a = cell;
        a.set(0, P.m());
        CellDims cd = cell_dims(P.b_complex(), a);
        if (q <= static_cast<int>(cd.B.size()) - 1)
            res.bq += cd.B[q] * s;
        if (q >= 2)
            res.zb_qm2 += cd.Z[q - 2] * s;
    }
    if (region == Region::endpoint) {
        const auto& R = *chart.ring;
        Scalar a = R.pow(a0(chart), static_cast<std::uint64_t>(chart.p) * (P.r() - q));
        GradedComplex sf(chart, P.divisor(), FormMode::special_fiber);
        GradedComplex rel(chart, P.divisor(), FormMode::relative);
        res.ker_sf = chain_semilinear_kernel(sf, chain, q, a);
        res.ker_rel_q = q <= chart.d ? chain_semilinear_kernel(rel, chain, q, a) : 0;
        res.ker_rel_qm1 = q >= 1 ? chain_semilinear_kernel(rel, chain, q - 1, a) : 0;
    }
    if (compare_upper(chart.p, chart.eis.e, P.r() - q, P.m()) > 0)
        for (int j = std::max(q - 1, 0); j <= q; ++j)
            if (!unipotent_on_tail(P, chain, j))
                res.unipotent_ok = false;
    return res;
}

const ClassResult& class_result(const SyntomicGrPiece& P, const ChainClass& cls, Region region)
{
    thread_local std::map<ClassKey, ClassResult> cache;
    auto key = class_key(P.chart(), P.q(), P.r(), P.m(), cls.sig);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, compute_class(P, cls.rep, region)).first;
    return it->second;
}

}  // namespace

CheckOutcome check_gr_structure(const Chart& chart, const Divisor& D, int q, int r, int m)
{
    CheckOutcome out;
    out.name = "gr_structure";
    out.params = Json{{"chart", chart_to_json(chart)}, {"divisor", divisor_json(D)}, {"q", q}, {"r", r}, {"m", m}};
    SyntomicGrPiece P(chart, D, q, r, m);
    int p = chart.p, e = chart.eis.e, s = chart.s, theta = r - q;
    Region region = region_of(p, e, theta, m);
    const ChainCensus& census = chain_census(chart, D);
    int obstruction_rank = binomial(chart.nvars(), q - 1);

    // The obstruction module sits exactly on the resonant chain starts.
    int small = resonant_starts_with_small_monomial(chart, D);
    int from_basis = obstruction_cells_in_window(chart, D, q);
    if (small * obstruction_rank != from_basis) {
        out.fail(fmt::format("obstruction basis has {} elements in the window, resonant chain starts give {}",
                             from_basis, small * obstruction_rank),
                 witness_recheck(out.name, out.params, MultiIndex(chart.nvars())));
        return out;
    }

    bool as_excluded = false;
    long long tot_h = 0, tot_k = 0, tot_c = 0;
    for (auto& cls : census.classes) {
        const ClassResult& res = class_result(P, cls, region);
        const MultiIndex& start = cls.rep.cells[0];
        Json w = witness_recheck(out.name, out.params, start);
        if (!res.error.empty()) {
            out.fail(res.error, w);
            return out;
        }
        const FiberDims& f = res.dims;
        bool resonant = resonant_start(cls.rep, D, p);
        // Long exact sequence, dimensionwise.
        if (f.hF_q != f.k_q + f.c_qm1 || f.hF_qm1 != f.k_qm1 + f.c_qm2) {
            out.fail(fmt::format("long exact sequence fails on the chain at {}", start.to_string()), w);
            return out;
        }
        int want_k = 0;
        if (region == Region::endpoint)
            want_k = res.ker_sf;
        else if (region == Region::interior)
            want_k = res.bq;
        bool skip_c = false;
        int want_c = 0;
        if (region != Region::above && m % p == 0 && resonant)
            want_c = obstruction_rank * s;
        if (region == Region::above && compare_upper(p, e, theta, m) == 0 && cls.rep.fixed) {
            skip_c = true;
            as_excluded = true;
        }
        out.add_row(q, start,
                    {{"chains", cls.count},
                     {"length", cls.sig.length},
                     {"dim_H^q", f.hF_q},
                     {"dim_H^{q-1}", f.hF_qm1},
                     {"kernel", f.k_q},
                     {"expected_kernel", want_k},
                     {"cokernel", f.c_qm1},
                     {"expected_cokernel", skip_c ? -1 : want_c}});
        if (f.k_q != want_k) {
            out.fail(fmt::format("{} region: kernel of H^q(A) -> H^q(B) has dim {}, expected {} at {}",
                                 region_name(region), f.k_q, want_k, start.to_string()),
                     w);
            return out;
        }
        if (!skip_c && f.c_qm1 != want_c) {
            out.fail(fmt::format("{} region: cokernel in degree q-1 has dim {}, expected {} at {}",
                                 region_name(region), f.c_qm1, want_c, start.to_string()),
                     w);
            return out;
        }
        if (region == Region::endpoint && res.ker_sf != res.ker_rel_qm1 + res.ker_rel_q) {
            out.fail(fmt::format("special fiber kernel {} differs from relative kernels {} + {} at {}", res.ker_sf,
                                 res.ker_rel_qm1, res.ker_rel_q, start.to_string()),
                     w);
            return out;
        }
        if (r == q && compare_upper(p, e, theta, m) < 0 && (f.k_qm1 != 0 || f.c_qm2 != res.zb_qm2)) {
            out.fail(fmt::format("H^(q-1) is not Z^(q-2)(gr B) at {}", start.to_string()), w);
            return out;
        }
        if (!res.unipotent_ok) {
            out.fail(fmt::format("1 - phi is not invertible above the threshold at {}", start.to_string()), w);
            return out;
        }
        tot_h += 1LL * cls.count * f.hF_q;
        tot_k += 1LL * cls.count * f.k_q;
        tot_c += 1LL * cls.count * f.c_qm1;
    }
    out.note = fmt::format("{} region; dim H^q = {} (kernel part {}, obstruction part {}) over {} chains", region_name(region),
                           tot_h, tot_k, tot_c, census.classes.size());
    if (as_excluded)
        out.note += "; Artin-Schreier cokernel at the fixed cell not compared";
    return out;
}

// ---- product with the H^0 generator -------------------------------------

namespace {

std::optional<Scalar> root_of_unity_base(const ScalarRing& R, Scalar a)
{
    for (Scalar b = 1; b < R.size(); ++b)
        if (R.pow(b, R.p() - 1) == a)
            return b;
    return std::nullopt;
}

// Block-diagonal map between two chain fibers. coef(j, mask) gives the scalar
// on the basis element; nullopt means the component is zero.
template <class Coef>
FpMatrix diagonal_map(const ChainFiber& S, const ChainFiber& T, const GradedComplex& basis_src, int j, bool b_side,
                      const ScalarRing& R, Coef coef)
{
    int rs = b_side ? S.b_rank.at(j) : S.a_rank.at(j);
    int rt = b_side ? T.b_rank.at(j) : T.a_rank.at(j);
    int sd = b_side ? S.b_dim(j) : S.a_dim(j);
    int td = b_side ? T.b_dim(j) : T.a_dim(j);
    FpMatrix M(S.fp, td, sd);
    if (rs == 0 || rt == 0)
        return M;
    if (rs != rt)
        throw StructuralError("mismatched ranks in a diagonal map");
    int s = S.s;
    int cells = b_side ? std::min(S.b_cells(j), T.b_cells(j)) : S.ncells;
    for (int i = 0; i < cells; ++i)
        for (int b = 0; b < rs; ++b) {
            auto c = coef(j, basis_src.basis(j)[b]);
            if (!c)
                continue;
            auto block = scalar_block(R, *c, false);
            for (int x = 0; x < s; ++x)
                for (int y = 0; y < s; ++y)
                    if (block[x][y])
                        M.add_to((i * rt + b) * s + x, (i * rs + b) * s + y, S.fp->from_int(block[x][y]));
        }
    return M;
}

// Map on F^j = A^j + B^{j-1}.
FpMatrix fiber_map(const ChainFiber& S, const ChainFiber& T, const FpMatrix& gA, const FpMatrix& gB)
{
    FpMatrix M(S.fp, gA.rows() + gB.rows(), gA.cols() + gB.cols());
    for (auto& [r, c, v] : gA.triplets())
        M.add_to(r, c, v);
    for (auto& [r, c, v] : gB.triplets())
        M.add_to(gA.rows() + r, gA.cols() + c, v);
    (void)T;
    return M;
}

struct MapResult {
    std::string error;
    QuotientMapRank qr;
    FiberDims src, tgt;
};

struct CachedFiber {
    std::string error;
    ChainFiber F;
    FiberDims dims;
    FiberSubspaces sub;
};

// Fibers of one piece on one chain class, shared by every divisor and map
// that meets them on this thread.
std::map<ClassKey, CachedFiber>& fiber_cache()
{
    thread_local std::map<ClassKey, CachedFiber> cache;
    return cache;
}

const CachedFiber& cached_fiber(const SyntomicGrPiece& P, const ChainClass& cls)
{
    auto& cache = fiber_cache();
    auto key = class_key(P.chart(), P.q(), P.r(), P.m(), cls.sig);
    if (auto it = cache.find(key); it != cache.end())
        return it->second;
    CachedFiber c;
    try {
        c.F = build_chain_fiber(P, cls.rep);
        c.dims = analyze(c.F);
        c.sub = fiber_subspaces(c.F);
    } catch (const StructuralError& e) {
        c.error = e.what();
    }
    return cache.emplace(key, std::move(c)).first->second;
}

// With same_shape, A^j must be present on both sides or on neither.
template <class CoefA, class CoefB>
MapResult compare_fibers(const SyntomicGrPiece& P1, const SyntomicGrPiece& P2, const ChainClass& cls, CoefA coefA,
                         CoefB coefB, bool same_shape)
{
    MapResult res;
    const auto& R = *P1.chart().ring;
    int q = P1.q();
    if (fiber_cache().size() > 20000)
        fiber_cache().clear();
    const CachedFiber& C1 = cached_fiber(P1, cls);
    const CachedFiber& C2 = cached_fiber(P2, cls);
    if (!C1.error.empty() || !C2.error.empty()) {
        res.error = C1.error.empty() ? C2.error : C1.error;
        return res;
    }
    const ChainFiber& F1 = C1.F;
    const ChainFiber& F2 = C2.F;
    for (int j = q - 1; j <= q + 1 && same_shape; ++j)
        if (F1.a_rank.at(j) != F2.a_rank.at(j)) {
            res.error = fmt::format("A^{} present on one side only", j);
            return res;
        }
    const GradedComplex& basis = P1.b_complex();
    std::map<int, FpMatrix> gA, gB;
    for (int j = q - 1; j <= q + 1; ++j)
        gA[j] = diagonal_map(F1, F2, basis, j, false, R, coefA);
    for (int j = q - 2; j <= q; ++j)
        gB[j] = diagonal_map(F1, F2, basis, j, true, R, coefB);
    auto emptyB = [&](int j) { return FpMatrix(F1.fp, F2.b_dim(j), F1.b_dim(j)); };
    auto gF = [&](int j) { return fiber_map(F1, F2, gA.at(j), gB.count(j - 1) ? gB.at(j - 1) : emptyB(j - 1)); };
    for (int j = q - 1; j <= q; ++j) {
        FpMatrix lhs = gF(j + 1) * F1.dF(j);
        FpMatrix rhs = F2.dF(j) * gF(j);
        if (!(lhs - rhs).is_zero()) {
            res.error = fmt::format("comparison map is not a chain map in degree {}", j);
            return res;
        }
    }
    res.src = C1.dims;
    res.tgt = C2.dims;
    res.qr = quotient_map_rank(gF(q), C1.sub, C2.sub);
    return res;
}

}  // namespace

CheckOutcome check_product_iso(const Chart& chart, const Divisor& D, int q, int r)
{
    CheckOutcome out;
    out.name = "product";
    out.params = Json{{"chart", chart_to_json(chart)}, {"divisor", divisor_json(D)}, {"q", q}, {"r", r}};
    check_range(chart, D, q, r, 0);
    const auto& R = *chart.ring;
    int p = chart.p, e = chart.eis.e, theta = r - q;
    auto b0 = root_of_unity_base(R, a0(chart));
    if (!b0)
        throw PreconditionError(
            "a_0 is not a (p-1)-st power in k: the product comparison assumes K contains a primitive p-th root of "
            "unity");
    if ((e * p * theta) % (p - 1) != 0) {
        out.status = Status::hypothesis_not_met;
        out.note = fmt::format("e p (r-q) / (p-1) = {}*{}*{}/{} is not an integer", e, p, theta, p - 1);
        return out;
    }
    int m0 = e * p * theta / (p - 1);
    Scalar c = R.inv(R.pow(*b0, static_cast<std::uint64_t>(p) * theta));
    int top = ceil_div(p * e, p - 1) + 1;
    const ChainCensus& census = chain_census(chart, D);
    int compared = 0;
    thread_local std::map<ClassKey, MapResult> cache;
    for (int m = 0; m <= top; ++m) {
        SyntomicGrPiece P1(chart, D, q, q, m), P2(chart, D, q, r, m + m0);
        for (int j = q - 1; j <= q + 1; ++j) {
            auto L1 = P1.a_level(j), L2 = P2.a_level(j);
            if (L1.has_value() != L2.has_value() || (L1 && *L2 != *L1 + m0)) {
                out.fail(fmt::format("levels of A^{} do not shift by {} at m={}", j, m0, m),
                         witness_recheck(out.name, out.params, MultiIndex(chart.nvars())));
                return out;
            }
        }
        auto coef = [&](int, Mask) -> std::optional<Scalar> { return c; };
        for (auto& cls : census.classes) {
            auto key = class_key(chart, q, r, m, cls.sig);
            auto hit = cache.find(key);
            if (hit == cache.end())
                hit = cache.emplace(key, compare_fibers(P1, P2, cls, coef, coef, true)).first;
            const MapResult& res = hit->second;
            Json w = witness_recheck(out.name, out.params, cls.rep.cells[0]);
            if (!res.error.empty()) {
                out.fail(fmt::format("m={}: {}", m, res.error), w);
                return out;
            }
            out.add_row(q, cls.rep.cells[0],
                        {{"m", m},
                         {"source_dim", res.qr.source_dim},
                         {"target_dim", res.qr.target_dim},
                         {"rank", res.qr.rank},
                         {"obstruction_source", res.src.c_qm1},
                         {"obstruction_target", res.tgt.c_qm1}});
            if (res.qr.rank != res.qr.source_dim || res.qr.rank != res.qr.target_dim) {
                out.fail(fmt::format("m={}: product map has rank {} between quotients of dim {} and {} at {}", m,
                                     res.qr.rank, res.qr.source_dim, res.qr.target_dim,
                                     cls.rep.cells[0].to_string()),
                         w);
                return out;
            }
            if (res.src.c_qm1 != res.tgt.c_qm1) {
                out.fail(fmt::format("m={}: obstruction pieces differ ({} vs {}) at {}", m, res.src.c_qm1,
                                     res.tgt.c_qm1, cls.rep.cells[0].to_string()),
                         w);
                return out;
            }
            ++compared;
        }
    }
    out.note = fmt::format("shift m0={}, b0={}, {} chain comparisons", m0, R.to_string(*b0), compared);
    return out;
}

// ---- tame base change ---------------------------------------------------

CheckOutcome check_tame_base_change(const Chart& chart, const Divisor& D, int q, int r, int w)
{
    CheckOutcome out;
    out.name = "base_change";
    out.params = Json{{"chart", chart_to_json(chart)}, {"divisor", divisor_json(D)}, {"q", q}, {"r", r}, {"w", w}};
    if (w < 1)
        throw PreconditionError("ramification index of the base change must be >= 1");
    check_range(chart, D, q, r, 0);
    const auto& R = *chart.ring;
    int p = chart.p, e = chart.eis.e, theta = r - q;
    EisensteinData eis2;
    eis2.e = w * e;
    eis2.a.assign(eis2.e, 0);
    for (int i = 0; i < e; ++i)
        eis2.a[i * w] = chart.eis.a[i];
    Chart chart2 = make_chart(p, chart.s, chart.d, chart.window, eis2, chart.log_policy);
    int top = ceil_div(e * p * (theta + 1), p - 1) + 1;
    const ChainCensus& census = chain_census(chart, D);
    bool tame = w % p != 0;
    int compared = 0, degenerate = 0;
    // Chain comparisons depend on the chain signature only, so they are shared across divisors.
    thread_local std::map<std::pair<ClassKey, int>, std::pair<MapResult, int>> cache;
    for (int m = 0; m <= top; ++m) {
        for (int j = 0; j <= chart.nvars(); ++j) {
            int L = syntomic_level(p, e, r, j, m), L2 = syntomic_level(p, w * e, r, j, w * m);
            if (w * L < L2) {
                out.fail(fmt::format("filtration not preserved: T^{} lands below level {} in degree {}", w * L, L2, j),
                         witness_recheck(out.name, out.params, MultiIndex(chart.nvars())));
                return out;
            }
        }
        SyntomicGrPiece P1(chart, D, q, r, m), P2(chart2, D, q, r, w * m);
        Region region = region_of(p, e, theta, m);
        auto coefA = [&](int j, Mask I) -> std::optional<Scalar> {
            auto L = P1.a_level(j), L2 = P2.a_level(j);
            if (!L || !L2 || w * *L != *L2)
                return std::nullopt;
            return (I & 1) ? R.from_int(w) : R.one();
        };
        auto coefB = [&](int, Mask I) -> std::optional<Scalar> { return (I & 1) ? R.from_int(w) : R.one(); };
        for (auto& cls : census.classes) {
            auto key = std::make_pair(class_key(chart, q, r, m, cls.sig), w);
            auto hit = cache.find(key);
            if (hit == cache.end()) {
                MapResult res = compare_fibers(P1, P2, cls, coefA, coefB, tame);
                int expected = res.qr.source_dim;
                if (!tame && res.error.empty()) {
                    expected = 0;
                    Scalar a = R.pow(a0(chart), static_cast<std::uint64_t>(p) * theta);
                    if (region == Region::endpoint) {
                        GradedComplex rel(chart, D, FormMode::relative);
                        expected = q <= chart.d ? chain_semilinear_kernel(rel, cls.rep, q, a) : 0;
                    } else if (region == Region::interior) {
                        GradedComplex rel(chart, D, FormMode::relative);
                        for (auto& cell : cls.rep.cells) {
                            CellDims cd = cell_dims(rel, cell);
                            if (q < static_cast<int>(cd.B.size()))
                                expected += cd.B[q] * chart.s;
                        }
                    }
                }
                hit = cache.emplace(key, std::make_pair(std::move(res), expected)).first;
            }
            const MapResult& res = hit->second.first;
            int expected = hit->second.second;
            Json wit = witness_recheck(out.name, out.params, cls.rep.cells[0]);
            if (!res.error.empty()) {
                out.fail(fmt::format("m={}: {}", m, res.error), wit);
                return out;
            }
            out.add_row(q, cls.rep.cells[0],
                        {{"m", m},
                         {"source_dim", res.qr.source_dim},
                         {"target_dim", res.qr.target_dim},
                         {"rank", res.qr.rank},
                         {"expected_rank", expected}});
            bool ok = res.qr.rank == expected && (!tame || res.qr.target_dim == expected);
            if (!ok) {
                out.fail(fmt::format("m={} ({}): base change map has rank {}, expected {} (dims {} -> {}) at {}", m,
                                     region_name(region), res.qr.rank, expected, res.qr.source_dim,
                                     res.qr.target_dim, cls.rep.cells[0].to_string()),
                         wit);
                return out;
            }
            ++compared;
            if (!tame && res.qr.rank < res.qr.source_dim)
                ++degenerate;
        }
    }
    out.note = tame ? fmt::format("w={} tame: {} chain comparisons bijective", w, compared)
                    : fmt::format("w={} wild: dlog T_0 components die, {} of {} comparisons drop rank", w,
                                  degenerate, compared);
    return out;
}

}  // namespace mdr
