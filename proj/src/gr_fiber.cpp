#include "gr_fiber.hpp"

#include <map>
#include <tuple>

#include <fmt/format.h>

#include "mdr/errors.hpp"

namespace mdr::detail {

int binomial(int n, int k)
{
    if (k < 0 || k > n)
        return 0;
    long r = 1;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return static_cast<int>(r);
}

int ceil_div(int a, int b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }

int syntomic_level(int p, int e, int r, int j, int m)
{
    if (j > r)
        return m;
    return std::max(e * (r - j) + ceil_div(m, p), m);
}

MultiIndex frobenius_successor(const MultiIndex& beta, const Divisor& D, int p)
{
    MultiIndex out(beta.size());
    for (int j = 1; j < beta.size(); ++j)
        out.set(j, p * beta[j] + (p - 1) * D.at(j));
    return out;
}

std::optional<MultiIndex> frobenius_predecessor(const MultiIndex& beta, const Divisor& D, int p)
{
    MultiIndex out(beta.size());
    for (int j = 1; j < beta.size(); ++j) {
        int t = beta[j] + D.at(j);
        if (t % p != 0 || t / p < D.at(j))
            return std::nullopt;
        out.set(j, t / p - D.at(j));
    }
    return out;
}

bool resonant_start(const Chain& c, const Divisor& D, int p)
{
    if (c.fixed)
        return false;
    for (int j = 1; j < c.cells[0].size(); ++j)
        if ((c.cells[0][j] + D.at(j)) % p != 0)
            return false;
    return true;
}

bool ChainSig::operator<(const ChainSig& o) const
{
    return std::tie(residues, length, fixed) < std::tie(o.residues, o.length, o.fixed);
}

long long ChainSig::code(int p) const
{
    long long c = 0;
    for (int r : residues)
        c = c * p + r;
    return (c * 64 + length) * 2 + (fixed ? 1 : 0);
}

ChainSig signature_of(const Chain& c, const Divisor& D, int p)
{
    ChainSig s;
    for (int j = 1; j < c.cells[0].size(); ++j)
        s.residues.push_back((c.cells[0][j] + D.at(j)) % p);
    s.length = static_cast<int>(c.cells.size());
    s.fixed = c.fixed;
    return s;
}

Chain chain_from_start(const MultiIndex& start, const Divisor& D, int p, int window)
{
    Chain c;
    c.cells.push_back(start);
    if (D.is_zero() && start.total() == 0) {
        c.fixed = true;
        return c;
    }
    for (;;) {
        MultiIndex next = frobenius_successor(c.cells.back(), D, p);
        if (next.total() > window)
            break;
        c.cells.push_back(next);
    }
    return c;
}

Chain chain_through(const MultiIndex& cell, const Divisor& D, int p, int window, int* position)
{
    MultiIndex cur = cell;
    int pos = 0;
    if (!(D.is_zero() && cell.total() == 0)) {
        while (auto prev = frobenius_predecessor(cur, D, p)) {
            cur = *prev;
            ++pos;
        }
    }
    if (position)
        *position = pos;
    return chain_from_start(cur, D, p, window);
}

const ChainCensus& chain_census(const Chart& chart, const Divisor& D)
{
    using Key = std::tuple<int, int, int, std::vector<int>>;
    thread_local std::map<Key, ChainCensus> cache;
    Key key{chart.p, chart.d, chart.window, D.mult()};
    auto it = cache.find(key);
    if (it != cache.end())
        return it->second;
    ChainCensus census;
    std::map<ChainSig, int> where;
    int p = chart.p;
    for (auto& e : monomials_up_to(chart.d, chart.window)) {
        MultiIndex beta(chart.nvars());
        for (int j = 0; j < chart.d; ++j)
            beta.set(j + 1, e[j]);
        ++census.cells;
        bool fixed = D.is_zero() && beta.total() == 0;
        if (!fixed && frobenius_predecessor(beta, D, p))
            continue;
        Chain c = chain_from_start(beta, D, p, chart.window);
        if (resonant_start(c, D, p))
            ++census.resonant_starts;
        ChainSig sig = signature_of(c, D, p);
        auto w = where.find(sig);
        if (w == where.end()) {
            where.emplace(sig, static_cast<int>(census.classes.size()));
            census.classes.push_back(ChainClass{sig, std::move(c), 1});
        } else {
            ++census.classes[w->second].count;
        }
    }
    return cache.emplace(key, std::move(census)).first->second;
}

Scalar field_basis(const ScalarRing& R, int u)
{
    Scalar v = 1;
    for (int i = 0; i < u; ++i)
        v *= static_cast<Scalar>(R.p());
    return v;
}

std::vector<std::vector<Scalar>> scalar_block(const ScalarRing& R, Scalar c, bool semilinear)
{
    int s = R.s();
    std::vector<std::vector<Scalar>> block(s, std::vector<Scalar>(s, 0));
    for (int u = 0; u < s; ++u) {
        Scalar x = field_basis(R, u);
        Scalar img = R.mul(c, semilinear ? R.frob(x) : x);
        auto digits = fp_coordinates(R, Vec{img});
        for (int i = 0; i < s; ++i)
            block[i][u] = digits[i];
    }
    return block;
}

namespace {

void add_block(FpMatrix& M, int row, int col, const std::vector<std::vector<Scalar>>& block)
{
    const auto& F = *M.ring();
    for (size_t i = 0; i < block.size(); ++i)
        for (size_t u = 0; u < block.size(); ++u)
            if (block[i][u])
                M.add_to(row + static_cast<int>(i), col + static_cast<int>(u), F.from_int(block[i][u]));
}

int lookup(const std::map<int, int>& m, int j)
{
    auto it = m.find(j);
    return it == m.end() ? 0 : it->second;
}

int span_rank(RingPtr fp, int dim, const std::vector<const std::vector<Vec>*>& parts)
{
    Echelon E(fp, dim);
    for (auto* part : parts)
        for (auto& v : *part)
            E.insert(v);
    return E.rank();
}

// Columns spanning the image of M.
std::vector<Vec> image_of(const FpMatrix& M)
{
    if (M.rows() == 0 || M.cols() == 0)
        return {};
    return rank_kernel_image(M).image_basis;
}

std::vector<Vec> kernel_of(const FpMatrix& M, int cols)
{
    if (cols == 0)
        return {};
    if (M.rows() == 0) {
        std::vector<Vec> out;
        for (int c = 0; c < cols; ++c) {
            Vec v(cols, 0);
            v[c] = 1;
            out.push_back(v);
        }
        return out;
    }
    return rank_kernel_image(M).kernel_basis;
}

std::vector<Vec> apply_all(const FpMatrix& M, const std::vector<Vec>& vs)
{
    std::vector<Vec> out;
    for (auto& v : vs)
        out.push_back(M.apply(v));
    return out;
}

}  // namespace

int ChainFiber::a_dim(int j) const { return lookup(a_rank, j) * ncells * s; }
int ChainFiber::b_cells(int j) const { return ncells + lookup(b_extra, j); }
int ChainFiber::b_dim(int j) const { return lookup(b_rank, j) * b_cells(j) * s; }

FpMatrix ChainFiber::dF(int j) const
{
    int ra = a_dim(j + 1), rb = b_dim(j);
    int ca = a_dim(j), cb = b_dim(j - 1);
    FpMatrix M(fp, ra + rb, ca + cb);
    auto put = [&](const std::map<int, FpMatrix>& src, int key, int r0, int c0, bool negate) {
        auto it = src.find(key);
        if (it == src.end())
            return;
        for (auto& [r, c, v] : it->second.triplets())
            M.add_to(r0 + r, c0 + c, negate ? fp->neg(v) : v);
    };
    put(dA, j, 0, 0, false);
    put(f, j, ra, 0, false);
    put(dB, j - 1, ra, ca, true);
    return M;
}

ChainFiber build_chain_fiber(const SyntomicGrPiece& P, const Chain& chain)
{
    const Chart& chart = P.chart();
    const auto& R = *chart.ring;
    int q = P.q();
    ChainFiber F;
    F.fp = make_ring(chart.p);
    F.s = R.s();
    F.q = q;
    F.ncells = static_cast<int>(chain.cells.size());
    int s = F.s;
    int n = F.ncells;
    for (int j = q - 1; j <= q + 1; ++j)
        F.a_rank[j] = P.a_level(j) ? binomial(chart.nvars(), j) : 0;
    for (int j = q - 2; j <= q; ++j)
        F.b_rank[j] = P.b_present(j) ? binomial(chart.nvars(), j) : 0;
    F.next_cell = frobenius_successor(chain.cells.back(), P.divisor(), chart.p);
    if (!chain.fixed)
        for (int j = q - 1; j <= q; ++j)
            if (P.a_level(j) && P.b_present(j) && P.phi_scalar(j) && !P.one_nonzero(j))
                F.b_extra[j] = 1;

    auto cell_at = [&](int i, int level) {
        MultiIndex a = i < n ? chain.cells[i] : F.next_cell;
        a.set(0, level);
        return a;
    };
    // Block diagonal Koszul matrix; cells missing on one side are skipped.
    auto koszul_block = [&](const GradedComplex& C, int j, int level, int rows_rank, int cols_rank, int row_cells,
                            int col_cells) {
        FpMatrix M(F.fp, rows_rank * row_cells * s, cols_rank * col_cells * s);
        for (int i = 0; i < std::min(row_cells, col_cells); ++i) {
            FpMatrix K = C.differential(j, cell_at(i, level));
            for (auto& [r, c, v] : K.triplets())
                add_block(M, (i * rows_rank + r) * s, (i * cols_rank + c) * s, scalar_block(R, v, false));
        }
        return M;
    };

    // A differentials between equal levels.
    for (int j = q - 1; j <= q; ++j) {
        auto L0 = P.a_level(j), L1 = P.a_level(j + 1);
        if (!L0 || !L1 || *L0 != *L1)
            continue;
        F.dA[j] = koszul_block(P.a_complex(j), j, *L0, F.a_rank[j + 1], F.a_rank[j], n, n);
    }
    for (int j = q - 2; j <= q - 1; ++j) {
        if (!P.b_present(j) || !P.b_present(j + 1))
            continue;
        F.dB[j] = koszul_block(P.b_complex(), j, P.m(), F.b_rank[j + 1], F.b_rank[j], F.b_cells(j + 1),
                               F.b_cells(j));
    }
    for (int j = q - 1; j <= q; ++j) {
        if (!P.a_level(j) || !P.b_present(j))
            continue;
        int rk = F.a_rank[j];
        FpMatrix M(F.fp, F.b_dim(j), F.a_dim(j));
        if (P.one_nonzero(j))
            for (int i = 0; i < n; ++i)
                for (int b = 0; b < rk; ++b)
                    add_block(M, (i * rk + b) * s, (i * rk + b) * s, scalar_block(R, 1, false));
        if (auto c = P.phi_scalar(j)) {
            auto block = scalar_block(R, R.neg(*c), true);
            for (int i = 0; i < n; ++i) {
                int t = chain.fixed ? i : i + 1;
                if (t >= F.b_cells(j))
                    continue;
                for (int b = 0; b < rk; ++b)
                    add_block(M, (t * rk + b) * s, (i * rk + b) * s, block);
            }
        }
        F.f[j] = M;
    }
    // f must commute with the differentials: f dA = dB f.
    for (int j = q - 1; j <= q - 1; ++j) {
        FpMatrix lhs(F.fp, F.b_dim(j + 1), F.a_dim(j));
        FpMatrix rhs(F.fp, F.b_dim(j + 1), F.a_dim(j));
        if (F.f.count(j + 1) && F.dA.count(j))
            lhs = F.f.at(j + 1) * F.dA.at(j);
        if (F.dB.count(j) && F.f.count(j))
            rhs = F.dB.at(j) * F.f.at(j);
        if (!(lhs - rhs).is_zero())
            throw StructuralError(fmt::format("1 - phi is not a chain map on gr^{} in degree {} ({})", P.m(), j,
                                              P.describe()));
    }
    return F;
}

FiberDims analyze(const ChainFiber& F)
{
    int q = F.q;
    FiberDims out;
    auto rk = [&](const std::map<int, FpMatrix>& m, int j) {
        auto it = m.find(j);
        return it == m.end() ? 0 : rank(it->second);
    };
    FpMatrix d1 = F.dF(q - 1), d2 = F.dF(q);
    int r1 = rank(d1), r2 = rank(d2);
    out.hF_qm1 = F.f_dim(q - 1) - r1;
    out.hF_q = F.f_dim(q) - r2 - r1;

    int rA_qm1 = rk(F.dA, q - 1), rA_q = rk(F.dA, q);
    int rB_qm2 = rk(F.dB, q - 2), rB_qm1 = rk(F.dB, q - 1);
    out.hA_qm1 = F.a_dim(q - 1) - rA_qm1;
    out.hA_q = F.a_dim(q) - rA_q - rA_qm1;
    out.hB_qm2 = F.b_dim(q - 2) - rB_qm2;
    out.hB_qm1 = F.b_dim(q - 1) - rB_qm1 - rB_qm2;
    out.hB_q = F.b_dim(q) - rB_qm1;

    // rank of H^j(A) -> H^j(B) = rank(f Z^j(A) + B^j(B)) - rank B^j(B)
    auto induced_rank = [&](int j) {
        if (!F.f.count(j))
            return 0;
        auto dAj = F.dA.find(j);
        std::vector<Vec> Z = dAj == F.dA.end() ? kernel_of(FpMatrix(F.fp, 0, F.a_dim(j)), F.a_dim(j))
                                               : kernel_of(dAj->second, F.a_dim(j));
        auto images = apply_all(F.f.at(j), Z);
        std::vector<Vec> bound;
        if (auto it = F.dB.find(j - 1); it != F.dB.end())
            bound = image_of(it->second);
        return span_rank(F.fp, F.b_dim(j), {&images, &bound}) - static_cast<int>(bound.size());
    };
    out.rk_qm1 = induced_rank(q - 1);
    out.rk_q = induced_rank(q);
    out.k_qm1 = out.hA_qm1 - out.rk_qm1;
    out.k_q = out.hA_q - out.rk_q;
    out.c_qm1 = out.hB_qm1 - out.rk_qm1;
    out.c_qm2 = out.hB_qm2;
    return out;
}

FiberSubspaces fiber_subspaces(const ChainFiber& F)
{
    int q = F.q;
    FiberSubspaces S;
    int dim = F.f_dim(q);
    S.Z = kernel_of(F.dF(q), dim);
    S.B = image_of(F.dF(q - 1));
    int ca = F.a_dim(q);
    std::vector<Vec> zb;
    if (auto it = F.dB.find(q - 1); it != F.dB.end())
        zb = kernel_of(it->second, F.b_dim(q - 1));
    else
        zb = kernel_of(FpMatrix(F.fp, 0, F.b_dim(q - 1)), F.b_dim(q - 1));
    for (auto& z : zb) {
        Vec v(dim, 0);
        for (size_t i = 0; i < z.size(); ++i)
            v[ca + i] = z[i];
        S.K.push_back(v);
    }
    return S;
}

QuotientMapRank quotient_map_rank(const FpMatrix& M, const FiberSubspaces& src, const FiberSubspaces& tgt)
{
    RingPtr fp = M.ring();
    QuotientMapRank out;
    int sdim = M.cols(), tdim = M.rows();
    int src_den = span_rank(fp, sdim, {&src.B, &src.K});
    out.source_dim = span_rank(fp, sdim, {&src.Z, &src.B, &src.K}) - src_den;
    int tgt_den = span_rank(fp, tdim, {&tgt.B, &tgt.K});
    out.target_dim = span_rank(fp, tdim, {&tgt.Z, &tgt.B, &tgt.K}) - tgt_den;
    auto images = apply_all(M, src.Z);
    out.rank = span_rank(fp, tdim, {&images, &tgt.B, &tgt.K}) - tgt_den;
    return out;
}

Vec chain_vector(const ChainFiber& F, const Chain& chain, const GradedComplex& C, int j, bool b_side,
                 const LogForm& w)
{
    int rk = b_side ? F.b_rank.at(j) : F.a_rank.at(j);
    Vec v((b_side ? F.b_dim(j) : F.a_dim(j)), 0);
    const auto& R = *C.chart().ring;
    int cells = b_side ? F.b_cells(j) : F.ncells;
    for (int i = 0; i < cells; ++i) {
        MultiIndex a = i < F.ncells ? chain.cells[i] : F.next_cell;
        a.set(0, C.t0_label());
        auto coords = fp_coordinates(R, C.to_vector(w, a));
        for (int b = 0; b < rk; ++b)
            for (int u = 0; u < F.s; ++u)
                v[(i * rk + b) * F.s + u] = coords[b * F.s + u];
    }
    return v;
}

int chain_semilinear_kernel(const GradedComplex& C, const Chain& chain, int q, Scalar a)
{
    const auto& R = *C.chart().ring;
    RingPtr fp = make_ring(R.p());
    int s = R.s();
    int n = static_cast<int>(chain.cells.size());
    std::vector<CohomologyBasis> H;
    std::vector<int> h_off(n + 1, 0), z_off(n + 1, 0);
    for (int i = 0; i < n; ++i) {
        H.push_back(graded_cohomology(C, q, chain.cells[i]));
        h_off[i + 1] = h_off[i] + H[i].dim_H * s;
        z_off[i + 1] = z_off[i] + H[i].dim_Z * s;
    }
    FpMatrix M(fp, h_off[n], z_off[n]);
    auto put_class = [&](int cell, const Vec& vec, int col, bool minus) {
        auto cls = H[cell].class_of(vec);
        if (!cls)
            throw StructuralError("inverse Cartier image is not a cocycle");
        auto digits = fp_coordinates(R, *cls);
        for (size_t k = 0; k < digits.size(); ++k)
            if (digits[k])
                M.add_to(h_off[cell] + static_cast<int>(k), col,
                         minus ? fp->neg(fp->from_int(digits[k])) : fp->from_int(digits[k]));
    };
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < H[i].dim_Z; ++k)
            for (int u = 0; u < s; ++u) {
                int col = z_off[i] + k * s + u;
                Vec z = H[i].cocycles[k];
                for (auto& c : z)
                    c = R.mul(c, field_basis(R, u));
                put_class(i, z, col, false);
                int t = chain.fixed ? i : i + 1;
                if (t >= n)
                    continue;
                LogForm x = C.from_vector(z, q, chain.cells[i]);
                LogForm y = cartier_on_twist(x, C.divisor()).scaled(a);
                put_class(t, C.to_vector(y, chain.cells[t]), col, true);
            }
    }
    return M.cols() - rank(M);
}

}  // namespace mdr::detail
