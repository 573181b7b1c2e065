#include "mdr/modulus.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "mdr/errors.hpp"

namespace mdr {

namespace {

// Koszul coefficients of a cell over its index set. Two cells with the same
// signature carry identical differential matrices.
std::vector<Scalar> signature(const GradedComplex& C, const MultiIndex& alpha)
{
    std::vector<Scalar> sig;
    for (int j = 0; j < C.chart().nvars(); ++j)
        if (C.index_set() >> j & 1)
            sig.push_back(C.koszul(alpha, j));
    return sig;
}

Json divisor_json(const Divisor& D) { return Json(D.mult()); }

int binomial(int n, int k)
{
    if (k < 0 || k > n)
        return 0;
    long r = 1;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return static_cast<int>(r);
}

// Dimension tables of all degrees of a cell, cached by signature.
class DimsCache {
public:
    explicit DimsCache(const GradedComplex& C) : C_(C) {}
    const CellDims& at(const MultiIndex& alpha)
    {
        auto key = signature(C_, alpha);
        auto it = cache_.find(key);
        if (it == cache_.end())
            it = cache_.emplace(key, cell_dims(C_, alpha)).first;
        return it->second;
    }

private:
    const GradedComplex& C_;
    std::map<std::vector<Scalar>, CellDims> cache_;
};

int dim_at(const std::vector<int>& v, int q) { return q < 0 || q >= static_cast<int>(v.size()) ? 0 : v[q]; }

}  // namespace

Divisor divisor_prime(const Divisor& D, int p) { return D.prime(p); }

FiltrationChain FiltrationChain::canonical(const Divisor& D, int p)
{
    FiltrationChain c;
    c.p = p;
    Divisor target = D.prime(p).scaled(p);
    std::vector<int> order(D.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return D.mult()[a] > D.mult()[b]; });
    std::vector<int> cur = D.mult();
    c.steps.push_back(D);
    bool moved = true;
    while (moved) {
        moved = false;
        for (int j : order) {
            if (cur[j] >= target.mult()[j])
                continue;
            ++cur[j];
            c.mu.push_back(j + 1);
            c.steps.emplace_back(cur);
            moved = true;
        }
    }
    return c;
}

FiltrationChain FiltrationChain::from_steps(std::vector<Divisor> steps, int p)
{
    if (steps.empty())
        throw ConfigError("a filtration chain needs at least one divisor");
    FiltrationChain c;
    c.p = p;
    for (size_t i = 0; i + 1 < steps.size(); ++i) {
        const auto& a = steps[i].mult();
        const auto& b = steps[i + 1].mult();
        if (a.size() != b.size())
            throw ConfigError("chain divisors live on different charts");
        int raised = -1;
        for (size_t j = 0; j < a.size(); ++j) {
            if (b[j] == a[j])
                continue;
            if (b[j] != a[j] + 1 || raised >= 0)
                throw ConfigError(fmt::format("step {} must raise exactly one multiplicity by one", i));
            raised = static_cast<int>(j);
        }
        if (raised < 0)
            throw ConfigError(fmt::format("step {} does not change the divisor", i));
        c.mu.push_back(raised + 1);
    }
    if (steps.back() != steps.front().prime(p).scaled(p))
        throw ConfigError(fmt::format("chain must end at p D' = {}", steps.front().prime(p).scaled(p).to_string()));
    c.steps = std::move(steps);
    return c;
}

MultiIndex ParameterSequence::b_cell(const MultiIndex& alpha) const
{
    MultiIndex b = alpha;
    b.set(0, m);
    return b;
}

std::unique_ptr<ParameterSequence> make_parameter_sequence(const Chart& chart, const Divisor& D, int m)
{
    if (m < 0)
        throw PreconditionError("parameter exponent must be non-negative");
    auto S = std::make_unique<ParameterSequence>();
    S->m = m;
    S->A = std::make_unique<GradedComplex>(chart, D, FormMode::relative);
    S->B = std::make_unique<GradedComplex>(chart, D, FormMode::full, m);
    S->C = std::make_unique<GradedComplex>(chart, D, FormMode::relative);
    const GradedComplex* B = S->B.get();
    S->ses.i = ChainMap{S->A.get(), B,
                        [B, m](const LogForm& y) {
                            const auto& R = *y.ring();
                            LogForm out(y.ring(), y.nvars(), B->form_window(), y.degree() + 1, FormMode::full);
                            for (auto& [k, c] : y.terms()) {
                                MultiIndex a = k.first;
                                a.set(0, m);
                                int sign = merge_sign(k.second, Mask(1));
                                out.add_term(a, k.second | Mask(1), sign > 0 ? c : R.neg(c));
                            }
                            return out;
                        },
                        1, "T0^m (- ^ dlog T0)"};
    const GradedComplex* C = S->C.get();
    S->ses.pi = ChainMap{B, C,
                         [C](const LogForm& w) {
                             LogForm out(w.ring(), w.nvars(), C->form_window(), w.degree(), FormMode::relative);
                             for (auto& [k, c] : w.terms()) {
                                 if (k.second & Mask(1))
                                     continue;
                                 MultiIndex a = k.first;
                                 a.set(0, 0);
                                 out.add_term(a, k.second, c);
                             }
                             return out;
                         },
                         0, "reduce mod T0, dlog T0"};
    S->ses.b_cell_of_c = [m](const MultiIndex& a) {
        MultiIndex b = a;
        b.set(0, m);
        return b;
    };
    S->ses.a_cell_of_b = [](const MultiIndex& a) {
        MultiIndex b = a;
        b.set(0, 0);
        return b;
    };
    return S;
}

std::vector<std::pair<MultiIndex, Mask>> obstruction_basis(const Chart& chart, const Divisor& D, int q)
{
    std::vector<std::pair<MultiIndex, Mask>> out;
    if (q < 1)
        return out;
    int p = chart.p;
    MultiIndex lo = D.prime(p).as_index();
    MultiIndex hi = D.as_index();
    auto masks = subsets_of_size(full_mask(chart.nvars()), q - 1);
    for (auto& e : monomials_up_to(chart.d, chart.window)) {
        MultiIndex a(chart.nvars());
        for (int j = 0; j < chart.d; ++j)
            a.set(j + 1, e[j]);
        if (!a.dominates(lo) || a.dominates(hi))
            continue;
        for (Mask I : masks)
            out.push_back({a, I});
    }
    return out;
}

CheckOutcome check_cartier_modulus(const Chart& chart, const Divisor& D, int q)
{
    CheckOutcome out;
    out.name = "cartier";
    out.params = Json{{"chart", chart_to_json(chart)}, {"divisor", divisor_json(D)}, {"q", q}};
    if (q < 0 || q > chart.d)
        throw PreconditionError("form degree out of range");
    GradedComplex C(chart, D, FormMode::relative);
    int p = chart.p;
    Divisor Dp = D.prime(p);
    int expected_dim = binomial(chart.d, q);
    DimsCache dims(C);
    std::map<std::vector<Scalar>, bool> bijective_seen;
    int image_cells = 0;
    for (auto& beta : C.cells()) {
        bool in_image = true;
        for (int j = 1; j <= chart.d; ++j)
            if ((beta[j] + D.at(j)) % p != 0)
                in_image = false;
        int h = dims.at(beta).H[q];
        if (!in_image) {
            if (h != 0) {
                auto H = graded_cohomology(C, q, beta);
                out.fail(fmt::format("H^{} nonzero off the Frobenius image at {}", q, beta.to_string()),
                         witness_nonzero_class(C, C.from_vector(H.representatives()[0], q, beta)));
                return out;
            }
            continue;
        }
        ++image_cells;
        out.add_row(q, beta, {{"dim_H", h}, {"dim_source", expected_dim}});
        auto sig = signature(C, beta);
        if (bijective_seen.count(sig))
            continue;
        MultiIndex src(chart.nvars());
        for (int j = 1; j <= chart.d; ++j)
            src.set(j, (beta[j] + D.at(j)) / p - Dp.at(j));
        auto H = graded_cohomology(C, q, beta);
        std::vector<Vec> cols;
        for (Mask I : C.basis(q)) {
            LogForm x = LogForm::term(chart.ring, chart.window, FormMode::relative, src, I, 1);
            LogForm y = cartier_inverse(x, D);
            auto cls = H.class_of(C.to_vector(y, beta));
            if (!cls) {
                out.fail(fmt::format("inverse Cartier image at {} is not closed", beta.to_string()),
                         witness_recheck(out.name, out.params, beta));
                return out;
            }
            cols.push_back(*cls);
        }
        FpMatrix M(chart.ring, H.dim_H, static_cast<int>(cols.size()));
        for (size_t c = 0; c < cols.size(); ++c)
            for (int r = 0; r < H.dim_H; ++r)
                M.set(r, static_cast<int>(c), cols[c][r]);
        int rk = rank(M);
        if (rk != expected_dim || H.dim_H != expected_dim) {
            out.fail(fmt::format("inverse Cartier at {} has rank {} onto H of dim {} (source dim {})",
                                 beta.to_string(), rk, H.dim_H, expected_dim),
                     witness_recheck(out.name, out.params, beta));
            return out;
        }
        bijective_seen[sig] = true;
    }
    out.note = fmt::format("{} image cells, {} cell signatures", image_cells, bijective_seen.size());
    return out;
}

namespace {

LogForm homotopy_defect(const LogForm& x, int mu, const Divisor& level)
{
    const auto& R = *x.ring();
    LogForm lhs = differential_twisted(residue(x, mu, level), level) +
                  residue(differential_twisted(x, level), mu, level);
    return lhs - x.scaled(R.from_int(level.at(mu)));
}

}  // namespace

CheckOutcome check_graded_acyclicity(const Chart& chart, const FiltrationChain& chain, int random_forms)
{
    CheckOutcome out;
    out.name = "acyclicity";
    Json steps = Json::array();
    for (auto& s : chain.steps)
        steps.push_back(divisor_json(s));
    out.params = Json{{"chart", chart_to_json(chart)}, {"chain", steps}, {"random_forms", random_forms}};
    const auto& R = *chart.ring;
    int p = chart.p;
    int eligible = 0, skipped = 0, random_checked = 0;
    std::mt19937 rng(0x5eed ^ static_cast<unsigned>(chain.steps.front().total() * 131 + chart.d * 7 + p));
    for (int i = 0; i < chain.length(); ++i) {
        const Divisor& level = chain.steps[i];
        int mu = chain.mu[i];
        int m_mu = chain.step_multiplicity(i);
        bool hypothesis = m_mu % p != 0;
        GradedComplex G(chart, level, FormMode::relative);
        std::vector<MultiIndex> cells;
        for (auto& beta : G.cells())
            if (beta[mu] == 0)
                cells.push_back(beta);
        hypothesis ? ++eligible : ++skipped;
        // Oracle 1: cohomology of every cell. Oracle 2: the residue homotopy on a basis.
        std::map<std::vector<Scalar>, std::pair<bool, bool>> seen;
        int nonzero_cells = 0;
        for (auto& beta : cells) {
            auto sig = signature(G, beta);
            auto it = seen.find(sig);
            if (it == seen.end()) {
                auto dims = cell_dims(G, beta);
                bool acyclic = std::all_of(dims.H.begin(), dims.H.end(), [](int h) { return h == 0; });
                bool homotopy = true;
                for (int q = 0; q <= G.top_degree() && homotopy; ++q)
                    for (Mask I : G.basis(q)) {
                        LogForm x = LogForm::term(chart.ring, G.form_window(), FormMode::relative, beta, I, 1);
                        if (!homotopy_defect(x, mu, level).is_zero()) {
                            out.fail(fmt::format("residue homotopy fails at step {} cell {}", i, beta.to_string()),
                                     witness_homotopy(G, mu, x));
                            homotopy = false;
                            break;
                        }
                    }
                if (!homotopy)
                    return out;
                if (hypothesis && !acyclic) {
                    int q = 0;
                    while (dims.H[q] == 0)
                        ++q;
                    auto H = graded_cohomology(G, q, beta);
                    out.fail(fmt::format("oracles disagree at step {} cell {}: homotopy by a unit but H^{} != 0",
                                         i, beta.to_string(), q),
                             witness_nonzero_class(G, G.from_vector(H.representatives()[0], q, beta)));
                    return out;
                }
                it = seen.emplace(sig, std::make_pair(acyclic, homotopy)).first;
            }
            if (!it->second.first)
                ++nonzero_cells;
        }
        // Random forms spread over several cells of the graded piece.
        int per_step = (random_forms + chain.length() - 1) / std::max(1, chain.length());
        std::uniform_int_distribution<size_t> pick(0, cells.size() - 1);
        std::uniform_int_distribution<Scalar> coef(0, R.size() - 1);
        for (int t = 0; t < per_step; ++t) {
            int q = static_cast<int>(rng() % (G.top_degree() + 1));
            LogForm x = G.zero_form(q);
            for (int k = 0; k < 4; ++k) {
                const auto& basis = G.basis(q);
                x.add_term(cells[pick(rng)], basis[rng() % basis.size()], coef(rng));
            }
            ++random_checked;
            if (!homotopy_defect(x, mu, level).is_zero()) {
                out.fail(fmt::format("residue homotopy fails on a random form at step {}", i),
                         witness_homotopy(G, mu, x));
                return out;
            }
        }
        MultiIndex tag(chart.nvars());
        tag.set(mu, 1);
        out.add_row(i, level.as_index(),
                    {{"mu", mu}, {"m_mu", m_mu}, {"hypothesis", hypothesis ? 1 : 0}, {"cells", int(cells.size())},
                     {"non_acyclic_cells", nonzero_cells}});
    }
    out.note = fmt::format("{} steps with p not dividing m_mu, {} without; {} random forms", eligible, skipped,
                           random_checked);
    if (chain.length() > 0 && eligible == 0)
        out.status = Status::hypothesis_not_met;
    return out;
}

CheckOutcome check_quasi_iso_inclusion(const Chart& chart, const Divisor& D, int q)
{
    CheckOutcome out;
    out.name = "quasi_iso_inclusion";
    out.params = Json{{"chart", chart_to_json(chart)}, {"divisor", divisor_json(D)}, {"q", q}};
    int p = chart.p;
    Divisor P = D.prime(p).scaled(p);
    GradedComplex S(chart, P, FormMode::relative);
    GradedComplex T(chart, D, FormMode::relative);
    MultiIndex shift = P.as_index() - D.as_index();
    RingPtr ring = chart.ring;
    ChainMap f{&S, &T,
               [shift, ring, &T](const LogForm& x) {
                   return poly_times(TruncatedPoly::monomial(ring, T.form_window(), shift, 1), x)
                       .with_window(T.form_window());
               },
               0, "T^(pD'-D)"};
    DimsCache sdims(S), tdims(T);
    std::map<std::vector<Scalar>, bool> seen;
    for (auto& beta : T.cells()) {
        int ht = tdims.at(beta).H[q];
        if (!beta.dominates(shift)) {
            if (ht != 0) {
                auto H = graded_cohomology(T, q, beta);
                out.fail(fmt::format("H^{} of the D-twist is nonzero at {} outside the image", q, beta.to_string()),
                         witness_nonzero_class(T, T.from_vector(H.representatives()[0], q, beta)));
                return out;
            }
            continue;
        }
        MultiIndex alpha = beta - shift;
        int hs = sdims.at(alpha).H[q];
        if (hs != ht) {
            out.fail(fmt::format("H^{} dimensions differ at {}: {} vs {}", q, beta.to_string(), hs, ht),
                     witness_cell_dim(T, q, beta, hs));
            return out;
        }
        if (ht == 0)
            continue;
        out.add_row(q, beta, {{"dim_H", ht}});
        auto sig = signature(T, beta);
        if (seen.count(sig))
            continue;
        auto m = induced_on_H(f, q, alpha);
        if (rank(m.matrix) != ht) {
            out.fail(fmt::format("inclusion is not bijective on H^{} at {}", q, beta.to_string()),
                     witness_recheck(out.name, out.params, beta));
            return out;
        }
        seen[sig] = true;
    }
    return out;
}

std::vector<LogForm> log_generators(const GradedComplex& C, int q)
{
    const auto& chart = C.chart();
    const auto& R = *chart.ring;
    std::vector<LogForm> out;
    int N = C.window();
    const Divisor& D = C.divisor();
    Mask S = C.index_set();
    if (D.is_zero()) {
        for (Mask J : subsets_of_size(S, q)) {
            LogForm w = C.zero_form(q);
            w.add_term(MultiIndex(chart.nvars()), J, 1);
            out.push_back(w);
        }
    }
    if (q < 1)
        return out;
    MultiIndex dshift = D.as_index();
    int big = N + D.total();
    std::vector<Scalar> scalars;
    for (int j = 0; j < R.s(); ++j)
        scalars.push_back(R.s() == 1 ? 1 : R.pow(R.p(), j));
    auto Js = subsets_of_size(S, q - 1);
    for (auto& e : monomials_up_to(chart.d, N)) {
        MultiIndex beta(chart.nvars());
        for (int j = 0; j < chart.d; ++j)
            beta.set(j + 1, e[j]);
        MultiIndex gamma = beta + dshift;
        if (gamma.total() == 0)
            continue;
        for (Scalar c : scalars) {
            TruncatedPoly u = TruncatedPoly::constant(chart.ring, chart.nvars(), big, 1);
            u.add_term(gamma, c);
            LogForm g = dlog_unit(u, C.mode());
            LogForm coeff(chart.ring, chart.nvars(), C.form_window(), 1, C.mode());
            for (auto& [k, v] : g.terms())
                coeff.add_term(k.first - dshift, k.second, v);
            for (Mask J : Js) {
                LogForm tail = C.zero_form(q - 1);
                tail.add_term(MultiIndex(chart.nvars()), J, 1);
                LogForm w = wedge(coeff, tail);
                if (!w.is_zero())
                    out.push_back(w);
            }
        }
    }
    return out;
}

CheckOutcome check_log_kernel(const Chart& chart, const Divisor& D, int q)
{
    CheckOutcome out;
    out.name = "log_kernel";
    out.params = Json{{"chart", chart_to_json(chart)}, {"divisor", divisor_json(D)}, {"q", q}};
    GradedComplex C(chart, D, FormMode::relative);
    const auto& R = *chart.ring;
    auto gens = log_generators(C, q);
    for (auto& g : gens) {
        if (auto bad = semilinear_defect(1, C, g)) {
            out.fail(fmt::format("generator not killed by 1 - C^-1 at {}", bad->to_string()),
                     witness_semilinear(C, 1, g));
            return out;
        }
    }
    auto K = semilinear_kernel(1, C, q);
    for (auto& k : K.basis)
        if (auto bad = semilinear_defect(1, C, k)) {
            out.fail(fmt::format("kernel element not killed at {}", bad->to_string()), witness_semilinear(C, 1, k));
            return out;
        }
    // Compare F_p-spans inside the window.
    auto cells = C.cells();
    std::map<MultiIndex, int> where;
    for (size_t i = 0; i < cells.size(); ++i)
        where[cells[i]] = static_cast<int>(i);
    int rq = C.rank_of(q);
    int s = R.s();
    int dim = static_cast<int>(cells.size()) * rq * s;
    RingPtr fp = make_ring(R.p());
    auto flatten = [&](const LogForm& w) {
        Vec v(dim, 0);
        for (auto& [k, c] : w.terms()) {
            auto it = where.find(k.first);
            if (it == where.end())
                continue;
            int base = (it->second * rq + C.index_of(k.second)) * s;
            auto digits = fp_coordinates(R, Vec{c});
            for (int j = 0; j < s; ++j)
                v[base + j] = digits[j];
        }
        return v;
    };
    Echelon gen_span(fp, dim), ker_span(fp, dim);
    for (auto& g : gens)
        gen_span.insert(flatten(g));
    for (auto& k : K.basis)
        ker_span.insert(flatten(k));
    for (auto& k : K.basis)
        if (!gen_span.contains(flatten(k))) {
            out.fail("kernel element outside the span of the log generators", witness_semilinear(C, 1, k));
            return out;
        }
    for (auto& g : gens)
        if (!ker_span.contains(flatten(g))) {
            out.fail("log generator outside the computed kernel", witness_semilinear(C, 1, g));
            return out;
        }
    out.add_row(q, MultiIndex(chart.nvars()),
                {{"kernel_dim", K.dim},
                 {"generator_span", gen_span.rank()},
                 {"seeds", K.seeds},
                 {"closed_orbits", K.closed_orbits}});
    if (!K.conclusive)
        out.inconclusive(K.note);
    else
        out.note = "surjectivity of 1 - C^-1 not checked";
    return out;
}

CheckOutcome check_Tm_sequences(const Chart& chart, const Divisor& D, int m, int q)
{
    if (m < 1)
        throw PreconditionError("the T^m sequences need m >= 1");
    CheckOutcome out;
    out.name = "tm_sequences";
    out.params = Json{{"chart", chart_to_json(chart)}, {"divisor", divisor_json(D)}, {"m", m}, {"q", q}};
    int p = chart.p;
    bool divisible = m % p == 0;
    auto S = make_parameter_sequence(chart, D, m);
    const auto& A = *S->A;
    const auto& B = *S->B;
    DimsCache adims(A), bdims(B);
    std::map<std::vector<Scalar>, bool> seen;
    for (auto& beta : A.cells()) {
        MultiIndex b = S->b_cell(beta);
        const auto& da = adims.at(beta);
        const auto& db = bdims.at(b);
        int left = q >= 2 ? A.rank_of(q - 2) - dim_at(da.Z, q - 2) : 0;
        int right = q >= 1 ? A.rank_of(q - 1) - (divisible ? dim_at(da.Z, q - 1) : dim_at(da.B, q - 1)) : 0;
        int middle = dim_at(db.B, q);
        if (left + right != middle) {
            out.fail(fmt::format("dimensions at {}: {} + {} != dim B^{} = {}", beta.to_string(), left, right, q,
                                 middle),
                     witness_recheck(out.name, out.params, beta));
            return out;
        }
        if (middle == 0)
            continue;
        if (out.dims.size() < 50)
            out.add_row(q, beta, {{"left", left}, {"middle", middle}, {"right", right}});
        auto key = signature(B, b);
        if (seen.count(key))
            continue;
        seen[key] = true;
        // Left map x -> d(T^m x ^ dlog T0) is injective modulo Z^{q-2}.
        if (q >= 2) {
            FpMatrix iM = map_matrix(S->ses.i, q - 2, beta, b);
            FpMatrix dM = B.differential(q - 1, b);
            int rk = rank(dM * iM);
            if (rk != left) {
                out.fail(fmt::format("left map has rank {} != {} at {}", rk, left, beta.to_string()),
                         witness_recheck(out.name, out.params, beta));
                return out;
            }
        }
        // Cocycles of the middle complex project into B^{q-1} (p !| m) or Z^{q-1} (p | m) of omega_Y.
        if (q >= 1) {
            auto HB = graded_cohomology(B, q - 1, b);
            auto HA = graded_cohomology(A, q - 1, beta);
            FpMatrix piM = map_matrix(S->ses.pi, q - 1, b, beta);
            for (auto& z : HB.cocycles) {
                Vec y = piM.apply(z);
                bool ok = divisible ? HA.is_cocycle(y) : HA.is_coboundary(y);
                if (!ok) {
                    LogForm yf = A.from_vector(y, q - 1, beta);
                    out.fail(fmt::format("projected cocycle at {} is not in {}^{}", beta.to_string(),
                                         divisible ? "Z" : "B", q - 1),
                             witness_nonzero_class(A, yf));
                    return out;
                }
            }
            // For p | m the projection reaches all of Z^{q-1}.
            if (divisible) {
                std::vector<Vec> imgs;
                for (auto& z : HB.cocycles)
                    imgs.push_back(piM.apply(z));
                Echelon E(chart.ring, A.rank_of(q - 1));
                for (auto& v : imgs)
                    E.insert(v);
                if (E.rank() != HA.dim_Z) {
                    out.fail(fmt::format("projection of Z^{} misses part of Z^{} at {}", q - 1, q - 1,
                                         beta.to_string()),
                             witness_recheck(out.name, out.params, beta));
                    return out;
                }
            }
        }
    }
    out.note = divisible ? "right end term omega/Z" : "right end term omega/B";
    return out;
}

CheckOutcome check_connecting_identity(const Chart& chart, const Divisor& D, int m, int q)
{
    CheckOutcome out;
    out.name = "connecting";
    out.params = Json{{"chart", chart_to_json(chart)}, {"divisor", divisor_json(D)}, {"m", m}, {"q", q}};
    const auto& R = *chart.ring;
    auto S = make_parameter_sequence(chart, D, m);
    const auto& A = *S->A;
    const auto& C = *S->C;
    Scalar lambda = R.from_int(q % 2 == 0 ? m : -m);
    DimsCache cdims(C);
    std::map<std::vector<Scalar>, bool> seen;
    for (auto& beta : C.cells()) {
        int h = cdims.at(beta).H[q];
        if (h == 0)
            continue;
        if (out.dims.size() < 50)
            out.add_row(q, beta, {{"dim_H", h}, {"scalar", static_cast<int>(lambda)}});
        auto key = signature(C, beta);
        if (seen.count(key))
            continue;
        seen[key] = true;
        std::string why;
        if (!long_exact_sequence_exact(S->ses, S->b_cell(beta), &why)) {
            out.fail(why, witness_recheck(out.name, out.params, beta));
            return out;
        }
        auto delta = connecting_map(S->ses, q, beta);
        const auto& reps = delta.source_H.representatives();
        const auto& treps = delta.target_H.representatives();
        for (int k = 0; k < h; ++k) {
            bool ok = true;
            for (int r = 0; r < delta.target_H.dim_H; ++r)
                ok &= delta.matrix.get(r, k) == (r == k ? lambda : 0);
            if (ok)
                continue;
            Vec img(A.rank_of(q), 0);
            for (int r = 0; r < delta.target_H.dim_H; ++r)
                for (size_t t = 0; t < img.size(); ++t)
                    img[t] = R.add(img[t], R.mul(delta.matrix.get(r, k), treps[r][t]));
            LogForm got = A.from_vector(img, q, beta);
            LogForm expected = C.from_vector(reps[k], q, beta).scaled(lambda);
            out.fail(fmt::format("connecting map at {} is not {} id", beta.to_string(), lambda),
                     witness_class_mismatch(A, got, expected));
            return out;
        }
    }
    return out;
}

CheckOutcome check_ml_transition(const Chart& chart, const Divisor& D1, const Divisor& D2, int q)
{
    if (!D2.dominates(D1))
        throw PreconditionError("transition needs D2 >= D1 componentwise");
    CheckOutcome out;
    out.name = "ml_transition";
    out.params = Json{{"chart", chart_to_json(chart)}, {"D1", divisor_json(D1)}, {"D2", divisor_json(D2)}, {"q", q}};
    int p = chart.p;
    // The obstruction module vanishes in degree 0.
    bool predicted_zero = q < 1 || D2.prime(p).dominates(D1);
    auto K2 = obstruction_basis(chart, D2, q);
    auto K1 = obstruction_basis(chart, D1, q);
    MultiIndex d1 = D1.as_index();
    int surviving = 0;
    std::optional<std::pair<MultiIndex, Mask>> survivor;
    for (auto& [a, I] : K2)
        if (!a.dominates(d1)) {
            ++surviving;
            if (!survivor)
                survivor = std::make_pair(a, I);
        }
    out.add_row(q, MultiIndex(chart.nvars()),
                {{"dim_K_D2", int(K2.size())}, {"dim_K_D1", int(K1.size())}, {"transition_rank", surviving}});
    Json w{{"kind", "transition"},
           {"chart", chart_to_json(chart)},
           {"D1", divisor_json(D1)},
           {"D2", divisor_json(D2)},
           {"q", q},
           {"predicted_zero", predicted_zero}};
    if (predicted_zero && surviving > 0) {
        LogForm f = LogForm::term(chart.ring, chart.window, FormMode::special_fiber, survivor->first,
                                  survivor->second, 1);
        w["form"] = form_to_json(f);
        out.fail(fmt::format("transition nonzero on {}", survivor->first.to_string()), w);
    } else if (!predicted_zero && surviving == 0) {
        if (D2.prime(p).total() <= chart.window)
            out.fail("transition vanishes although D2' does not dominate D1",
                     witness_recheck(out.name, out.params, MultiIndex(chart.nvars())));
        else
            out.inconclusive("the minimal surviving monomial lies outside the window");
    }
    out.note = predicted_zero ? "transition predicted zero" : "transition predicted nonzero";
    return out;
}

}  // namespace mdr
