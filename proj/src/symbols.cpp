#include <algorithm>
#include <random>

#include <fmt/format.h>

#include "gr_fiber.hpp"
#include "mdr/errors.hpp"
#include "mdr/modulus.hpp"
#include "mdr/syntomic.hpp"

namespace mdr {

using namespace detail;

namespace {

Json poly_to_json(const TruncatedPoly& f)
{
    Json terms = Json::array();
    for (auto& [k, c] : f.terms())
        terms.push_back(Json::array({k.to_vector(), c}));
    return Json{{"nvars", f.nvars()}, {"window", f.window()}, {"terms", terms}};
}

TruncatedPoly poly_from_json(RingPtr ring, const Json& j)
{
    TruncatedPoly f(ring, j.at("nvars").get<int>(), j.at("window").get<int>());
    for (auto& t : j.at("terms"))
        f.add_term(MultiIndex(t.at(0).get<std::vector<int>>()), t.at(1).get<Scalar>());
    return f;
}

Json symbol_to_json(const SymbolInput& S)
{
    Json a = Json::array();
    for (auto& f : S.a)
        a.push_back(Json{{"unit", poly_to_json(f.unit)}, {"monomial", f.monomial}});
    return Json{{"x", poly_to_json(S.x)}, {"a", a}};
}

SymbolInput symbol_from_json(int p, const Json& j)
{
    RingPtr z2 = make_ring(p, 2);
    SymbolInput S{poly_from_json(z2, j.at("x")), {}};
    for (auto& f : j.at("a"))
        S.a.push_back({poly_from_json(z2, f.at("unit")), f.at("monomial").get<std::vector<int>>()});
    return S;
}

RingPtr residue_field(const TruncatedPoly& f) { return make_ring(f.ring()->p()); }

void require_z2(const TruncatedPoly& u)
{
    const auto& R = *u.ring();
    if (R.n() != 2 || R.s() != 1)
        throw PreconditionError("symbol entries must have coefficients in Z/p^2");
}

LogForm dlog_factor(const SymbolFactor& a, int window)
{
    RingPtr fp = residue_field(a.unit);
    return dlog_unit(a.unit.with_ring(fp).with_window(window)) + dlog_monomial(fp, window, a.monomial);
}

LogForm phi_dlog_factor(const SymbolFactor& a, int window)
{
    RingPtr fp = residue_field(a.unit);
    return frobenius_truncated(dlog_unit(a.unit.with_ring(fp).with_window(window))) +
           dlog_monomial(fp, window, a.monomial);
}

// Terms at T_0-exponent `level` as a coefficient form of the D-twist.
// Returns nullopt if such a term is not divisible by T^D.
std::optional<LogForm> coefficient_form(const LogForm& w, const Divisor& D, int level, const GradedComplex& C)
{
    LogForm out(C.chart().ring, w.nvars(), C.form_window(), w.degree(), C.mode());
    MultiIndex Dx = D.as_index();
    for (auto& [k, c] : w.terms()) {
        if (k.first[0] != level)
            continue;
        MultiIndex b = k.first - Dx;
        if (!b.nonnegative())
            return std::nullopt;
        out.add_term(b, k.second, c);
    }
    return out;
}

LogForm shift_t0(const LogForm& w, int k)
{
    LogForm out(w.ring(), w.nvars(), w.window() + k, w.degree(), w.mode());
    MultiIndex s(w.nvars());
    s.set(0, k);
    for (auto& [key, c] : w.terms())
        out.add_term(key.first + s, key.second, c);
    return out;
}

bool has_term_below(const LogForm& w, int level)
{
    for (auto& [k, c] : w.terms())
        if (k.first[0] < level)
            return true;
    return false;
}

bool in_twist(const LogForm& w, const Divisor& D)
{
    for (auto& [k, c] : w.terms())
        for (int j = 1; j <= D.size(); ++j)
            if (k.first[j] < D.at(j))
                return false;
    return true;
}

bool poly_in_twist(const TruncatedPoly& f, const Divisor& D, int t0_min)
{
    for (auto& [k, c] : f.terms()) {
        if (k[0] < t0_min)
            return false;
        for (int j = 1; j <= D.size(); ++j)
            if (k[j] < D.at(j))
                return false;
    }
    return true;
}

}  // namespace

TruncatedPoly symbol_log(const TruncatedPoly& u)
{
    require_z2(u);
    const auto& R = *u.ring();
    Scalar c = u.constant_term();
    if (!R.is_unit(c))
        throw PreconditionError("symbol_log needs a unit");
    Scalar ci = R.inv(c);
    TruncatedPoly inv_phi = principal_unit_inverse(u.frobenius().scaled(ci)).scaled(ci);
    TruncatedPoly v = trunc_mul(trunc_pow(u, R.p()), inv_phi) -
                      TruncatedPoly::constant(u.ring(), u.nvars(), u.window(), 1);
    return exact_divide_by_p(v).with_ring(residue_field(u));
}

LogForm frobenius_truncated(const LogForm& w)
{
    int W = w.window();
    return frobenius_pullback(w.with_window(W / w.ring()->p()).with_window(W));
}

SymbolCocycle symbol_cocycle(const SymbolInput& S, const Divisor& D)
{
    require_z2(S.x);
    TruncatedPoly one = TruncatedPoly::constant(S.x.ring(), S.x.nvars(), S.x.window(), 1);
    if (!poly_in_twist(S.x - one, D, 0))
        throw PreconditionError(fmt::format("x - 1 is not in the ideal of {}", D.to_string()));
    int W = S.x.window();
    RingPtr fp = residue_field(S.x);
    LogForm X = dlog_unit(S.x.with_ring(fp));
    LogForm Y = form_from_poly(symbol_log(S.x), 0);
    for (auto& a : S.a) {
        require_z2(a.unit);
        LogForm da = dlog_factor(a, W);
        LogForm next = wedge(Y, phi_dlog_factor(a, W));
        LogForm lx = poly_times(symbol_log(a.unit.with_window(W)), X);
        next = X.degree() % 2 ? next - lx : next + lx;
        X = wedge(X, da);
        Y = next;
    }
    return {X, Y};
}

std::optional<std::string> symbol_closedness_defect(const SymbolCocycle& c)
{
    if (!differential(c.first).is_zero())
        return std::string("first component is not closed");
    LogForm lhs = differential(c.second);
    LogForm rhs = c.first - frobenius_truncated(c.first);
    if (lhs != rhs)
        return fmt::format("d(second) - (1 - phi)(first) = {}", (lhs - rhs).to_string());
    return std::nullopt;
}

CheckOutcome check_symbol_filtration(const Chart& chart, const Divisor& D, const SymbolInput& S, int m)
{
    CheckOutcome out;
    out.name = "symbol_filtration";
    out.params = Json{{"chart", chart_to_json(chart)}, {"divisor", Json(D.mult())}, {"m", m},
                      {"symbol", symbol_to_json(S)}};
    if (m < 1)
        throw PreconditionError("symbol filtration needs m >= 1");
    TruncatedPoly one = TruncatedPoly::constant(S.x.ring(), S.x.nvars(), S.x.window(), 1);
    if (!poly_in_twist(S.x - one, D, m))
        throw PreconditionError(fmt::format("x - 1 is not in T_0^{} I_D", m));
    Json w = witness_recheck(out.name, out.params, MultiIndex(chart.nvars()));
    SymbolCocycle c = symbol_cocycle(S, D);
    if (auto why = symbol_closedness_defect(c)) {
        out.fail(*why, w);
        return out;
    }
    RingPtr fp = residue_field(S.x);
    LogForm dlx = dlog_unit(S.x.with_ring(fp));
    TruncatedPoly lx = symbol_log(S.x);
    bool eq1 = !has_term_below(dlx, m) && in_twist(dlx, D);
    bool eq2 = poly_in_twist(lx, D, m);
    bool cocycle = !has_term_below(c.first, m) && !has_term_below(c.second, m) && in_twist(c.first, D) &&
                   in_twist(c.second, D);
    out.add_row(S.degree(), MultiIndex(chart.nvars()),
                {{"dlog_x_in_filtration", eq1}, {"log_x_in_filtration", eq2}, {"cocycle_in_filtration", cocycle}});
    if (!eq1) {
        out.fail("dlog x leaves T_0^m O(-D) (x) omega^1", w);
        return out;
    }
    if (!eq2) {
        out.fail("p^-1 log(x^p phi(x)^-1) leaves T_0^m O(-D)", w);
        return out;
    }
    if (!cocycle) {
        out.fail("symbol cocycle leaves the m-th filtration step", w);
        return out;
    }
    out.note = fmt::format("degree {} symbol in filtration step {}", S.degree(), m);
    if (1LL * m * (chart.p - 1) >= 1LL * chart.p * chart.eis.e)
        out.note += "; the graded pieces vanish from here on";
    return out;
}

// ---- graded symbol map ----------------------------------------------------

namespace {

struct SymbolContext {
    int p, d, W, m, m0;
    RingPtr z2;
};

TruncatedPoly x_from(const SymbolContext& ctx, const Divisor& D, const TruncatedPoly& y)
{
    TruncatedPoly x = TruncatedPoly::constant(ctx.z2, ctx.d + 1, ctx.W, 1);
    MultiIndex s = D.as_index();
    s.set(0, ctx.m);
    for (auto& [k, c] : y.terms())
        x.add_term(k + s, c);
    return x;
}

SymbolFactor coordinate_factor(const SymbolContext& ctx, int j)
{
    std::vector<int> k(ctx.d + 1, 0);
    k[j] = 1;
    return {TruncatedPoly::constant(ctx.z2, ctx.d + 1, ctx.W, 1), k};
}

}  // namespace

CheckOutcome check_graded_symbol_map(const Chart& chart, const Divisor& D, int q, int r, int m, int random_symbols)
{
    CheckOutcome out;
    out.name = "graded_symbols";
    out.params = Json{{"chart", chart_to_json(chart)}, {"divisor", Json(D.mult())}, {"q", q}, {"r", r}, {"m", m},
                      {"random_symbols", random_symbols}};
    if (q < 0 || q > r || r > chart.p - 2 || m < 0)
        throw PreconditionError(fmt::format("need 0 <= q <= r <= p-2 and m >= 0, got q={} r={} m={}", q, r, m));
    int p = chart.p, d = chart.d, e = chart.eis.e, theta = r - q;
    if (q == 0) {
        out.status = Status::hypothesis_not_met;
        out.note = "no symbols in degree 0";
        return out;
    }
    if (chart.s != 1) {
        out.inconclusive("symbols are implemented over Z/p^2 lifts of F_p only");
        return out;
    }
    if (compare_upper(p, e, 0, m) >= 0) {
        out.status = Status::hypothesis_not_met;
        out.note = "m >= pe/(p-1): no graded symbol targets";
        return out;
    }
    int m0 = 0;
    if (theta > 0) {
        Scalar a = chart.eis.a.at(0);
        if (a != 1) {
            out.status = Status::hypothesis_not_met;
            out.note = "a_0 must be a (p-1)-st power; over F_p that forces a_0 = 1";
            return out;
        }
        if ((e * p * theta) % (p - 1) != 0) {
            out.status = Status::hypothesis_not_met;
            out.note = "e p (r-q)/(p-1) is not an integer";
            return out;
        }
        m0 = e * p * theta / (p - 1);
    }
    SymbolContext ctx{p, d, m + m0 + D.total() + chart.window, m, m0, make_ring(p, 2)};
    Json wit = witness_recheck(out.name, out.params, MultiIndex(chart.nvars()));
    RingPtr fp = make_ring(p);
    GradedComplex sf(chart, D, FormMode::special_fiber);

    // Random symbols: closedness, filtration and the graded target.
    std::mt19937 rng(977u * p + 131u * d + 17u * q + 7u * r + static_cast<unsigned>(m) * 1009u +
                     static_cast<unsigned>(D.total()) * 65537u);
    auto small_poly = [&](int nterms, bool allow_t0) {
        TruncatedPoly y(ctx.z2, d + 1, ctx.W);
        for (int t = 0; t < nterms; ++t) {
            MultiIndex k(d + 1);
            for (int j = allow_t0 ? 0 : 1; j <= d; ++j)
                k.set(j, static_cast<int>(rng() % 2));
            y.add_term(k, ctx.z2->from_int(1 + rng() % (p * p - 1)));
        }
        return y;
    };
    int checked = 0;
    for (int t = 0; t < random_symbols; ++t) {
        TruncatedPoly y = small_poly(1 + t % 3, m > 0);
        if (y.with_ring(fp).is_zero())
            y.add_term(MultiIndex(d + 1), 1);
        // x must stay a unit when D = 0 and m = 0.
        if (m == 0 && D.is_zero() && fp->from_int(1 + y.constant_term()) == 0)
            y.add_term(MultiIndex(d + 1), 1);
        SymbolInput S{x_from(ctx, D, y), {}};
        for (int i = 0; i + 1 < q; ++i) {
            int j = static_cast<int>(rng() % (d + 1));
            SymbolFactor f = coordinate_factor(ctx, j);
            if (rng() % 2) {
                MultiIndex k(d + 1);
                k.set(static_cast<int>(rng() % (d + 1)), 1);
                f.unit.add_term(k, ctx.z2->from_int(1 + rng() % (p - 1)));
            }
            S.a.push_back(f);
        }
        SymbolCocycle c = symbol_cocycle(S, D);
        if (auto why = symbol_closedness_defect(c)) {
            out.fail(fmt::format("symbol {} is not a cocycle: {}", t, *why), wit);
            return out;
        }
        if (has_term_below(c.first, m) || has_term_below(c.second, m)) {
            out.fail(fmt::format("symbol {} leaves the filtration step {}", t, m), wit);
            return out;
        }
        if (m == 0) {
            auto z = coefficient_form(c.first, D, 0, sf);
            if (!z) {
                out.fail(fmt::format("symbol {} is not in the D-twist", t), wit);
                return out;
            }
            if (auto cell = semilinear_defect(1, sf, to_mode(*z, FormMode::special_fiber))) {
                out.fail(fmt::format("symbol {} is not fixed by phi on the special fiber at {}", t, cell->to_string()),
                         wit);
                return out;
            }
        } else {
            // The level-m part of the first component is d(T^m y dlog a_1 ... ).
            LogForm da = form_from_poly(TruncatedPoly::constant(fp, d + 1, ctx.W, 1), 0);
            for (auto& f : S.a)
                da = wedge(da, dlog_factor(f, ctx.W));
            MultiIndex s = D.as_index();
            s.set(0, m);
            TruncatedPoly ty(fp, d + 1, ctx.W);
            TruncatedPoly y_bar = y.with_ring(fp);
            for (auto& [k, c2] : y_bar.terms())
                ty.add_term(k + s, c2);
            LogForm target = differential(poly_times(ty, da));
            LogForm lhs = LogForm::like(c.first, q), rhs = LogForm::like(c.first, q);
            for (auto& [k, v] : c.first.terms())
                if (k.first[0] == m)
                    lhs.add_term(k.first, k.second, v);
            for (auto& [k, v] : target.terms())
                if (k.first[0] == m)
                    rhs.add_term(k.first, k.second, v);
            if (lhs != rhs) {
                out.fail(fmt::format("symbol {}: graded image differs from d(T^m y dlog a)", t), wit);
                return out;
            }
        }
        ++checked;
    }

    // Systematic symbols on every chain: their classes fill gr^m H^q up to the
    // obstruction piece when p | m.
    int coker_total = 0, image_total = 0, bound_total = 0;
    if (m > 0) {
        SyntomicGrPiece P(chart, D, q, r, m + m0);
        const ChainCensus& census = chain_census(chart, D);
        int obstruction_rank = binomial(d + 1, q - 1);
        auto masks = subsets_of_size(full_mask(d + 1), q - 1);
        for (auto& cls : census.classes) {
            const Chain& chain = cls.rep;
            ChainFiber F = build_chain_fiber(P, chain);
            FiberDims dims = analyze(F);
            FiberSubspaces sub = fiber_subspaces(F);
            FpMatrix dq = F.dF(q);
            auto La = P.a_level(q);
            std::vector<Vec> images;
            for (auto& beta : chain.cells) {
                TruncatedPoly y(ctx.z2, d + 1, ctx.W);
                y.add_term(beta, 1);
                for (Mask I : masks) {
                    SymbolInput S{x_from(ctx, D, y), {}};
                    for (int j = 0; j <= d; ++j)
                        if (I & (1u << j))
                            S.a.push_back(coordinate_factor(ctx, j));
                    SymbolCocycle c = symbol_cocycle(S, D);
                    LogForm first = shift_t0(c.first, m0), second = shift_t0(c.second, m0);
                    Vec v;
                    if (La) {
                        auto cf = coefficient_form(first, D, *La, P.a_complex(q));
                        if (!cf) {
                            out.fail("systematic symbol is not in the D-twist", wit);
                            return out;
                        }
                        v = chain_vector(F, chain, P.a_complex(q), q, false, *cf);
                    }
                    auto cs = coefficient_form(second, D, m + m0, P.b_complex());
                    if (!cs) {
                        out.fail("systematic symbol is not in the D-twist", wit);
                        return out;
                    }
                    Vec vb = chain_vector(F, chain, P.b_complex(), q - 1, true, *cs);
                    v.insert(v.end(), vb.begin(), vb.end());
                    if (!is_zero(dq.apply(v))) {
                        out.fail(fmt::format("symbol at {} is not a cocycle of the graded fiber", beta.to_string()),
                                 witness_recheck(out.name, out.params, chain.cells[0]));
                        return out;
                    }
                    images.push_back(std::move(v));
                }
            }
            Echelon E(F.fp, F.f_dim(q));
            for (auto& b : sub.B)
                E.insert(b);
            int base = E.rank();
            for (auto& v : images)
                E.insert(v);
            int image = E.rank() - base;
            int coker = dims.hF_q - image;
            // The cokernel is a quotient of the obstruction piece: images and
            // the classes coming from H^{q-1}(B) together fill H^q.
            for (auto& k : sub.K)
                E.insert(k);
            bool spanned = E.rank() - base == dims.hF_q;
            int bound = (m % p == 0 && resonant_start(chain, D, p)) ? obstruction_rank * chart.s : 0;
            out.add_row(q, chain.cells[0],
                        {{"chains", cls.count}, {"dim_H^q", dims.hF_q}, {"symbol_image", image}, {"cokernel", coker},
                         {"obstruction_bound", bound}, {"spanned_with_obstruction", spanned}});
            if (!spanned || coker > bound) {
                out.fail(fmt::format("graded cokernel of the symbol map has dim {} (obstruction bound {}, {}) at {}",
                                     coker, bound, spanned ? "spanned" : "not spanned with the obstruction",
                                     chain.cells[0].to_string()),
                         witness_recheck(out.name, out.params, chain.cells[0]));
                return out;
            }
            bound_total += cls.count * bound;
            coker_total += cls.count * coker;
            image_total += cls.count * image;
        }
    }

    // The obstruction, and with it the cokernel, dies along D -> pD.
    if (bound_total > 0) {
        CheckOutcome ml = check_ml_transition(chart, D, D.scaled(p), q);
        if (ml.failed()) {
            out.fail("transition to pD does not kill the graded cokernel: " + ml.note, ml.witness);
            return out;
        }
    }
    out.note = fmt::format("{} random symbols closed; symbol image {} with cokernel {} (obstruction {}){}", checked,
                           image_total, coker_total, bound_total, m0 ? fmt::format(" after the shift by {}", m0) : "");
    return out;
}

// ---- rerun by name ---------------------------------------------------------

CheckOutcome rerun_syntomic_check(const std::string& check, const Chart& chart, const Json& params)
{
    auto get = [&](const char* k) { return params.at(k).get<int>(); };
    auto div = [&]() { return Divisor(params.at("divisor").get<std::vector<int>>()); };
    if (check == "pd_envelope")
        return check_pd_envelope(chart, div());
    if (check == "gr_structure")
        return check_gr_structure(chart, div(), get("q"), get("r"), get("m"));
    if (check == "product")
        return check_product_iso(chart, div(), get("q"), get("r"));
    if (check == "base_change")
        return check_tame_base_change(chart, div(), get("q"), get("r"), get("w"));
    if (check == "graded_symbols")
        return check_graded_symbol_map(chart, div(), get("q"), get("r"), get("m"), get("random_symbols"));
    if (check == "symbol_filtration")
        return check_symbol_filtration(chart, div(), symbol_from_json(chart.p, params.at("symbol")), get("m"));
    throw ConfigError(fmt::format("unknown check '{}'", check));
}

}  // namespace mdr
