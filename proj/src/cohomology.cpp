#include "mdr/cohomology.hpp"

#include <random>

#include <fmt/format.h>

#include "mdr/errors.hpp"

namespace mdr {

GradedComplex::GradedComplex(const Chart& chart, Divisor D, FormMode mode, int t0_label)
    : GradedComplex(chart, std::move(D), mode, t0_label, chart.window)
{
}

GradedComplex::GradedComplex(const Chart& chart, Divisor D, FormMode mode, int t0_label, int window)
    : chart_(chart), D_(std::move(D)), mode_(mode), label_(t0_label), window_(window)
{
    if (D_.size() != chart_.d)
        throw ConfigError(fmt::format("divisor {} does not match dim {}", D_.to_string(), chart_.d));
    if (mode_ != FormMode::full && label_ != 0)
        throw ConfigError("a T_0 label needs the full mode");
    if (label_ < 0 || window_ < 0)
        throw ConfigError("negative label or window");
    S_ = allowed_mask(mode_, chart_.nvars());
    bases_.resize(mask_size(S_) + 1);
    for (int q = 0; q <= mask_size(S_); ++q)
        bases_[q] = subsets_of_size(S_, q);
    index_.assign(size_t(1) << chart_.nvars(), -1);
    for (auto& b : bases_)
        for (size_t k = 0; k < b.size(); ++k)
            index_[b[k]] = static_cast<int>(k);
}

const std::vector<Mask>& GradedComplex::basis(int q) const
{
    static const std::vector<Mask> empty;
    if (q < 0 || q >= static_cast<int>(bases_.size()))
        return empty;
    return bases_[q];
}

bool GradedComplex::contains_cell(const MultiIndex& alpha) const
{
    if (alpha.size() != chart_.nvars() || !alpha.nonnegative() || alpha[0] != label_)
        return false;
    return alpha.total() - alpha[0] <= window_;
}

std::vector<MultiIndex> GradedComplex::cells() const
{
    std::vector<MultiIndex> out;
    for (auto& beta : monomials_up_to(chart_.d, window_)) {
        MultiIndex a(chart_.nvars());
        a.set(0, label_);
        for (int j = 0; j < chart_.d; ++j)
            a.set(j + 1, beta[j]);
        out.push_back(a);
    }
    return out;
}

MultiIndex GradedComplex::cell_of(const std::vector<int>& beta) const
{
    MultiIndex a(chart_.nvars());
    a.set(0, label_);
    for (int j = 0; j < chart_.d; ++j)
        a.set(j + 1, beta[j]);
    return a;
}

Scalar GradedComplex::koszul(const MultiIndex& alpha, int j) const
{
    return chart_.ring->from_int(static_cast<long long>(alpha[j]) + D_.at(j));
}

bool GradedComplex::resonant(const MultiIndex& alpha) const
{
    for (int j = 0; j < chart_.nvars(); ++j)
        if ((S_ >> j & 1) && koszul(alpha, j) != 0)
            return false;
    return true;
}

FpMatrix GradedComplex::differential(int q, const MultiIndex& alpha) const
{
    const auto& R = *chart_.ring;
    FpMatrix M(chart_.ring, rank_of(q + 1), rank_of(q));
    const auto& src = basis(q);
    for (size_t k = 0; k < src.size(); ++k) {
        Mask I = src[k];
        for (int j = 0; j < chart_.nvars(); ++j) {
            if (!(S_ >> j & 1) || (I >> j & 1))
                continue;
            Scalar v = koszul(alpha, j);
            if (v == 0)
                continue;
            int s = insert_sign(j, I);
            M.add_to(index_[I | (Mask(1) << j)], static_cast<int>(k), s < 0 ? R.neg(v) : v);
        }
    }
    return M;
}

Vec GradedComplex::to_vector(const LogForm& w, const MultiIndex& alpha) const
{
    const auto& b = basis(w.degree());
    Vec v(b.size(), 0);
    for (size_t k = 0; k < b.size(); ++k)
        v[k] = w.coeff(alpha, b[k]);
    return v;
}

LogForm GradedComplex::from_vector(const Vec& v, int q, const MultiIndex& alpha) const
{
    LogForm w = zero_form(q);
    const auto& b = basis(q);
    if (v.size() != b.size())
        throw PreconditionError("vector length does not match the cell basis");
    for (size_t k = 0; k < b.size(); ++k)
        w.add_term(alpha, b[k], v[k]);
    return w;
}

LogForm GradedComplex::zero_form(int q) const
{
    return LogForm(chart_.ring, chart_.nvars(), form_window(), q, mode_);
}

LogForm GradedComplex::d(const LogForm& w) const { return differential_twisted(w, D_); }

std::string GradedComplex::describe() const
{
    const char* m = mode_ == FormMode::full ? "full" : mode_ == FormMode::relative ? "relative" : "special_fiber";
    return fmt::format("{} D={} label={} window={}", m, D_.to_string(), label_, window_);
}

CohomologyBasis graded_cohomology(const GradedComplex& C, int q, const MultiIndex& alpha)
{
    if (!C.contains_cell(alpha))
        throw PreconditionError(fmt::format("cell {} is outside the complex {}", alpha.to_string(), C.describe()));
    const auto& ring = C.chart().ring;
    int n = C.rank_of(q);
    CohomologyBasis out;
    out.q = q;
    out.alpha = alpha;
    FpMatrix dq = C.differential(q, alpha);
    FpMatrix dprev = C.differential(q - 1, alpha);
    if (n > 0 && C.rank_of(q + 1) > 0 && C.rank_of(q - 1) > 0 && !(dq * dprev).is_zero())
        throw StructuralError(fmt::format("d o d != 0 at {} in {}", alpha.to_string(), C.describe()));
    out.cocycles = rank_kernel_image(dq).kernel_basis;
    if (C.rank_of(q - 1) > 0)
        out.coboundaries = rank_kernel_image(dprev).image_basis;
    out.quotient = std::make_shared<QuotientSpace>(ring, n, out.cocycles, out.coboundaries);
    out.dim_Z = static_cast<int>(out.cocycles.size());
    out.dim_B = static_cast<int>(out.coboundaries.size());
    out.dim_H = out.quotient->dim();
    if (out.dim_H != out.dim_Z - out.dim_B)
        throw StructuralError("dim H != dim Z - dim B");
    return out;
}

CellDims cell_dims(const GradedComplex& C, const MultiIndex& alpha)
{
    int top = C.top_degree();
    std::vector<int> r(top + 2, 0);
    for (int q = 0; q < top; ++q)
        r[q] = rank(C.differential(q, alpha));
    CellDims out;
    for (int q = 0; q <= top; ++q) {
        int z = C.rank_of(q) - r[q];
        int b = q > 0 ? r[q - 1] : 0;
        out.Z.push_back(z);
        out.B.push_back(b);
        out.H.push_back(z - b);
    }
    return out;
}

std::optional<MultiIndex> target_cell(const ChainMap& f, int q, const MultiIndex& alpha)
{
    std::optional<MultiIndex> found;
    const auto& b = f.source->basis(q);
    for (size_t k = 0; k < b.size(); ++k) {
        LogForm img = f.apply(LogForm::term(f.source->chart().ring, f.source->form_window(), f.source->mode(), alpha,
                                            b[k], 1));
        for (auto& a : img.multidegrees()) {
            if (found && *found != a)
                throw StructuralError(fmt::format("map {} spreads cell {} over several cells", f.name, alpha.to_string()));
            found = a;
        }
    }
    return found;
}

FpMatrix map_matrix(const ChainMap& f, int q, const MultiIndex& alpha, const MultiIndex& target)
{
    const auto& b = f.source->basis(q);
    FpMatrix M(f.source->chart().ring, f.target->rank_of(q + f.shift), static_cast<int>(b.size()));
    for (size_t k = 0; k < b.size(); ++k) {
        LogForm img = f.apply(LogForm::term(f.source->chart().ring, f.source->form_window(), f.source->mode(), alpha,
                                            b[k], 1));
        if (img.degree() != q + f.shift)
            throw StructuralError(fmt::format("map {} has the wrong degree", f.name));
        for (auto& [key, c] : img.terms()) {
            if (key.first != target)
                throw StructuralError(fmt::format("map {} sends cell {} outside cell {}", f.name, alpha.to_string(),
                                                  target.to_string()));
            int row = f.target->index_of(key.second);
            if (row < 0)
                throw StructuralError(fmt::format("map {} produced an index set outside the target", f.name));
            M.add_to(row, static_cast<int>(k), c);
        }
    }
    return M;
}

void assert_chain_map(const ChainMap& f, int q, const MultiIndex& alpha)
{
    const auto& b = f.source->basis(q);
    for (Mask I : b) {
        LogForm x = LogForm::term(f.source->chart().ring, f.source->form_window(), f.source->mode(), alpha, I, 1);
        LogForm lhs = f.apply(f.source->d(x));
        LogForm rhs = f.target->d(f.apply(x));
        if (lhs.degree() != rhs.degree() || !(lhs - rhs).is_zero())
            throw StructuralError(
                fmt::format("{} is not a chain map on {} (degree {})", f.name, x.to_string(), q));
    }
}

namespace {

Vec random_combination(const ScalarRing& R, const std::vector<Vec>& vs, int n, std::mt19937& rng)
{
    Vec out(n, 0);
    std::uniform_int_distribution<std::uint32_t> dist(0, R.size() - 1);
    for (auto& v : vs) {
        Scalar c = dist(rng);
        for (int i = 0; i < n; ++i)
            out[i] = R.add(out[i], R.mul(c, v[i]));
    }
    return out;
}

Vec add_vec(const ScalarRing& R, const Vec& a, const Vec& b)
{
    Vec out(a.size());
    for (size_t i = 0; i < a.size(); ++i)
        out[i] = R.add(a[i], b[i]);
    return out;
}

std::uint32_t seed_of(const MultiIndex& a, int q)
{
    std::uint32_t h = 2166136261u ^ static_cast<std::uint32_t>(q);
    for (int i = 0; i < a.size(); ++i)
        h = (h ^ static_cast<std::uint32_t>(a[i])) * 16777619u;
    return h;
}

}  // namespace

InducedMap induced_on_H(const ChainMap& f, int q, const MultiIndex& alpha_source)
{
    assert_chain_map(f, q, alpha_source);
    if (q > 0)
        assert_chain_map(f, q - 1, alpha_source);
    const auto& R = *f.source->chart().ring;
    InducedMap out{alpha_source, target_cell(f, q, alpha_source), graded_cohomology(*f.source, q, alpha_source),
                   std::nullopt, FpMatrix(f.source->chart().ring, 0, 0)};
    int ncols = out.source_H.dim_H;
    if (!out.target_alpha) {
        out.matrix = FpMatrix(f.source->chart().ring, 0, ncols);
        return out;
    }
    int tq = q + f.shift;
    out.target_H = graded_cohomology(*f.target, tq, *out.target_alpha);
    FpMatrix M = map_matrix(f, q, alpha_source, *out.target_alpha);
    out.matrix = FpMatrix(f.source->chart().ring, out.target_H->dim_H, ncols);
    std::mt19937 rng(seed_of(alpha_source, q));
    int n = f.source->rank_of(q);
    const auto& reps = out.source_H.representatives();
    for (int k = 0; k < ncols; ++k) {
        auto cls = out.target_H->class_of(M.apply(reps[k]));
        if (!cls)
            throw StructuralError(fmt::format("{} does not send cocycles to cocycles", f.name));
        for (int r = 0; r < out.target_H->dim_H; ++r)
            out.matrix.set(r, k, (*cls)[r]);
        Vec other = add_vec(R, reps[k], random_combination(R, out.source_H.coboundaries, n, rng));
        auto cls2 = out.target_H->class_of(M.apply(other));
        if (!cls2 || *cls2 != *cls)
            throw StructuralError(fmt::format("{} depends on the representative", f.name));
    }
    return out;
}

void assert_exact(const ShortExactSequence& S, int q, const MultiIndex& alpha_b)
{
    const auto& B = *S.pi.source;
    MultiIndex alpha_a = S.a_cell_of_b(alpha_b);
    auto alpha_c = target_cell(S.pi, q, alpha_b);
    int qa = q - S.i.shift;
    FpMatrix iM = map_matrix(S.i, qa, alpha_a, alpha_b);
    int rc = S.pi.target->rank_of(q);
    FpMatrix piM = alpha_c ? map_matrix(S.pi, q, alpha_b, *alpha_c) : FpMatrix(B.chart().ring, rc, B.rank_of(q));
    int ri = rank(iM), rp = rank(piM);
    bool ok = ri == iM.cols() && rp == piM.rows() && ri + rp == B.rank_of(q);
    if (ok && iM.cols() > 0 && piM.rows() > 0)
        ok = (piM * iM).is_zero();
    if (!ok)
        throw StructuralError(fmt::format("sequence {} / {} is not exact at degree {} cell {}", S.i.name, S.pi.name, q,
                                          alpha_b.to_string()));
}

ConnectingMap connecting_map(const ShortExactSequence& S, int q, const MultiIndex& alpha_c)
{
    const auto& A = *S.i.source;
    const auto& B = *S.pi.source;
    const auto& C = *S.pi.target;
    const auto& R = *B.chart().ring;
    MultiIndex alpha_b = S.b_cell_of_c(alpha_c);
    MultiIndex alpha_a = S.a_cell_of_b(alpha_b);
    assert_exact(S, q, alpha_b);
    assert_exact(S, q + 1, alpha_b);
    int qa = q + 1 - S.i.shift;
    ConnectingMap out{graded_cohomology(C, q, alpha_c), graded_cohomology(A, qa, alpha_a),
                      FpMatrix(B.chart().ring, 0, 0)};
    FpMatrix piM = map_matrix(S.pi, q, alpha_b, alpha_c);
    FpMatrix iM = map_matrix(S.i, qa, alpha_a, alpha_b);
    FpMatrix dB = B.differential(q, alpha_b);
    auto lift_kernel = rank_kernel_image(piM).kernel_basis;
    out.matrix = FpMatrix(B.chart().ring, out.target_H.dim_H, out.source_H.dim_H);
    std::mt19937 rng(seed_of(alpha_c, q) ^ 0x9e3779b9u);
    auto class_of_lift = [&](const Vec& b) {
        auto a = solve(iM, dB.apply(b));
        if (!a)
            throw StructuralError("d of a lift does not come from the sub-complex");
        auto cls = out.target_H.class_of(*a);
        if (!cls)
            throw StructuralError("connecting element is not a cocycle");
        return *cls;
    };
    const auto& reps = out.source_H.representatives();
    for (int k = 0; k < out.source_H.dim_H; ++k) {
        auto b = solve(piM, reps[k]);
        if (!b)
            throw StructuralError("projection is not surjective on the cell");
        Vec cls = class_of_lift(*b);
        for (int r = 0; r < out.target_H.dim_H; ++r)
            out.matrix.set(r, k, cls[r]);
        for (int trial = 0; trial < 2; ++trial) {
            Vec b2 = add_vec(R, *b, random_combination(R, lift_kernel, B.rank_of(q), rng));
            if (class_of_lift(b2) != cls)
                throw StructuralError("connecting map depends on the lift");
        }
    }
    return out;
}

bool long_exact_sequence_exact(const ShortExactSequence& S, const MultiIndex& alpha_b, std::string* why)
{
    const auto& A = *S.i.source;
    const auto& B = *S.pi.source;
    const auto& C = *S.pi.target;
    MultiIndex alpha_a = S.a_cell_of_b(alpha_b);
    std::optional<MultiIndex> alpha_c;
    for (int q = 0; q <= B.top_degree() && !alpha_c; ++q)
        alpha_c = target_cell(S.pi, q, alpha_b);
    if (!alpha_c)
        throw StructuralError("projection vanishes on the whole cell");
    int top = B.top_degree() + 1;
    auto dimH = [&](const GradedComplex& X, int q, const MultiIndex& a) {
        if (q < 0 || q > X.top_degree())
            return 0;
        return graded_cohomology(X, q, a).dim_H;
    };
    auto rank_induced = [&](const ChainMap& f, int q, const MultiIndex& a) {
        if (q < 0 || q > f.source->top_degree())
            return 0;
        auto m = induced_on_H(f, q, a);
        return rank(m.matrix);
    };
    for (int q = -1; q <= top; ++q) {
        int ri_q = rank_induced(S.i, q - S.i.shift, alpha_a);
        int rp_q = rank_induced(S.pi, q, alpha_b);
        int rd_q = (q >= 0 && q <= C.top_degree()) ? rank(connecting_map(S, q, *alpha_c).matrix) : 0;
        int ri_next = rank_induced(S.i, q + 1 - S.i.shift, alpha_a);
        int hb = dimH(B, q, alpha_b);
        int hc = dimH(C, q, *alpha_c);
        int ha = dimH(A, q + 1 - S.i.shift, alpha_a);
        if (hb != ri_q + rp_q || hc != rp_q + rd_q || ha != rd_q + ri_next) {
            if (why)
                *why = fmt::format("long exact sequence fails at degree {} cell {} (H_B={} H_C={} H_A={})", q,
                                   alpha_b.to_string(), hb, hc, ha);
            return false;
        }
    }
    return true;
}

LogForm cartier_on_twist(const LogForm& w, const Divisor& D)
{
    int p = w.ring()->p();
    MultiIndex shift = D.as_index() - D.prime(p).as_index();
    LogForm shifted = LogForm::like(w, w.degree());
    for (auto& [k, c] : w.terms()) {
        if ((k.first + shift).total() > w.window())
            throw WindowError(fmt::format("twist shift of T^{} leaves the window", k.first.to_string()));
        shifted.add_term(k.first + shift, k.second, c);
    }
    return cartier_inverse(shifted, D);
}

std::vector<Scalar> fp_coordinates(const ScalarRing& R, const Vec& v)
{
    std::vector<Scalar> out;
    out.reserve(v.size() * R.s());
    for (Scalar c : v)
        for (int j = 0; j < R.s(); ++j) {
            out.push_back(c % R.p());
            c /= R.p();
        }
    return out;
}

namespace {

// The unique beta with p beta + (p-1) m = gamma, if any.
std::optional<MultiIndex> cartier_preimage(const GradedComplex& C, const MultiIndex& gamma)
{
    int p = C.chart().p;
    MultiIndex beta(gamma.size());
    for (int j = 0; j < gamma.size(); ++j) {
        int m = C.divisor().at(j);
        int t = gamma[j] + m;
        if (t % p != 0 || t / p < m)
            return std::nullopt;
        beta.set(j, t / p - m);
    }
    return beta;
}

LogForm cartier_truncated(const LogForm& x, const Divisor& D)
{
    LogForm out = LogForm::like(x, x.degree());
    int p = x.ring()->p();
    MultiIndex down = D.as_index() - D.prime(p).as_index();
    MultiIndex up = D.prime(p).scaled(p).as_index() - D.as_index();
    for (auto& a : x.multidegrees()) {
        // Parts whose image leaves the window are dropped.
        MultiIndex s = a + down;
        if (s.total() > x.window() || (s.scaled(p) + up).total() > x.window())
            continue;
        out = out + cartier_on_twist(x.homogeneous_part(a), D);
    }
    return out;
}

}  // namespace

SemilinearKernel semilinear_kernel(Scalar a, const GradedComplex& C, int q)
{
    if (a == 0)
        throw PreconditionError("semilinear kernel needs a nonzero scalar");
    if (C.mode() == FormMode::full)
        throw PreconditionError("semilinear kernel is defined on relative or special fiber complexes");
    const auto& R = *C.chart().ring;
    int p = R.p();
    SemilinearKernel out;
    MultiIndex zero(C.chart().nvars());
    for (auto& gamma : C.cells()) {
        bool fixed = C.divisor().is_zero() && gamma == zero;
        if (fixed) {
            // x = a * frob(x) coefficientwise: an F_p-linear equation on k.
            int s = R.s();
            FpMatrix L(make_ring(p), s, s);
            for (int j = 0; j < s; ++j) {
                Scalar t = R.pow(p, j);
                if (s == 1)
                    t = 1;
                Scalar img = R.sub(t, R.mul(a, R.frob(t)));
                auto digits = fp_coordinates(R, Vec{img});
                for (int i = 0; i < s; ++i)
                    L.set(i, j, digits[i]);
            }
            auto ker = rank_kernel_image(L).kernel_basis;
            for (auto& kv : ker) {
                Scalar c = 0, place = 1;
                for (int j = 0; j < s; ++j) {
                    c += kv[j] * place;
                    place *= p;
                }
                for (Mask I : C.basis(q)) {
                    LogForm w = C.zero_form(q);
                    w.add_term(gamma, I, c);
                    out.basis.push_back(w);
                }
            }
            if (!ker.empty())
                ++out.closed_orbits;
            continue;
        }
        if (cartier_preimage(C, gamma))
            continue;
        ++out.seeds;
        if (C.resonant(gamma))
            continue;
        auto H = graded_cohomology(C, q, gamma);
        if (H.dim_Z == 0)
            continue;
        bool closes = false;
        for (auto& z : H.cocycles) {
            for (int j = 0; j < R.s(); ++j) {
                Scalar t = R.s() == 1 ? 1 : R.pow(p, j);
                Vec zt(z.size());
                for (size_t i = 0; i < z.size(); ++i)
                    zt[i] = R.mul(t, z[i]);
                LogForm x = C.from_vector(zt, q, gamma);
                LogForm total = x;
                while (!x.is_zero()) {
                    LogForm next = LogForm::like(x, q);
                    try {
                        next = cartier_on_twist(x, C.divisor()).scaled(a);
                    } catch (const WindowError&) {
                        break;
                    }
                    closes = true;
                    total = total + next;
                    x = next;
                }
                out.basis.push_back(total);
            }
        }
        if (closes)
            ++out.closed_orbits;
    }
    out.dim = static_cast<int>(out.basis.size());
    if (out.dim > 0 && out.closed_orbits == 0) {
        out.conclusive = false;
        out.note = "no orbit closes inside the window";
    }
    return out;
}

std::optional<MultiIndex> semilinear_defect(Scalar a, const GradedComplex& C, const LogForm& x)
{
    LogForm dx = C.d(x);
    if (!dx.is_zero())
        return dx.multidegrees().front();
    LogForm y = x - cartier_truncated(x, C.divisor()).scaled(a);
    for (auto& gamma : y.multidegrees()) {
        if (!C.contains_cell(gamma))
            continue;
        int q = x.degree();
        if (q == 0) {
            if (!is_zero(C.to_vector(y, gamma)))
                return gamma;
            continue;
        }
        // Coboundaries only: the column space of d in degree q-1.
        FpMatrix dT = C.differential(q - 1, gamma).transpose();
        Echelon B(dT.ring(), dT.cols());
        for (int i = 0; i < dT.rows(); ++i)
            B.insert(dT.row(i));
        if (!B.contains(C.to_vector(y, gamma)))
            return gamma;
    }
    return std::nullopt;
}

}  // namespace mdr
