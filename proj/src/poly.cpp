#include "mdr/poly.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "mdr/errors.hpp"

namespace mdr {

MultiIndex::MultiIndex(int nvars) : n_(nvars)
{
    if (nvars < 0 || nvars > kMaxVars)
        throw ConfigError(fmt::format("at most {} variables are supported", kMaxVars));
}

MultiIndex::MultiIndex(std::initializer_list<int> exps) : MultiIndex(std::vector<int>(exps)) {}

MultiIndex::MultiIndex(const std::vector<int>& exps) : MultiIndex(static_cast<int>(exps.size()))
{
    for (int i = 0; i < n_; ++i) {
        e_[i] = exps[i];
        total_ += exps[i];
    }
}

void MultiIndex::set(int i, int v)
{
    total_ += v - e_[i];
    e_[i] = v;
}

MultiIndex MultiIndex::operator+(const MultiIndex& o) const
{
    MultiIndex r(n_);
    for (int i = 0; i < n_; ++i)
        r.e_[i] = e_[i] + o.e_[i];
    r.total_ = total_ + o.total_;
    return r;
}

MultiIndex MultiIndex::operator-(const MultiIndex& o) const
{
    MultiIndex r(n_);
    for (int i = 0; i < n_; ++i)
        r.e_[i] = e_[i] - o.e_[i];
    r.total_ = total_ - o.total_;
    return r;
}

MultiIndex MultiIndex::scaled(int k) const
{
    MultiIndex r(n_);
    for (int i = 0; i < n_; ++i)
        r.e_[i] = e_[i] * k;
    r.total_ = total_ * k;
    return r;
}

bool MultiIndex::dominates(const MultiIndex& o) const
{
    for (int i = 0; i < n_; ++i)
        if (e_[i] < o.e_[i])
            return false;
    return true;
}

bool MultiIndex::nonnegative() const
{
    for (int i = 0; i < n_; ++i)
        if (e_[i] < 0)
            return false;
    return true;
}

std::string MultiIndex::to_string() const { return fmt::format("({})", fmt::join(to_vector(), ",")); }

namespace {

void monomials_rec(int nvars, int i, int left, MultiIndex& cur, std::vector<MultiIndex>& out)
{
    if (i == nvars) {
        out.push_back(cur);
        return;
    }
    for (int k = 0; k <= left; ++k) {
        cur.set(i, k);
        monomials_rec(nvars, i + 1, left - k, cur, out);
    }
    cur.set(i, 0);
}

void check_compatible(const TruncatedPoly& f, const TruncatedPoly& g)
{
    if (*f.ring() != *g.ring() || f.nvars() != g.nvars() || f.window() != g.window())
        throw ConfigError("truncated polynomials live in different rings or windows");
}

}  // namespace

std::vector<MultiIndex> monomials_up_to(int nvars, int window)
{
    std::vector<MultiIndex> out;
    if (window < 0)
        return out;
    MultiIndex cur(nvars);
    monomials_rec(nvars, 0, window, cur, out);
    return out;
}

TruncatedPoly::TruncatedPoly(RingPtr ring, int nvars, int window)
    : ring_(std::move(ring)), nvars_(nvars), window_(window)
{
    if (nvars < 0 || nvars > kMaxVars)
        throw ConfigError(fmt::format("at most {} variables are supported", kMaxVars));
}

TruncatedPoly TruncatedPoly::constant(RingPtr ring, int nvars, int window, Scalar c)
{
    TruncatedPoly f(std::move(ring), nvars, window);
    f.add_term(MultiIndex(nvars), c);
    return f;
}

TruncatedPoly TruncatedPoly::monomial(RingPtr ring, int window, const MultiIndex& a, Scalar c)
{
    TruncatedPoly f(std::move(ring), a.size(), window);
    f.add_term(a, c);
    return f;
}

Scalar TruncatedPoly::coeff(const MultiIndex& a) const
{
    auto it = std::lower_bound(terms_.begin(), terms_.end(), a,
                               [](const auto& t, const MultiIndex& x) { return t.first < x; });
    return it == terms_.end() || it->first != a ? 0 : it->second;
}

Scalar TruncatedPoly::constant_term() const { return coeff(MultiIndex(nvars_)); }

void TruncatedPoly::add_term(const MultiIndex& a, Scalar c)
{
    if (a.size() != nvars_)
        throw ConfigError("monomial has the wrong number of variables");
    if (!a.nonnegative())
        throw PreconditionError("negative exponent in a polynomial term");
    if (a.total() > window_ || c == 0)
        return;
    if (terms_.empty() || terms_.back().first < a) {
        terms_.emplace_back(a, c);
        return;
    }
    auto it = std::lower_bound(terms_.begin(), terms_.end(), a,
                               [](const auto& t, const MultiIndex& x) { return t.first < x; });
    if (it == terms_.end() || it->first != a) {
        terms_.insert(it, {a, c});
        return;
    }
    it->second = ring_->add(it->second, c);
    if (it->second == 0)
        terms_.erase(it);
}

int TruncatedPoly::min_degree() const
{
    int best = -1;
    for (auto& [a, c] : terms_)
        if (best < 0 || a.total() < best)
            best = a.total();
    return best;
}

TruncatedPoly TruncatedPoly::from_terms(RingPtr ring, int nvars, int window,
                                        std::vector<std::pair<MultiIndex, Scalar>> terms)
{
    TruncatedPoly r(std::move(ring), nvars, window);
    std::sort(terms.begin(), terms.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    const auto& R = *r.ring_;
    for (size_t i = 0; i < terms.size();) {
        const MultiIndex& a = terms[i].first;
        if (a.size() != nvars)
            throw ConfigError("monomial has the wrong number of variables");
        if (!a.nonnegative())
            throw PreconditionError("negative exponent in a polynomial term");
        Scalar c = 0;
        size_t j = i;
        for (; j < terms.size() && terms[j].first == a; ++j)
            c = R.add(c, terms[j].second);
        if (c != 0 && a.total() <= window)
            r.terms_.emplace_back(a, c);
        i = j;
    }
    return r;
}

TruncatedPoly TruncatedPoly::operator+(const TruncatedPoly& o) const
{
    check_compatible(*this, o);
    TruncatedPoly r(ring_, nvars_, window_);
    r.terms_.reserve(terms_.size() + o.terms_.size());
    auto i = terms_.begin(), j = o.terms_.begin();
    while (i != terms_.end() || j != o.terms_.end()) {
        if (j == o.terms_.end() || (i != terms_.end() && i->first < j->first)) {
            r.terms_.push_back(*i++);
        } else if (i == terms_.end() || j->first < i->first) {
            r.terms_.push_back(*j++);
        } else {
            Scalar c = ring_->add(i->second, j->second);
            if (c != 0)
                r.terms_.emplace_back(i->first, c);
            ++i;
            ++j;
        }
    }
    return r;
}

TruncatedPoly TruncatedPoly::operator-(const TruncatedPoly& o) const { return *this + (-o); }

TruncatedPoly TruncatedPoly::operator-() const
{
    TruncatedPoly r(ring_, nvars_, window_);
    r.terms_.reserve(terms_.size());
    for (auto& [a, c] : terms_)
        r.terms_.emplace_back(a, ring_->neg(c));
    return r;
}

TruncatedPoly TruncatedPoly::scaled(Scalar k) const
{
    TruncatedPoly r(ring_, nvars_, window_);
    for (auto& [a, c] : terms_)
        r.add_term(a, ring_->mul(c, k));
    return r;
}

TruncatedPoly TruncatedPoly::frobenius() const
{
    TruncatedPoly r(ring_, nvars_, window_);
    for (auto& [a, c] : terms_)
        r.add_term(a.scaled(ring_->p()), ring_->frob(c));
    return r;
}

TruncatedPoly TruncatedPoly::with_ring(RingPtr ring) const
{
    if (ring_->s() != 1 || ring->s() != 1)
        throw PreconditionError("coefficient reinterpretation needs s = 1");
    TruncatedPoly r(std::move(ring), nvars_, window_);
    for (auto& [a, c] : terms_)
        r.add_term(a, r.ring_->from_int(static_cast<long long>(c)));
    return r;
}

TruncatedPoly TruncatedPoly::with_window(int window) const
{
    TruncatedPoly r(ring_, nvars_, window);
    for (auto& [a, c] : terms_)
        r.add_term(a, c);
    return r;
}

std::string TruncatedPoly::to_string() const
{
    if (terms_.empty())
        return "0";
    std::string out;
    for (auto& [a, c] : terms_) {
        if (!out.empty())
            out += " + ";
        out += ring_->to_string(c);
        for (int i = 0; i < nvars_; ++i)
            if (a[i] > 0)
                out += a[i] == 1 ? fmt::format("*T{}", i) : fmt::format("*T{}^{}", i, a[i]);
    }
    return out;
}

bool TruncatedPoly::operator==(const TruncatedPoly& o) const
{
    return *ring_ == *o.ring_ && nvars_ == o.nvars_ && window_ == o.window_ && terms_ == o.terms_;
}

TruncatedPoly trunc_mul(const TruncatedPoly& f, const TruncatedPoly& g)
{
    check_compatible(f, g);
    const auto& R = *f.ring();
    std::vector<std::pair<MultiIndex, Scalar>> gt(g.terms().begin(), g.terms().end());
    std::stable_sort(gt.begin(), gt.end(),
                     [](const auto& x, const auto& y) { return x.first.total() < y.first.total(); });
    std::vector<std::pair<MultiIndex, Scalar>> prods;
    for (auto& [a, ca] : f.terms()) {
        int room = f.window() - a.total();
        for (auto& [b, cb] : gt) {
            if (b.total() > room)
                break;
            prods.emplace_back(a + b, R.mul(ca, cb));
        }
    }
    return TruncatedPoly::from_terms(f.ring(), f.nvars(), f.window(), std::move(prods));
}

TruncatedPoly trunc_pow(const TruncatedPoly& f, int k)
{
    TruncatedPoly r = TruncatedPoly::constant(f.ring(), f.nvars(), f.window(), 1);
    TruncatedPoly base = f;
    while (k > 0) {
        if (k & 1)
            r = trunc_mul(r, base);
        k >>= 1;
        if (k)
            base = trunc_mul(base, base);
    }
    return r;
}

namespace {

TruncatedPoly nilpotent_part(const TruncatedPoly& u)
{
    if (u.constant_term() != 1)
        throw PreconditionError("not a principal unit: constant term is not 1");
    TruncatedPoly f = u;
    f.add_term(MultiIndex(u.nvars()), u.ring()->neg(1));
    return f;
}

}  // namespace

TruncatedPoly principal_unit_inverse(const TruncatedPoly& u)
{
    TruncatedPoly f = nilpotent_part(u);
    TruncatedPoly neg_f = -f;
    TruncatedPoly result = TruncatedPoly::constant(u.ring(), u.nvars(), u.window(), 1);
    TruncatedPoly power = result;
    for (int k = 1; k <= u.window(); ++k) {
        power = trunc_mul(power, neg_f);
        if (power.is_zero())
            break;
        result = result + power;
    }
    return result;
}

TruncatedPoly pd_log(const TruncatedPoly& u, LogPolicy policy)
{
    const auto& R = *u.ring();
    if (R.n() != 2 || R.s() != 1)
        throw PreconditionError("pd_log expects coefficients in Z/p^2");
    int p = R.p();
    int N = u.window();
    TruncatedPoly f = nilpotent_part(u);
    TruncatedPoly result(u.ring(), u.nvars(), N);
    if (policy == LogPolicy::safe) {
        if (N >= p)
            throw PreconditionError(
                fmt::format("window {} too large for the safe log policy (needs window < p = {})", N, p));
        TruncatedPoly power = TruncatedPoly::constant(u.ring(), u.nvars(), N, 1);
        for (int k = 1; k <= N; ++k) {
            power = trunc_mul(power, f);
            if (power.is_zero())
                break;
            Scalar c = R.inv(R.from_int(k));
            if (k % 2 == 0)
                c = R.neg(c);
            result = result + power.scaled(c);
        }
        return result;
    }
    if (N >= p * p)
        throw PreconditionError(
            fmt::format("window {} too large for the extended log policy (needs window < p^2 = {})", N, p * p));
    auto R3 = make_ring(p, 3);
    TruncatedPoly f3 = f.with_ring(R3);
    TruncatedPoly power = TruncatedPoly::constant(R3, u.nvars(), N, 1);
    for (int k = 1; k <= N; ++k) {
        power = trunc_mul(power, f3);
        if (power.is_zero())
            break;
        TruncatedPoly term(u.ring(), u.nvars(), N);
        int j = k;
        if (k % p == 0) {
            TruncatedPoly q(nullptr, 0, 0);
            try {
                q = exact_divide_by_p(power);
            } catch (const DivisibilityViolation&) {
                throw PreconditionError(fmt::format(
                    "log series term f^{}/{} is not integral; window too large for the divisibility policy", k, k));
            }
            term = q;
            j = k / p;
        } else {
            term = power.with_ring(u.ring());
        }
        Scalar c = R.inv(R.from_int(j));
        if (k % 2 == 0)
            c = R.neg(c);
        result = result + term.scaled(c);
    }
    return result;
}

TruncatedPoly exact_divide_by_p(const TruncatedPoly& f)
{
    const auto& R = *f.ring();
    if (R.s() != 1 || R.n() < 2)
        throw PreconditionError("exact division by p needs Z/p^n coefficients with n >= 2");
    auto lower = make_ring(R.p(), R.n() - 1);
    TruncatedPoly r(lower, f.nvars(), f.window());
    for (auto& [a, c] : f.terms()) {
        if (c % R.p() != 0)
            throw DivisibilityViolation(
                fmt::format("coefficient {} of T^{} is not divisible by {}", c, a.to_string(), R.p()));
        r.add_term(a, lower->from_int(c / R.p()));
    }
    return r;
}

TruncatedPoly multiply_by_p(const TruncatedPoly& f)
{
    const auto& R = *f.ring();
    if (R.s() != 1)
        throw PreconditionError("multiplication into Z/p^{n+1} needs s = 1");
    auto higher = make_ring(R.p(), R.n() + 1);
    TruncatedPoly r(higher, f.nvars(), f.window());
    for (auto& [a, c] : f.terms())
        r.add_term(a, higher->from_int(static_cast<long long>(c) * R.p()));
    return r;
}

}  // namespace mdr
