#include "mdr/logform.hpp"

#include <algorithm>
#include <bit>

#include <fmt/format.h>

#include "mdr/errors.hpp"

namespace mdr {

Chart make_chart(int p, int s, int d, int window, EisensteinData eis, LogPolicy policy)
{
    Chart c;
    c.p = p;
    c.s = s;
    c.d = d;
    c.window = window;
    c.eis = std::move(eis);
    c.log_policy = policy;
    c.ring = make_ring(p, 1, s);
    if (d < 1 || d + 2 > kMaxVars)
        throw ConfigError(fmt::format("dim must be between 1 and {}", kMaxVars - 2));
    if (window < p)
        throw ConfigError("window must be at least p");
    if (c.eis.e < 1 || static_cast<int>(c.eis.a.size()) != c.eis.e)
        throw ConfigError("eisenstein data needs e >= 1 and exactly e coefficients");
    for (Scalar a : c.eis.a)
        if (a >= c.ring->size())
            throw ConfigError("eisenstein coefficient outside the coefficient field");
    if (c.eis.a[0] == 0)
        throw ConfigError("eisenstein coefficient a_0 must be a unit");
    return c;
}

Divisor::Divisor(std::vector<int> mult) : mult_(std::move(mult))
{
    for (int m : mult_)
        if (m < 0)
            throw ConfigError("divisor multiplicities must be non-negative");
}

int Divisor::total() const
{
    int t = 0;
    for (int m : mult_)
        t += m;
    return t;
}

bool Divisor::dominates(const Divisor& o) const
{
    if (o.size() != size())
        throw PreconditionError("divisors on different charts");
    for (int i = 0; i < size(); ++i)
        if (mult_[i] < o.mult_[i])
            return false;
    return true;
}

Divisor Divisor::prime(int p) const
{
    std::vector<int> out(mult_.size());
    for (size_t i = 0; i < mult_.size(); ++i)
        out[i] = (mult_[i] + p - 1) / p;
    return Divisor(out);
}

Divisor Divisor::scaled(int k) const
{
    std::vector<int> out(mult_.size());
    for (size_t i = 0; i < mult_.size(); ++i)
        out[i] = mult_[i] * k;
    return Divisor(out);
}

MultiIndex Divisor::as_index() const
{
    MultiIndex a(size() + 1);
    for (int i = 0; i < size(); ++i)
        a.set(i + 1, mult_[i]);
    return a;
}

std::string Divisor::to_string() const { return fmt::format("({})", fmt::join(mult_, ",")); }

int mask_size(Mask m) { return std::popcount(m); }

std::vector<Mask> subsets_of_size(Mask universe, int q)
{
    std::vector<Mask> out;
    if (q < 0)
        return out;
    // Enumerate submasks of the universe in increasing numeric order.
    for (Mask m = 0;; m = (m - universe) & universe) {
        if (mask_size(m) == q)
            out.push_back(m);
        if (m == universe)
            break;
    }
    std::sort(out.begin(), out.end(), [](Mask a, Mask b) {
        // lexicographic on the sorted index lists
        while (a && b) {
            int la = std::countr_zero(a), lb = std::countr_zero(b);
            if (la != lb)
                return la < lb;
            a &= a - 1;
            b &= b - 1;
        }
        return a == 0 && b != 0;
    });
    return out;
}

Mask full_mask(int nvars) { return (Mask(1) << nvars) - 1; }

Mask relative_mask(int nvars) { return full_mask(nvars) & ~Mask(1); }

Mask allowed_mask(FormMode mode, int nvars)
{
    return mode == FormMode::relative ? relative_mask(nvars) : full_mask(nvars);
}

int insert_sign(int j, Mask I)
{
    if (I & (Mask(1) << j))
        return 0;
    return (mask_size(I & ((Mask(1) << j) - 1)) % 2) ? -1 : 1;
}

int merge_sign(Mask I, Mask J)
{
    if (I & J)
        return 0;
    int inversions = 0;
    for (Mask b = J; b; b &= b - 1) {
        int j = std::countr_zero(b);
        inversions += mask_size(I >> (j + 1));
    }
    return inversions % 2 ? -1 : 1;
}

namespace {

Scalar signed_scalar(const ScalarRing& R, int sign, Scalar c) { return sign < 0 ? R.neg(c) : c; }

void check_same_space(const LogForm& a, const LogForm& b)
{
    if (*a.ring() != *b.ring() || a.nvars() != b.nvars() || a.mode() != b.mode())
        throw ConfigError("log forms live on different charts or modes");
}

}  // namespace

LogForm::LogForm(RingPtr ring, int nvars, int window, int degree, FormMode mode)
    : ring_(std::move(ring)), nvars_(nvars), window_(window), q_(degree), mode_(mode)
{
    if (nvars < 1 || nvars > kMaxVars)
        throw ConfigError("bad number of form coordinates");
}

LogForm LogForm::like(const LogForm& o, int degree) { return LogForm(o.ring_, o.nvars_, o.window_, degree, o.mode_); }

LogForm LogForm::term(RingPtr ring, int window, FormMode mode, const MultiIndex& alpha, Mask I, Scalar c)
{
    LogForm w(std::move(ring), alpha.size(), window, mask_size(I), mode);
    w.add_term(alpha, I, c);
    return w;
}

void LogForm::add_term(const MultiIndex& alpha, Mask I, Scalar c)
{
    if (alpha.size() != nvars_)
        throw ConfigError("form term has the wrong number of coordinates");
    if (mask_size(I) != q_)
        throw PreconditionError(fmt::format("index set of size {} in a {}-form", mask_size(I), q_));
    if (I & ~allowed_mask(mode_, nvars_))
        throw PreconditionError("index set not allowed in this mode");
    if (!alpha.nonnegative())
        throw PreconditionError("negative exponent in a form coefficient");
    if (c == 0 || alpha.total() > window_)
        return;
    if (mode_ == FormMode::special_fiber && alpha[0] > 0)
        return;
    Key key{alpha, I};
    if (terms_.empty() || terms_.back().first < key) {
        terms_.emplace_back(key, c);
        return;
    }
    auto it = std::lower_bound(terms_.begin(), terms_.end(), key,
                               [](const auto& t, const Key& x) { return t.first < x; });
    if (it == terms_.end() || it->first != key) {
        terms_.insert(it, {key, c});
        return;
    }
    it->second = ring_->add(it->second, c);
    if (it->second == 0)
        terms_.erase(it);
}

void LogForm::add_terms(std::vector<std::pair<Key, Scalar>> terms)
{
    Mask allowed = allowed_mask(mode_, nvars_);
    for (auto& [k, c] : terms) {
        if (k.first.size() != nvars_)
            throw ConfigError("form term has the wrong number of coordinates");
        if (mask_size(k.second) != q_)
            throw PreconditionError(fmt::format("index set of size {} in a {}-form", mask_size(k.second), q_));
        if (k.second & ~allowed)
            throw PreconditionError("index set not allowed in this mode");
        if (!k.first.nonnegative())
            throw PreconditionError("negative exponent in a form coefficient");
    }
    if (terms.size() * 8 < terms_.size()) {
        for (auto& [k, c] : terms)
            add_term(k.first, k.second, c);
        return;
    }
    for (auto& t : terms_)
        terms.push_back(t);
    std::sort(terms.begin(), terms.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<std::pair<Key, Scalar>> merged;
    for (size_t i = 0; i < terms.size();) {
        const Key& k = terms[i].first;
        Scalar c = 0;
        size_t j = i;
        for (; j < terms.size() && terms[j].first == k; ++j)
            c = ring_->add(c, terms[j].second);
        bool dropped = c == 0 || k.first.total() > window_ || (mode_ == FormMode::special_fiber && k.first[0] > 0);
        if (!dropped)
            merged.emplace_back(k, c);
        i = j;
    }
    terms_ = std::move(merged);
}

Scalar LogForm::coeff(const MultiIndex& alpha, Mask I) const
{
    Key key{alpha, I};
    auto it = std::lower_bound(terms_.begin(), terms_.end(), key,
                               [](const auto& t, const Key& x) { return t.first < x; });
    return it == terms_.end() || it->first != key ? 0 : it->second;
}

std::vector<MultiIndex> LogForm::multidegrees() const
{
    std::vector<MultiIndex> out;
    for (auto& [k, c] : terms_)
        if (out.empty() || out.back() != k.first)
            out.push_back(k.first);
    return out;
}

LogForm LogForm::homogeneous_part(const MultiIndex& alpha) const
{
    LogForm r = like(*this, q_);
    for (auto& [k, c] : terms_)
        if (k.first == alpha)
            r.terms_.emplace_back(k, c);
    return r;
}

LogForm LogForm::operator+(const LogForm& o) const
{
    check_same_space(*this, o);
    if (o.q_ != q_)
        throw PreconditionError("adding forms of different degrees");
    LogForm r = *this;
    r.add_terms({o.terms_.begin(), o.terms_.end()});
    return r;
}

LogForm LogForm::operator-(const LogForm& o) const { return *this + (-o); }

LogForm LogForm::operator-() const
{
    LogForm r = like(*this, q_);
    r.terms_.reserve(terms_.size());
    for (auto& [k, c] : terms_)
        r.terms_.emplace_back(k, ring_->neg(c));
    return r;
}

LogForm LogForm::scaled(Scalar s) const
{
    LogForm r = like(*this, q_);
    for (auto& [k, c] : terms_)
        r.add_term(k.first, k.second, ring_->mul(c, s));
    return r;
}

LogForm LogForm::with_window(int window) const
{
    LogForm r(ring_, nvars_, window, q_, mode_);
    for (auto& [k, c] : terms_)
        r.add_term(k.first, k.second, c);
    return r;
}

LogForm LogForm::with_ring(RingPtr ring) const
{
    if (ring_->s() != 1 || ring->s() != 1)
        throw PreconditionError("coefficient reinterpretation needs s = 1");
    LogForm r(ring, nvars_, window_, q_, mode_);
    for (auto& [k, c] : terms_)
        r.add_term(k.first, k.second, ring->from_int(static_cast<long long>(c)));
    return r;
}

std::string LogForm::to_string() const
{
    if (terms_.empty())
        return "0";
    std::string out;
    for (auto& [k, c] : terms_) {
        if (!out.empty())
            out += " + ";
        out += ring_->to_string(c);
        for (int i = 0; i < nvars_; ++i)
            if (k.first[i] > 0)
                out += k.first[i] == 1 ? fmt::format("*T{}", i) : fmt::format("*T{}^{}", i, k.first[i]);
        for (Mask b = k.second; b; b &= b - 1)
            out += fmt::format(" dlogT{}", std::countr_zero(b));
    }
    return out;
}

bool LogForm::operator==(const LogForm& o) const
{
    return *ring_ == *o.ring_ && nvars_ == o.nvars_ && q_ == o.q_ && mode_ == o.mode_ && terms_ == o.terms_;
}

LogForm wedge(const LogForm& w, const LogForm& e)
{
    check_same_space(w, e);
    const auto& R = *w.ring();
    LogForm r(w.ring(), w.nvars(), std::min(w.window(), e.window()), w.degree() + e.degree(), w.mode());
    std::vector<std::pair<LogForm::Key, Scalar>> terms;
    for (auto& [kw, cw] : w.terms())
        for (auto& [ke, ce] : e.terms()) {
            int s = merge_sign(kw.second, ke.second);
            if (s == 0)
                continue;
            terms.push_back({{kw.first + ke.first, kw.second | ke.second}, signed_scalar(R, s, R.mul(cw, ce))});
        }
    r.add_terms(std::move(terms));
    return r;
}

LogForm poly_times(const TruncatedPoly& f, const LogForm& w)
{
    if (*f.ring() != *w.ring() || f.nvars() != w.nvars())
        throw ConfigError("polynomial and form live on different charts");
    const auto& R = *w.ring();
    LogForm r = LogForm::like(w, w.degree());
    std::vector<std::pair<LogForm::Key, Scalar>> terms;
    for (auto& [a, c] : f.terms())
        for (auto& [k, cw] : w.terms())
            if (a.total() + k.first.total() <= w.window())
                terms.push_back({{a + k.first, k.second}, R.mul(c, cw)});
    r.add_terms(std::move(terms));
    return r;
}

LogForm form_from_poly(const TruncatedPoly& f, Mask I, FormMode mode)
{
    LogForm r(f.ring(), f.nvars(), f.window(), mask_size(I), mode);
    for (auto& [a, c] : f.terms())
        r.add_term(a, I, c);
    return r;
}

LogForm dlog_coordinate(RingPtr ring, int nvars, int window, int j, FormMode mode)
{
    LogForm r(std::move(ring), nvars, window, 1, mode);
    if (mode == FormMode::relative && j == 0)
        return r;
    r.add_term(MultiIndex(nvars), Mask(1) << j, 1);
    return r;
}

LogForm dlog_unit(const TruncatedPoly& u, FormMode mode)
{
    const auto& R = *u.ring();
    Scalar c0 = u.constant_term();
    if (!R.is_unit(c0))
        throw PreconditionError("dlog of a non-unit");
    Scalar c0inv = R.inv(c0);
    TruncatedPoly inv = principal_unit_inverse(u.scaled(c0inv)).scaled(c0inv);
    LogForm euler(u.ring(), u.nvars(), u.window(), 1, mode);
    Mask allowed = allowed_mask(mode, u.nvars());
    for (auto& [a, c] : u.terms())
        for (int j = 0; j < u.nvars(); ++j)
            if (a[j] > 0 && (allowed >> j & 1))
                euler.add_term(a, Mask(1) << j, R.mul(c, R.from_int(a[j])));
    return poly_times(inv, euler);
}

LogForm dlog_monomial(RingPtr ring, int window, const std::vector<int>& k, FormMode mode)
{
    int nvars = static_cast<int>(k.size());
    LogForm r(ring, nvars, window, 1, mode);
    Mask allowed = allowed_mask(mode, nvars);
    for (int j = 0; j < nvars; ++j)
        if (k[j] != 0 && (allowed >> j & 1))
            r.add_term(MultiIndex(nvars), Mask(1) << j, ring->from_int(k[j]));
    return r;
}

LogForm to_mode(const LogForm& w, FormMode mode)
{
    LogForm r(w.ring(), w.nvars(), w.window(), w.degree(), mode);
    Mask allowed = allowed_mask(mode, w.nvars());
    for (auto& [k, c] : w.terms())
        if ((k.second & ~allowed) == 0)
            r.add_term(k.first, k.second, c);
    return r;
}

LogForm differential_twisted(const LogForm& w, const Divisor& D)
{
    const auto& R = *w.ring();
    if (D.size() != w.nvars() - 1)
        throw PreconditionError("divisor and form live on different charts");
    LogForm r = LogForm::like(w, w.degree() + 1);
    Mask allowed = allowed_mask(w.mode(), w.nvars());
    for (auto& [k, c] : w.terms())
        for (int j = 0; j < w.nvars(); ++j) {
            if (!(allowed >> j & 1))
                continue;
            int s = insert_sign(j, k.second);
            if (s == 0)
                continue;
            Scalar v = R.from_int(static_cast<long long>(k.first[j]) + D.at(j));
            if (v == 0)
                continue;
            r.add_term(k.first, k.second | (Mask(1) << j), signed_scalar(R, s, R.mul(v, c)));
        }
    return r;
}

LogForm differential(const LogForm& w) { return differential_twisted(w, Divisor(std::vector<int>(w.nvars() - 1, 0))); }

LogForm residue(const LogForm& w, int mu, const Divisor& level)
{
    if (mu < 0 || mu >= w.nvars() || !(allowed_mask(w.mode(), w.nvars()) >> mu & 1))
        throw PreconditionError(fmt::format("T{} is not a log coordinate of this complex", mu));
    if (level.size() != w.nvars() - 1)
        throw PreconditionError("divisor and form live on different charts");
    const auto& R = *w.ring();
    LogForm r = LogForm::like(w, w.degree() - 1);
    if (w.degree() == 0)
        return r;
    Mask bit = Mask(1) << mu;
    for (auto& [k, c] : w.terms()) {
        if (k.first[mu] != 0)
            throw PreconditionError(fmt::format("residue along T{} needs coefficients taken mod T{}", mu, mu));
        if (!(k.second & bit))
            continue;
        Mask rest = k.second & ~bit;
        r.add_term(k.first, rest, signed_scalar(R, insert_sign(mu, rest), c));
    }
    return r;
}

LogForm frobenius_pullback(const LogForm& w)
{
    const auto& R = *w.ring();
    LogForm r = LogForm::like(w, w.degree());
    for (auto& [k, c] : w.terms()) {
        if (R.p() * k.first.total() > w.window())
            throw WindowError(fmt::format("Frobenius of T^{} leaves the window {}", k.first.to_string(), w.window()));
        r.add_term(k.first.scaled(R.p()), k.second, R.frob(c));
    }
    return r;
}

LogForm cartier_inverse(const LogForm& w, const Divisor& D)
{
    const auto& R = *w.ring();
    int p = R.p();
    MultiIndex shift = D.prime(p).scaled(p).as_index() - D.as_index();
    LogForm r = LogForm::like(w, w.degree());
    for (auto& [k, c] : w.terms()) {
        MultiIndex target = k.first.scaled(p) + shift;
        if (target.total() > w.window())
            throw WindowError(
                fmt::format("inverse Cartier image of T^{} leaves the window {}", k.first.to_string(), w.window()));
        r.add_term(target, k.second, R.frob(c));
    }
    if (!differential_twisted(r, D).is_zero())
        throw StructuralError(fmt::format("inverse Cartier image {} is not closed", r.to_string()));
    return r;
}

RelativeSplit relative_projection(const LogForm& w)
{
    if (w.mode() == FormMode::relative)
        return {w, LogForm(w.ring(), w.nvars(), w.window(), w.degree() - 1, FormMode::relative)};
    RelativeSplit out{LogForm(w.ring(), w.nvars(), w.window(), w.degree(), FormMode::relative),
                      LogForm(w.ring(), w.nvars(), w.window(), w.degree() - 1, FormMode::relative)};
    for (auto& [k, c] : w.terms()) {
        if (k.second & 1)
            out.res.add_term(k.first, k.second & ~Mask(1), c);
        else
            out.rel.add_term(k.first, k.second, c);
    }
    return out;
}

}  // namespace mdr
