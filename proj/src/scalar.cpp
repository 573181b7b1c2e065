#include "mdr/scalar.hpp"

#include <fmt/format.h>

#include "mdr/errors.hpp"

namespace mdr {

namespace {

std::vector<int> digits_of(std::uint32_t a, int p, int s)
{
    std::vector<int> c(s);
    for (int i = 0; i < s; ++i) {
        c[i] = static_cast<int>(a % p);
        a /= p;
    }
    return c;
}

std::uint32_t from_digits(const std::vector<int>& c, int p)
{
    std::uint32_t a = 0;
    for (size_t i = c.size(); i-- > 0;)
        a = a * p + static_cast<std::uint32_t>(c[i]);
    return a;
}

// Remainder of f modulo the monic g over F_p, coefficients constant term first.
std::vector<int> poly_rem(std::vector<int> f, const std::vector<int>& g, int p)
{
    int dg = static_cast<int>(g.size()) - 1;
    for (int i = static_cast<int>(f.size()) - 1; i >= dg; --i) {
        int c = f[i] % p;
        if (c == 0)
            continue;
        for (int j = 0; j <= dg; ++j)
            f[i - dg + j] = ((f[i - dg + j] - c * g[j]) % p + p) % p;
    }
    f.resize(std::max(dg, 0));
    return f;
}

bool is_irreducible(const std::vector<int>& f, int p)
{
    int deg = static_cast<int>(f.size()) - 1;
    for (int dg = 1; dg <= deg / 2; ++dg) {
        std::uint32_t count = 1;
        for (int i = 0; i < dg; ++i)
            count *= p;
        for (std::uint32_t code = 0; code < count; ++code) {
            std::vector<int> g = digits_of(code, p, dg);
            g.push_back(1);
            auto r = poly_rem(f, g, p);
            bool zero = true;
            for (int c : r)
                zero = zero && c == 0;
            if (zero)
                return false;
        }
    }
    return true;
}

}  // namespace

bool is_prime(long long v)
{
    if (v < 2)
        return false;
    for (long long d = 2; d * d <= v; ++d)
        if (v % d == 0)
            return false;
    return true;
}

ScalarRing::ScalarRing(int p, int n, int s) : p_(p), n_(n), s_(s)
{
    if (!is_prime(p) || p < 3)
        throw ConfigError("p must be an odd prime");
    if (n < 1 || s < 1)
        throw ConfigError("ring exponents must be positive");
    if (n > 1 && s > 1)
        throw ConfigError("Z/p^n coefficients are only supported over the prime field (s = 1)");
    int e = std::max(n, s);
    std::uint64_t sz = 1;
    for (int i = 0; i < e; ++i)
        sz *= static_cast<std::uint64_t>(p);
    if (sz > (1u << 20))
        throw ConfigError("coefficient ring too large");
    size_ = static_cast<std::uint32_t>(sz);

    if (s_ > 1) {
        std::uint32_t count = size_;
        for (std::uint32_t code = 0; code < count; ++code) {
            std::vector<int> f = digits_of(code, p_, s_);
            f.push_back(1);
            if (f[0] != 0 && is_irreducible(f, p_)) {
                modulus_ = f;
                break;
            }
        }
        if (size_ <= 1024) {
            mul_table_.resize(static_cast<size_t>(size_) * size_);
            for (std::uint32_t a = 0; a < size_; ++a)
                for (std::uint32_t b = 0; b < size_; ++b)
                    mul_table_[static_cast<size_t>(a) * size_ + b] = field_mul_slow(a, b);
        }
    }
}

Scalar ScalarRing::from_int(long long v) const
{
    long long m = s_ > 1 ? p_ : static_cast<long long>(size_);
    v %= m;
    if (v < 0)
        v += m;
    return static_cast<Scalar>(v);
}

Scalar ScalarRing::add(Scalar a, Scalar b) const
{
    if (s_ == 1) {
        Scalar c = a + b;
        return c >= size_ ? c - size_ : c;
    }
    Scalar r = 0, place = 1;
    for (int i = 0; i < s_; ++i) {
        Scalar da = a % p_, db = b % p_;
        r += ((da + db) % p_) * place;
        place *= p_;
        a /= p_;
        b /= p_;
    }
    return r;
}

Scalar ScalarRing::neg(Scalar a) const
{
    if (s_ == 1)
        return a == 0 ? 0 : size_ - a;
    Scalar r = 0, place = 1;
    for (int i = 0; i < s_; ++i) {
        Scalar da = a % p_;
        r += ((p_ - da) % p_) * place;
        place *= p_;
        a /= p_;
    }
    return r;
}

Scalar ScalarRing::sub(Scalar a, Scalar b) const { return add(a, neg(b)); }

Scalar ScalarRing::field_mul_slow(Scalar a, Scalar b) const
{
    auto ca = digits_of(a, p_, s_);
    auto cb = digits_of(b, p_, s_);
    std::vector<int> prod(2 * s_ - 1, 0);
    for (int i = 0; i < s_; ++i)
        for (int j = 0; j < s_; ++j)
            prod[i + j] = (prod[i + j] + ca[i] * cb[j]) % p_;
    auto r = poly_rem(prod, modulus_, p_);
    r.resize(s_, 0);
    return from_digits(r, p_);
}

Scalar ScalarRing::mul(Scalar a, Scalar b) const
{
    if (s_ == 1)
        return static_cast<Scalar>((static_cast<std::uint64_t>(a) * b) % size_);
    if (!mul_table_.empty())
        return mul_table_[static_cast<size_t>(a) * size_ + b];
    return field_mul_slow(a, b);
}

Scalar ScalarRing::pow(Scalar a, std::uint64_t e) const
{
    Scalar r = 1;
    while (e) {
        if (e & 1)
            r = mul(r, a);
        a = mul(a, a);
        e >>= 1;
    }
    return r;
}

bool ScalarRing::is_unit(Scalar a) const
{
    if (s_ > 1 || n_ == 1)
        return a != 0;
    return a % p_ != 0;
}

Scalar ScalarRing::inv(Scalar a) const
{
    if (!is_unit(a))
        throw PreconditionError(fmt::format("{} is not a unit", to_string(a)));
    if (s_ > 1)
        return pow(a, size_ - 2);
    long long t = 0, nt = 1, r = size_, nr = a;
    while (nr != 0) {
        long long q = r / nr;
        long long tmp = t - q * nt;
        t = nt;
        nt = tmp;
        tmp = r - q * nr;
        r = nr;
        nr = tmp;
    }
    return from_int(t);
}

Scalar ScalarRing::frob(Scalar a) const { return s_ == 1 ? a : pow(a, p_); }

int ScalarRing::valuation(Scalar a) const
{
    if (a == 0)
        return s_ > 1 ? 1 : n_;
    if (s_ > 1)
        return 0;
    int v = 0;
    while (a % p_ == 0) {
        a /= p_;
        ++v;
    }
    return v;
}

Scalar ScalarRing::divide_by_p(Scalar a) const
{
    if (s_ > 1 || n_ == 1)
        throw PreconditionError("division by p needs Z/p^n with n >= 2");
    if (a % p_ != 0)
        throw DivisibilityViolation(fmt::format("{} is not divisible by {}", a, p_));
    return a / p_;
}

std::string ScalarRing::to_string(Scalar a) const
{
    if (s_ == 1)
        return std::to_string(a);
    auto c = digits_of(a, p_, s_);
    std::string out;
    for (int i = s_ - 1; i >= 0; --i) {
        if (c[i] == 0)
            continue;
        if (!out.empty())
            out += "+";
        if (i == 0)
            out += std::to_string(c[i]);
        else
            out += (c[i] == 1 ? "" : std::to_string(c[i])) + (i == 1 ? "t" : "t^" + std::to_string(i));
    }
    return out.empty() ? "0" : out;
}

RingPtr make_ring(int p, int n, int s) { return std::make_shared<const ScalarRing>(p, n, s); }

}  // namespace mdr
