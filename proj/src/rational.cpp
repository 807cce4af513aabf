#include "jetcl/rational.hpp"

#include <ostream>
#include <stdexcept>

namespace jetcl {

Rational::Rational(long num, long den) {
    if (den == 0) throw std::domain_error("Rational: zero denominator");
    mpq_init(q_);
    mpq_set_si(q_, num, 1);
    mpz_set_si(mpq_denref(q_), den);
    mpq_canonicalize(q_);
}

Rational::Rational(const std::string& s) {
    mpq_init(q_);
    if (mpq_set_str(q_, s.c_str(), 10) != 0) {
        mpq_clear(q_);
        throw std::invalid_argument("Rational: cannot parse '" + s + "'");
    }
    if (mpz_sgn(mpq_denref(q_)) == 0) {
        mpq_clear(q_);
        throw std::domain_error("Rational: zero denominator in '" + s + "'");
    }
    mpq_canonicalize(q_);
}

Rational operator/(const Rational& a, const Rational& b) {
    if (b.is_zero()) throw std::domain_error("Rational: division by zero");
    Rational r;
    mpq_div(r.q_, a.q_, b.q_);
    return r;
}

Rational& Rational::operator/=(const Rational& b) {
    if (b.is_zero()) throw std::domain_error("Rational: division by zero");
    mpq_div(q_, q_, b.q_);
    return *this;
}

Rational Rational::pow(long e) const {
    if (e == 0) return Rational(1);
    if (is_zero()) {
        if (e < 0) throw std::domain_error("Rational: 0 to negative power");
        return Rational(0);
    }
    Rational base = e < 0 ? Rational(1) / *this : *this;
    unsigned long n = e < 0 ? -(unsigned long)e : (unsigned long)e;
    Rational r;
    mpz_pow_ui(mpq_numref(r.q_), mpq_numref(base.q_), n);
    mpz_pow_ui(mpq_denref(r.q_), mpq_denref(base.q_), n);
    // base canonical and pow preserves coprimality, but sign lives in num
    return r;
}

Rational Rational::numerator() const {
    Rational r;
    mpq_set_z(r.q_, mpq_numref(q_));
    return r;
}

Rational Rational::denominator() const {
    Rational r;
    mpq_set_z(r.q_, mpq_denref(q_));
    return r;
}

std::string Rational::str() const {
    char* raw = mpq_get_str(nullptr, 10, q_);
    std::string s(raw);
    void (*freefn)(void*, size_t);
    mp_get_memory_functions(nullptr, nullptr, &freefn);
    freefn(raw, s.size() + 1);
    return s;
}

std::ostream& operator<<(std::ostream& os, const Rational& r) {
    return os << r.str();
}

size_t Rational::hash() const {
    // cheap: fold limbs of numerator and denominator
    size_t h = 0x9e3779b97f4a7c15ull;
    auto fold = [&h](const mpz_t z) {
        h ^= (size_t)mpz_get_si(z) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    fold(mpq_numref(q_));
    fold(mpq_denref(q_));
    return h;
}

Rational rational_int_gcd(const Rational& a, const Rational& b) {
    Rational r;
    mpz_gcd(mpq_numref(r.q_), mpq_numref(a.q_), mpq_numref(b.q_));
    return r;
}

Rational rational_int_lcm(const Rational& a, const Rational& b) {
    Rational r;
    mpz_lcm(mpq_numref(r.q_), mpq_numref(a.q_), mpq_numref(b.q_));
    return r;
}

}  // namespace jetcl
