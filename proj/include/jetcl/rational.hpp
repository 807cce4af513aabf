#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <gmp.h>

namespace jetcl {

/// Arbitrary-precision rational number. Always stored in canonical form
/// (reduced fraction, positive denominator). Wraps GMP's mpq_t.
class Rational {
public:
    Rational() { mpq_init(q_); }
    Rational(long n) { mpq_init(q_); mpq_set_si(q_, n, 1); }
    /// num/den, any signs; throws std::domain_error if den == 0.
    Rational(long num, long den);
    explicit Rational(const std::string& s);

    Rational(const Rational& o) { mpq_init(q_); mpq_set(q_, o.q_); }
    Rational(Rational&& o) noexcept { mpq_init(q_); mpq_swap(q_, o.q_); }
    Rational& operator=(const Rational& o) {
        if (this != &o) mpq_set(q_, o.q_);
        return *this;
    }
    Rational& operator=(Rational&& o) noexcept {
        if (this != &o) mpq_swap(q_, o.q_);
        return *this;
    }
    ~Rational() { mpq_clear(q_); }

    bool is_zero() const { return mpq_sgn(q_) == 0; }
    bool is_one() const { return mpq_cmp_si(q_, 1, 1) == 0; }
    bool is_integer() const { return mpz_cmp_si(mpq_denref(q_), 1) == 0; }
    int sign() const { return mpq_sgn(q_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        Rational r;
        mpq_add(r.q_, a.q_, b.q_);
        return r;
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        Rational r;
        mpq_sub(r.q_, a.q_, b.q_);
        return r;
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        Rational r;
        mpq_mul(r.q_, a.q_, b.q_);
        return r;
    }
    /// Division; b must be nonzero.
    friend Rational operator/(const Rational& a, const Rational& b);
    Rational operator-() const {
        Rational r;
        mpq_neg(r.q_, q_);
        return r;
    }
    Rational& operator+=(const Rational& b) { mpq_add(q_, q_, b.q_); return *this; }
    Rational& operator-=(const Rational& b) { mpq_sub(q_, q_, b.q_); return *this; }
    Rational& operator*=(const Rational& b) { mpq_mul(q_, q_, b.q_); return *this; }
    Rational& operator/=(const Rational& b);

    friend bool operator==(const Rational& a, const Rational& b) {
        return mpq_equal(a.q_, b.q_) != 0;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return mpq_cmp(a.q_, b.q_) < 0;
    }
    friend bool operator<=(const Rational& a, const Rational& b) {
        return mpq_cmp(a.q_, b.q_) <= 0;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) { return b <= a; }

    /// Integer power; exponent may be negative (then *this must be nonzero).
    Rational pow(long e) const;

    Rational abs() const {
        Rational r;
        mpq_abs(r.q_, q_);
        return r;
    }

    /// Numerator as Rational (keeps sign).
    Rational numerator() const;
    /// Denominator as Rational (always positive).
    Rational denominator() const;

    double to_double() const { return mpq_get_d(q_); }
    /// Value as long; only meaningful for integers that fit.
    long to_long() const { return mpz_get_si(mpq_numref(q_)); }

    /// "n" for integers, "n/d" otherwise.
    std::string str() const;

    friend std::ostream& operator<<(std::ostream& os, const Rational& r);

    size_t hash() const;

    /// gcd of |a|,|b| for integer rationals (used by polynomial content).
    friend Rational rational_int_gcd(const Rational& a, const Rational& b);
    /// lcm of |a|,|b| for integer rationals.
    friend Rational rational_int_lcm(const Rational& a, const Rational& b);

private:
    mpq_t q_;
};

Rational rational_int_gcd(const Rational& a, const Rational& b);
Rational rational_int_lcm(const Rational& a, const Rational& b);

}  // namespace jetcl
