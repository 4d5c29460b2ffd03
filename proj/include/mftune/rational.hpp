#pragma once

#include "mftune/error.hpp"

#include <cstdint>
#include <numeric>

namespace mftune {

// Exact fraction over 128-bit integers. Set-cardinality ratios stay well inside
// the representable range once reduced; a genuine overflow throws so callers
// can fall back to floating point.
class Rational {
  public:
    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {}
    Rational(long long n, long long d) : num_(n), den_(d) { normalize(); }

    static Rational from_int128(__int128 n, __int128 d) {
        Rational r;
        r.num_ = n;
        r.den_ = d;
        r.normalize();
        return r;
    }

    Rational operator+(const Rational& o) const {
        __int128 g = gcd128(den_, o.den_);
        __int128 lhs = mul_checked(num_, o.den_ / g);
        __int128 rhs = mul_checked(o.num_, den_ / g);
        return from_int128(add_checked(lhs, rhs), mul_checked(den_, o.den_ / g));
    }
    Rational operator-(const Rational& o) const { return *this + Rational::from_int128(-o.num_, o.den_); }
    Rational operator*(const Rational& o) const {
        __int128 g1 = gcd128(num_, o.den_);
        __int128 g2 = gcd128(o.num_, den_);
        return from_int128(mul_checked(num_ / g1, o.num_ / g2), mul_checked(den_ / g2, o.den_ / g1));
    }
    Rational operator/(const Rational& o) const {
        if (o.num_ == 0) fail(ErrorKind::Numerical, "rational division by zero");
        return *this * Rational::from_int128(o.den_, o.num_);
    }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
    bool is_zero() const { return num_ == 0; }

  private:
    __int128 num_;
    __int128 den_; // > 0 after normalize()

    static __int128 gcd128(__int128 a, __int128 b) {
        if (a < 0) a = -a;
        if (b < 0) b = -b;
        while (b != 0) {
            __int128 t = a % b;
            a = b;
            b = t;
        }
        return a == 0 ? 1 : a;
    }
    static __int128 add_checked(__int128 a, __int128 b) {
        __int128 r;
        if (__builtin_add_overflow(a, b, &r)) fail(ErrorKind::Numerical, "rational overflow");
        return r;
    }
    static __int128 mul_checked(__int128 a, __int128 b) {
        __int128 r;
        if (__builtin_mul_overflow(a, b, &r)) fail(ErrorKind::Numerical, "rational overflow");
        return r;
    }
    void normalize() {
        if (den_ == 0) fail(ErrorKind::Numerical, "rational with zero denominator");
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        __int128 g = gcd128(num_, den_);
        num_ /= g;
        den_ /= g;
    }
};

} // namespace mftune
