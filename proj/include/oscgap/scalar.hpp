#pragma once

// Coefficient types for the symbol algebra. Complex doubles carry the
// floating computations; GaussRational (complex numbers with arbitrary
// precision rational parts) makes cohomological and Moyal identities exact.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <complex>
#include <ostream>
#include <string>

namespace oscgap {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;
using Complex = std::complex<double>;

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

struct GaussRational {
  Rational re{0};
  Rational im{0};

  GaussRational() = default;
  GaussRational(Rational r) : re(std::move(r)) {}  // NOLINT(implicit)
  GaussRational(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}
  GaussRational(int r) : re(r) {}  // NOLINT(implicit)

  GaussRational& operator+=(const GaussRational& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  GaussRational& operator-=(const GaussRational& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  GaussRational& operator*=(const GaussRational& o) {
    Rational r = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = std::move(r);
    return *this;
  }
  GaussRational& operator/=(const GaussRational& o) {
    const Rational n = o.re * o.re + o.im * o.im;
    Rational r = (re * o.re + im * o.im) / n;
    im = (im * o.re - re * o.im) / n;
    re = std::move(r);
    return *this;
  }
  friend GaussRational operator+(GaussRational a, const GaussRational& b) { return a += b; }
  friend GaussRational operator-(GaussRational a, const GaussRational& b) { return a -= b; }
  friend GaussRational operator*(GaussRational a, const GaussRational& b) { return a *= b; }
  friend GaussRational operator/(GaussRational a, const GaussRational& b) { return a /= b; }
  friend GaussRational operator-(const GaussRational& a) { return {-a.re, -a.im}; }
  friend bool operator==(const GaussRational& a, const GaussRational& b) {
    return a.re == b.re && a.im == b.im;
  }

  friend std::ostream& operator<<(std::ostream& os, const GaussRational& z) {
    return os << '(' << z.re << ',' << z.im << ')';
  }
};

/// Uniform interface over coefficient types used by the templated symbol code.
template <class S>
struct ScalarOps;

template <>
struct ScalarOps<Complex> {
  static Complex zero() { return {}; }
  static Complex one() { return {1.0, 0.0}; }
  static Complex imag_unit() { return {0.0, 1.0}; }
  static Complex from_rational(const Rational& q) { return {to_double(q), 0.0}; }
  static Complex from_int(long long n) { return {static_cast<double>(n), 0.0}; }
  static Complex conj(const Complex& z) { return std::conj(z); }
  static bool is_zero(const Complex& z) { return z == Complex{}; }
  static double magnitude(const Complex& z) { return std::abs(z); }
  static Complex to_complex(const Complex& z) { return z; }
  static constexpr bool exact = false;
};

template <>
struct ScalarOps<GaussRational> {
  static GaussRational zero() { return {}; }
  static GaussRational one() { return {Rational(1)}; }
  static GaussRational imag_unit() { return {Rational(0), Rational(1)}; }
  static GaussRational from_rational(const Rational& q) { return {q}; }
  static GaussRational from_int(long long n) { return {Rational(n)}; }
  static GaussRational conj(const GaussRational& z) { return {z.re, -z.im}; }
  static bool is_zero(const GaussRational& z) { return z.re == 0 && z.im == 0; }
  static double magnitude(const GaussRational& z) {
    return std::hypot(to_double(z.re), to_double(z.im));
  }
  static Complex to_complex(const GaussRational& z) { return {to_double(z.re), to_double(z.im)}; }
  static constexpr bool exact = true;
};

}  // namespace oscgap
