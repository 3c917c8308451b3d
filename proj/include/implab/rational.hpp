#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <complex>
#include <ostream>

namespace implab {

using Rational = boost::multiprecision::cpp_rational;

// exact complex rational; doubles convert without rounding
struct QComplex {
  Rational re{0}, im{0};

  QComplex() = default;
  QComplex(int r) : re(r) {}
  QComplex(Rational r, Rational i = 0) : re(std::move(r)), im(std::move(i)) {}
  explicit QComplex(std::complex<double> z) : re(from_double(z.real())), im(from_double(z.imag())) {}

  static Rational from_double(double v) {
    // every finite double is a dyadic rational
    Rational r(v);
    return r;
  }

  std::complex<double> to_complex() const {
    return {static_cast<double>(re), static_cast<double>(im)};
  }

  bool is_zero() const { return re == 0 && im == 0; }

  QComplex& operator+=(const QComplex& o) { re += o.re; im += o.im; return *this; }
  QComplex& operator-=(const QComplex& o) { re -= o.re; im -= o.im; return *this; }
  QComplex& operator*=(const QComplex& o) {
    Rational r = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = std::move(r);
    return *this;
  }
  QComplex& operator/=(const QComplex& o) {
    Rational den = o.re * o.re + o.im * o.im;
    Rational r = (re * o.re + im * o.im) / den;
    im = (im * o.re - re * o.im) / den;
    re = std::move(r);
    return *this;
  }
  friend QComplex operator+(QComplex a, const QComplex& b) { return a += b; }
  friend QComplex operator-(QComplex a, const QComplex& b) { return a -= b; }
  friend QComplex operator*(QComplex a, const QComplex& b) { return a *= b; }
  friend QComplex operator/(QComplex a, const QComplex& b) { return a /= b; }
  friend QComplex operator-(const QComplex& a) { return QComplex(-a.re, -a.im); }
  friend bool operator==(const QComplex& a, const QComplex& b) { return a.re == b.re && a.im == b.im; }
  friend std::ostream& operator<<(std::ostream& os, const QComplex& z) {
    return os << "(" << z.re << "," << z.im << ")";
  }
};

}  // namespace implab
