#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace ovl {

using cplx = std::complex<double>;

// value = mantissa * exp(log_scale), with 0.5 <= |mantissa| < 2 unless zero.
// Products of truncated exponentials and Gaussian weights live here until the
// very end so that e^{|z|} and e^{-|z|} never meet in double range.
class StabilizedValue {
public:
  StabilizedValue() = default;
  StabilizedValue(cplx m, double ls) : m_(m), ls_(ls) { normalize(); }
  explicit StabilizedValue(cplx v) : StabilizedValue(v, 0.0) {}
  explicit StabilizedValue(double v) : StabilizedValue(cplx{v, 0.0}, 0.0) {}

  // exp(log_value) without ever forming it.
  static StabilizedValue exp_of(cplx log_value) {
    return {std::polar(1.0, log_value.imag()), log_value.real()};
  }

  cplx mantissa() const { return m_; }
  double log_scale() const { return ls_; }
  bool is_zero() const { return m_ == cplx{}; }
  bool is_finite() const { return std::isfinite(m_.real()) && std::isfinite(m_.imag()) && std::isfinite(ls_); }

  cplx value() const { return is_zero() ? cplx{} : m_ * std::exp(ls_); }

  double log_abs() const {
    return is_zero() ? -std::numeric_limits<double>::infinity() : std::log(std::abs(m_)) + ls_;
  }

  StabilizedValue& operator*=(const StabilizedValue& o) {
    m_ *= o.m_;
    ls_ += o.ls_;
    normalize();
    return *this;
  }
  StabilizedValue& operator/=(const StabilizedValue& o) {
    m_ /= o.m_;
    ls_ -= o.ls_;
    normalize();
    return *this;
  }
  StabilizedValue& operator*=(cplx c) {
    m_ *= c;
    normalize();
    return *this;
  }
  StabilizedValue& operator/=(cplx c) {
    m_ /= c;
    normalize();
    return *this;
  }
  StabilizedValue& operator+=(const StabilizedValue& o) {
    if (o.is_zero()) return *this;
    if (is_zero()) return *this = o;
    if (ls_ >= o.ls_) {
      m_ += o.m_ * std::exp(o.ls_ - ls_);
    } else {
      m_ = m_ * std::exp(ls_ - o.ls_) + o.m_;
      ls_ = o.ls_;
    }
    normalize();
    return *this;
  }
  StabilizedValue& operator-=(const StabilizedValue& o) { return *this += -o; }

  StabilizedValue operator-() const {
    StabilizedValue r = *this;
    r.m_ = -r.m_;
    return r;
  }

  friend StabilizedValue operator*(StabilizedValue a, const StabilizedValue& b) { return a *= b; }
  friend StabilizedValue operator/(StabilizedValue a, const StabilizedValue& b) { return a /= b; }
  friend StabilizedValue operator+(StabilizedValue a, const StabilizedValue& b) { return a += b; }
  friend StabilizedValue operator-(StabilizedValue a, const StabilizedValue& b) { return a -= b; }
  friend StabilizedValue operator*(StabilizedValue a, cplx c) { return a *= c; }
  friend StabilizedValue operator*(cplx c, StabilizedValue a) { return a *= c; }
  friend StabilizedValue operator/(StabilizedValue a, cplx c) { return a /= c; }

private:
  void normalize() {
    const double a = std::abs(m_);
    if (a == 0.0) {
      m_ = {};
      ls_ = 0.0;
      return;
    }
    if (!std::isfinite(a)) return;
    int e = 0;
    std::frexp(a, &e);
    m_ = {std::ldexp(m_.real(), -e), std::ldexp(m_.imag(), -e)};
    ls_ += e * std::numbers::ln2;
  }

  cplx m_{};
  double ls_ = 0.0;
};

} // namespace ovl
