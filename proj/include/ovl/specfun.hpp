#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include "ovl/errors.hpp"
#include "ovl/stabilized.hpp"

namespace ovl::specfun {

inline constexpr double sqrt_2pi = 2.50662827463100050241576528481104525;
inline constexpr double inv_sqrt_pi = 0.564189583547756286948079451560772586;

inline bool is_nonpositive_integer(double a) { return a <= 0.0 && std::floor(a) == a; }

/// 1/Gamma(a). Entire; exactly zero at a = 0, -1, -2, ...
inline double reciprocal_gamma(double a) {
  if (is_nonpositive_integer(a)) return 0.0;
  if (a > 0.0) {
    if (a < 170.0) return 1.0 / std::tgamma(a);
    return std::exp(-std::lgamma(a));
  }
  if (a > -170.0) return 1.0 / std::tgamma(a);
  // reflection: 1/Gamma(a) = sin(pi a) Gamma(1-a) / pi
  return std::sin(std::numbers::pi * a) * std::exp(std::lgamma(1.0 - a)) / std::numbers::pi;
}

/// 1/Gamma(a) without underflow for large a.
inline StabilizedValue reciprocal_gamma_stabilized(double a) {
  if (is_nonpositive_integer(a)) return {};
  if (a > 0.0) return {cplx{1.0, 0.0}, -std::lgamma(a)};
  // sign of Gamma(a) for negative non-integer a is (-1)^ceil(-a)
  const double sign = (static_cast<long long>(std::ceil(-a)) % 2 == 0) ? 1.0 : -1.0;
  return {cplx{sign, 0.0}, -std::lgamma(a)};
}

namespace detail {

// log(1+u) - u
inline double log1pmx(double u) {
  if (std::abs(u) < 0.3) {
    double term = u, sum = 0.0;
    for (int k = 2; k < 200; ++k) {
      term *= -u;
      const double c = term / k;
      sum += c;
      if (std::abs(c) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return std::log1p(u) - u;
}

// x^a e^{-x} / Gamma(a), computed through log1pmx for large a so that the
// exponent does not lose digits to lgamma(a) ~ a log a.
inline double gamma_prefactor(double a, double x) {
  if (x == 0.0) return 0.0;
  if (a < 10.0) return std::exp(a * std::log(x) - x - std::lgamma(a));
  const double ia = 1.0 / a, ia2 = ia * ia;
  const double stirling =
      ia * (1.0 / 12 - ia2 * (1.0 / 360 - ia2 * (1.0 / 1260 - ia2 * (1.0 / 1680 - ia2 / 1188))));
  return std::exp(a * log1pmx(x / a - 1.0) + 0.5 * std::log(a / (2.0 * std::numbers::pi)) - stirling);
}

} // namespace detail

namespace detail {

inline void check_gamma_args(const char* name, double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0))
    throw validation_error(std::string(name) + ": need a > 0 and x >= 0, got a=" + std::to_string(a) +
                           " x=" + std::to_string(x));
}

// P(a,x) by its power series; used for x < a+1.
inline double gamma_p_series(double a, double x) {
  double term = 1.0, sum = 1.0;
  for (int n = 1; n < 1000000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return gamma_prefactor(a, x) * sum / a;
}

double gamma_q_cf(double a, double x);

} // namespace detail

/// Q(a,x) = Gamma(a,x)/Gamma(a) for a > 0, x >= 0.
inline double regularized_gamma_q(double a, double x) {
  detail::check_gamma_args("regularized_gamma_q", a, x);
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

/// P(a,x) = 1 - Q(a,x), computed without cancellation for x < a+1.
inline double regularized_gamma_p(double a, double x) {
  detail::check_gamma_args("regularized_gamma_p", a, x);
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

namespace detail {

inline double gamma_q_cf(double a, double x) {
  const double pre = gamma_prefactor(a, x);
  // modified Lentz on the Legendre continued fraction
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 1000000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return pre * h;
}

} // namespace detail

namespace detail {

struct WeidemanTable {
  static constexpr int terms = 40;
  std::array<double, terms> coeff{};
  double L = 0.0;
};

// Rational approximation of the Faddeeva function (Weideman 1994); the
// coefficients are the cosine transform of exp(-t^2)(L^2+t^2) on the mapped grid.
inline const WeidemanTable& weideman_table() {
  static const WeidemanTable table = [] {
    WeidemanTable w;
    constexpr int n = WeidemanTable::terms, m = 2 * n;
    w.L = std::sqrt(n / std::sqrt(2.0));
    std::array<double, 2 * m> f{};
    for (int k = -m + 1; k < m; ++k) {
      const double t = w.L * std::tan(0.5 * k * std::numbers::pi / m);
      f[k + m] = std::exp(-t * t) * (w.L * w.L + t * t);
    }
    for (int j = 1; j <= n; ++j) {
      double s = 0.0;
      for (int k = -m + 1; k < m; ++k) s += f[k + m] * std::cos(std::numbers::pi * j * k / m);
      w.coeff[j - 1] = s / (2.0 * m);
    }
    return w;
  }();
  return table;
}

} // namespace detail

/// Faddeeva function w(z) = e^{-z^2} erfc(-iz).
inline cplx faddeeva_w(cplx z) {
  if (z.imag() < 0.0) return 2.0 * std::exp(-z * z) - faddeeva_w(-z);
  const auto& t = detail::weideman_table();
  const cplx iz{-z.imag(), z.real()};
  const cplx den = t.L - iz;
  const cplx Z = (t.L + iz) / den;
  cplx p = 0.0;
  for (int j = detail::WeidemanTable::terms - 1; j >= 0; --j) p = p * Z + t.coeff[j];
  return 2.0 * p / (den * den) + inv_sqrt_pi / den;
}

inline cplx erfc(cplx z) {
  if (z.real() < 0.0) return 2.0 - erfc(-z);
  const cplx w = faddeeva_w(cplx{-z.imag(), z.real()});
  if (w == cplx{}) return {};
  return std::exp(-z * z + std::log(w));
}

/// F(x) = (1/sqrt(2 pi)) int_x^inf e^{-s^2/2} ds, continued to complex x.
inline cplx error_F(cplx x) {
  if (x.imag() == 0.0) return {0.5 * std::erfc(x.real() / std::numbers::sqrt2), 0.0};
  return 0.5 * erfc(x / std::numbers::sqrt2);
}

/// e^{x^2/2} F(x), finite for large positive Re x.
inline cplx error_F_scaled(cplx x) {
  const cplx arg = cplx{-x.imag(), x.real()} / std::numbers::sqrt2;
  if (x.real() >= 0.0) return 0.5 * faddeeva_w(arg);
  return std::exp(0.5 * x * x) - 0.5 * faddeeva_w(-arg);
}

/// L_rho(z) = F(z - rho/2) - F(z + rho/2).
inline cplx band_error_L(cplx z, double rho) {
  if (!(rho > 0.0)) throw validation_error("band_error_L: rho must be positive, got " + std::to_string(rho));
  // L is even in z; evaluate where F(z - rho/2) is the larger term.
  if (z.real() < 0.0) z = -z;
  return error_F(z - 0.5 * rho) - error_F(z + 0.5 * rho);
}

/// E_{1,b}(z) = sum_k z^k / Gamma(k+b).
inline cplx mittag_leffler(double b, cplx z) {
  if (!(b > 0.0)) throw validation_error("mittag_leffler: b must be positive, got " + std::to_string(b));
  const double r = std::abs(z);
  auto converged = [](const cplx& term, const cplx& sum, int& quiet) {
    quiet = std::abs(term) < 1e-16 * std::abs(sum) ? quiet + 1 : 0;
    return quiet >= 30;
  };
  if (r < 6.0 || r - std::abs(z.real()) < 6.0) {
    int quiet = 0;
    if (z.real() >= 0.0) {
      cplx term = reciprocal_gamma(b), sum = term;
      if (z == cplx{}) return sum;
      for (int k = 1; k < 100000; ++k) {
        term *= z / (k + b - 1.0);
        sum += term;
        if (converged(term, sum, quiet)) break;
      }
      return sum;
    }
    // Kummer: E_{1,b}(z) = e^z/Gamma(b) sum_k (b-1)/(b-1+k) (-z)^k/k!
    const cplx w = -z;
    cplx power = 1.0, sum = 1.0;
    for (int k = 1; k < 100000; ++k) {
      power *= w / static_cast<double>(k);
      const cplx term = b == 1.0 ? cplx{} : power * ((b - 1.0) / (b - 1.0 + k));
      sum += term;
      if (converged(term, sum, quiet)) break;
    }
    return std::exp(z) * sum * reciprocal_gamma(b);
  }
  // E_{1,b}(z) = z^{1-b} e^z - Gamma(b-1,z) e^z z^{1-b} / Gamma(b-1), the last
  // factor by the Legendre continued fraction.
  const double a = b - 1.0;
  constexpr double tiny = 1e-300;
  cplx bb = z + 1.0 - a, c = 1.0 / tiny, d = 1.0 / bb, h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    bb += 2.0;
    d = an * d + bb;
    if (std::abs(d) < tiny) d = tiny;
    c = bb + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const cplx delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp((1.0 - b) * std::log(z) + z) - reciprocal_gamma(a) * h;
}

/// e_n^{(alpha)}(z) = sum_{k=0}^n z^k / Gamma(k+alpha+1); n = -1 gives 0.
inline cplx trunc_exp(int n, double alpha, cplx z) {
  if (n < 0) return {};
  cplx term = reciprocal_gamma(alpha + 1.0), sum = term;
  for (int k = 1; k <= n; ++k) {
    term *= z / (k + alpha);
    sum += term;
  }
  return sum;
}

inline StabilizedValue trunc_exp_stabilized(int n, double alpha, cplx z) {
  if (n < 0) return {};
  StabilizedValue term = reciprocal_gamma_stabilized(alpha + 1.0), sum = term;
  for (int k = 1; k <= n; ++k) {
    term *= z / (k + alpha);
    sum += term;
  }
  return sum;
}

namespace detail {

inline StabilizedValue pole_term(double alpha, cplx x) {
  const StabilizedValue rg = reciprocal_gamma_stabilized(alpha);
  if (rg.is_zero()) return {};
  if (x == cplx{alpha, 0.0})
    throw numerical_error("frak_e: pole at x = alpha = " + std::to_string(alpha));
  return rg / (x - alpha);
}

} // namespace detail

/// e_n^{(alpha)}(z) + (1/Gamma(alpha)) / (x - alpha)
inline StabilizedValue frak_e_stabilized(int n, double alpha, cplx z, cplx x) {
  return trunc_exp_stabilized(n, alpha, z) + detail::pole_term(alpha, x);
}

inline cplx frak_e(int n, double alpha, cplx z, cplx x) {
  return frak_e_stabilized(n, alpha, z, x).value();
}

} // namespace ovl::specfun
