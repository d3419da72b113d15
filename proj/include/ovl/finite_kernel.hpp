#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ovl/errors.hpp"
#include "ovl/holomorphic.hpp"
#include "ovl/specfun.hpp"
#include "ovl/stabilized.hpp"

namespace ovl::finite {

struct ModelParams {
  int N = 2;
  double alpha = 0.0;
  double sigma_sq = 1.0;

  void validate() const {
    if (N < 2) throw validation_error("N must be >= 2, got " + std::to_string(N));
    if (!(alpha > -1.0)) throw validation_error("alpha must be > -1, got " + std::to_string(alpha));
    if (!(sigma_sq > 0.0)) throw validation_error("sigma_sq must be > 0, got " + std::to_string(sigma_sq));
  }
};

struct ConditionPoint {
  cplx lambda;
  cplx lambda_bar;

  static ConditionPoint physical(cplx l) { return {l, std::conj(l)}; }
  bool is_physical(double tol = 0.0) const { return std::abs(lambda_bar - std::conj(lambda)) <= tol; }
  cplx x() const { return lambda * lambda_bar; }
};

struct KernelMatrix {
  Eigen::MatrixXcd entries;
  cplx det_value{1.0, 0.0};

  static KernelMatrix from(Eigen::MatrixXcd m) {
    KernelMatrix k;
    k.det_value = m.size() == 0 ? cplx{1.0, 0.0} : m.partialPivLu().determinant();
    k.entries = std::move(m);
    return k;
  }
};

namespace detail {

inline bool is_integer(double a) { return std::floor(a) == a; }

// (b)^alpha on the principal branch.
inline StabilizedValue power(cplx b, double alpha) {
  if (alpha == 0.0) return StabilizedValue(1.0);
  if (b == cplx{}) {
    if (alpha > 0.0) return {};
    throw validation_error("power: 0 raised to non-positive alpha");
  }
  if (!is_integer(alpha) && b.imag() == 0.0 && b.real() < 0.0)
    throw validation_error("branch cut: base on the negative real axis with non-integer alpha");
  return StabilizedValue::exp_of(alpha * std::log(b));
}

inline StabilizedValue int_power(cplx b, int n) {
  if (n == 0) return StabilizedValue(1.0);
  if (b == cplx{}) return {};
  const double lr = std::log(std::abs(b)), th = std::arg(b);
  return StabilizedValue::exp_of({n * lr, n * th});
}

} // namespace detail

inline StabilizedValue weight_omega_stabilized(cplx z, cplx w, cplx u, cplx v, double alpha) {
  return (1.0 + (z - u) * (w - v)) * detail::power(z * w, alpha) * StabilizedValue::exp_of(-z * w);
}

/// (1+(z-u)(w-v)) (zw)^alpha e^{-zw}
inline cplx weight_omega(cplx z, cplx w, cplx u, cplx v, double alpha) {
  return weight_omega_stabilized(z, w, u, v, alpha).value();
}

inline StabilizedValue weight_varpi_stabilized(cplx z, cplx w, double alpha) {
  return detail::power(z * w, alpha) * StabilizedValue::exp_of(-0.5 * (std::norm(z) + std::norm(w)));
}

/// (zw)^alpha e^{-(|z|^2+|w|^2)/2}
inline cplx weight_varpi(cplx z, cplx w, double alpha) { return weight_varpi_stabilized(z, w, alpha).value(); }

// sum_j [(n+1-j)(j+1)+alpha] x^j / Gamma(j+alpha+2); entire in x.
inline StabilizedValue f_alpha_stabilized(int n, double alpha, cplx x) {
  if (n < 0) throw validation_error("f_alpha: n must be >= 0");
  StabilizedValue mono = specfun::reciprocal_gamma_stabilized(alpha + 2.0), sum;
  for (int j = 0; j <= n; ++j) {
    if (j > 0) mono *= x / (j + alpha + 1.0);
    sum += mono * cplx{(n + 1.0 - j) * (j + 1.0) + alpha, 0.0};
  }
  return sum;
}

/// f_n^{(alpha)}(x).
inline cplx f_alpha(int n, double alpha, cplx x) {
  if (x == cplx{}) throw validation_error("f_alpha: x = 0 is outside the domain");
  return f_alpha_stabilized(n, alpha, x).value();
}

/// h-form: (n+1)/Gamma(alpha+1) + (x-alpha) sum_{k=1}^n (n+1-k) x^{k-1}/Gamma(k+alpha+1).
inline cplx f_alpha_hform(int n, double alpha, cplx x) {
  cplx mono = specfun::reciprocal_gamma(alpha + 2.0), sum{};
  for (int k = 1; k <= n; ++k) {
    if (k > 1) mono *= x / (k + alpha);
    sum += static_cast<double>(n + 1 - k) * mono;
  }
  return (n + 1.0) * specfun::reciprocal_gamma(alpha + 1.0) + (x - alpha) * sum;
}

/// Pole form (x-alpha)/x {(n+alpha+1) e_n(x|x) - x e_{n-1}(x|x)}; undefined at x in {0, alpha}.
inline cplx f_alpha_pole_form(int n, double alpha, cplx x) {
  if (x == cplx{}) throw validation_error("f_alpha_pole_form: x = 0");
  const cplx a = specfun::frak_e(n, alpha, x, x);
  const cplx b = n >= 1 ? specfun::frak_e(n - 1, alpha, x, x) : specfun::detail::pole_term(alpha, x).value();
  return (x - alpha) / x * ((n + alpha + 1.0) * a - x * b);
}

namespace detail {

inline std::vector<cplx> f_table(int n_max, double alpha, cplx x) {
  std::vector<cplx> fs(n_max + 1);
  for (int k = 0; k <= n_max; ++k) {
    fs[k] = f_alpha_stabilized(k, alpha, x).value();
    if (fs[k] == cplx{} || !std::isfinite(std::abs(fs[k])))
      throw numerical_error("degenerate x: f_" + std::to_string(k) + " vanishes or overflows");
  }
  return fs;
}

} // namespace detail

/// Phi_n by the defining sum; Phi_{-1} = 0.
inline cplx phi_alpha(int n, double alpha, cplx x) {
  if (n < -1) throw validation_error("phi_alpha: n must be >= -1");
  if (n == -1) return {};
  const auto fs = detail::f_table(n + 1, alpha, x);
  cplx sum{}, mono = specfun::reciprocal_gamma(alpha + 2.0);
  for (int k = 0; k <= n; ++k) {
    if (k > 0) mono *= x / (k + alpha + 1.0);
    sum += mono / (fs[k] * fs[k + 1]);
  }
  return sum;
}

inline cplx phi_alpha_closed(int n, double alpha, cplx x) {
  if (x == cplx{} || x == cplx{alpha, 0.0}) throw validation_error("phi_alpha_closed: x in {0, alpha}");
  if (n == -1) return {};
  const cplx f1 = f_alpha(n + 1, alpha, x);
  return std::tgamma(alpha + 1.0) * (x - (alpha + 1.0)) / ((x - alpha) * x) +
         (n + alpha + 2.0 - x) / (x * f1 * (x - alpha));
}

/// mu_n(x,t) = sum_{k<=n} f_k(x) t^k
inline cplx mu_partial(int n, double alpha, cplx x, cplx t) {
  cplx sum{}, tk = 1.0;
  for (int k = 0; k <= n; ++k) {
    sum += f_alpha_stabilized(k, alpha, x).value() * tk;
    tk *= t;
  }
  return sum;
}

/// mu_{N-1}(x,t) in closed form, t != 1, x not in {0, alpha}.
inline cplx mu_closed(int N, double alpha, cplx x, cplx t) {
  if (t == 1.0) throw validation_error("mu_closed: t = 1");
  if (x == cplx{}) throw validation_error("mu_closed: x = 0");
  const cplx s = 1.0 - t;
  const cplx eN1t = specfun::frak_e(N - 1, alpha, x * t, x);
  const cplx eN1x = specfun::frak_e(N - 1, alpha, x, x);
  const cplx tN = std::pow(t, N);
  return (x - alpha) / x *
         (eN1t / (s * s) - std::pow(x * t, N) * specfun::reciprocal_gamma(N + alpha) / s -
          tN * (N + alpha + 1.0 - x - (N + alpha - x) * t) / (s * s) * eN1x);
}

/// d/dt mu_{N-1}(x,t) in closed form, t not in {0, 1}, x not in {0, alpha}.
inline cplx mu_dt_closed(int N, double alpha, cplx x, cplx t) {
  if (t == 0.0 || t == 1.0) throw validation_error("mu_dt_closed: t in {0, 1}");
  const cplx s = 1.0 - t, c = (x - alpha) / x;
  const cplx mu = mu_closed(N, alpha, x, t);
  const cplx eN1t = specfun::trunc_exp(N - 1, alpha, x * t);
  const cplx eN1x = specfun::trunc_exp(N - 1, alpha, x);
  const cplx tN = std::pow(t, N);
  return (static_cast<double>(N) / t + 2.0 / s) * mu - c * (N + alpha - x * t) / (t * s * s) * eN1t +
         c * tN * (N + alpha - x) * eN1x / (s * s) -
         c / (t * s * s) *
             (std::pow(x * t, N) * s * specfun::reciprocal_gamma(N + alpha) +
              alpha * specfun::reciprocal_gamma(alpha + 1.0) * (N + alpha - x) * (1.0 - tN * t) / (x - alpha));
}

/// G_{N-1}(x|y,z) by the literal double sum (O(N^2); reference only).
inline cplx g_double_sum(int N, double alpha, cplx x, cplx y, cplx z) {
  if (N < 1) throw validation_error("g_double_sum: N must be >= 1");
  const auto fs = detail::f_table(N, alpha, x);
  std::vector<cplx> tail(N + 1);
  std::vector<cplx> mono(N);
  mono[0] = specfun::reciprocal_gamma(alpha + 2.0);
  for (int k = 1; k < N; ++k) mono[k] = mono[k - 1] * x / (k + alpha + 1.0);
  for (int k = N - 1; k >= 0; --k) tail[k] = tail[k + 1] + mono[k] / (fs[k] * fs[k + 1]);
  cplx sum{}, yn = 1.0;
  for (int n = 0; n < N; ++n) {
    cplx zm = 1.0;
    for (int m = 0; m < N; ++m) {
      sum += fs[n] * fs[m] * yn * zm * tail[std::max(n, m)];
      zm *= z;
    }
    yn *= y;
  }
  return sum;
}

namespace detail {

// bracket of I_n without the varpi weights
inline StabilizedValue kernel_bracket(int n, double alpha, cplx zb, cplx w, const ConditionPoint& c) {
  const cplx x = c.x();
  using specfun::frak_e_stabilized;
  const StabilizedValue a = frak_e_stabilized(n, alpha, c.lambda * zb, x) * frak_e_stabilized(n, alpha, w * c.lambda_bar, x);
  const StabilizedValue b = frak_e_stabilized(n, alpha, w * zb, x) * frak_e_stabilized(n, alpha, x, x);
  return a - (1.0 - (zb - c.lambda_bar) * (w - c.lambda)) * b;
}

// (x-alpha)/x, taken as 1 for alpha = 0 so that x = 0 is admissible there.
inline cplx pole_ratio(double alpha, cplx x) {
  if (alpha == 0.0) return 1.0;
  if (x == cplx{}) throw validation_error("x = lambda*lambda_bar = 0 requires alpha = 0");
  return (x - alpha) / x;
}

inline std::array<StabilizedValue, 3> terms_stabilized(int N, double alpha, cplx zb, cplx w, const ConditionPoint& c) {
  const cplx dz = zb - c.lambda_bar, dw = w - c.lambda;
  if (dz == cplx{} || dw == cplx{})
    throw validation_error("simplified_kernel_terms: coincidence zbar = lambda_bar or w = lambda");
  const cplx x = c.x();
  const cplx pr = pole_ratio(alpha, x);
  const StabilizedValue fN = f_alpha_stabilized(N, alpha, x);
  if (fN.is_zero()) throw numerical_error("simplified_kernel_terms: f_N(x) = 0");
  const cplx d1 = dz * dw;

  StabilizedValue i1 = kernel_bracket(N + 1, alpha, zb, w, c) * cplx{N + alpha + 1.0, 0.0} -
                       kernel_bracket(N, alpha, zb, w, c) * x;
  i1 *= pr / (d1 * d1);
  i1 /= fN;

  StabilizedValue i2 = int_power(zb * w, N + 1) * specfun::reciprocal_gamma_stabilized(N + alpha + 1.0) *
                       specfun::frak_e_stabilized(N + 1, alpha, x, x) / fN;
  i2 *= -pr / d1;

  StabilizedValue i3;
  const double rg = specfun::reciprocal_gamma(alpha);
  if (rg != 0.0) {
    if (x == cplx{alpha, 0.0}) throw numerical_error("simplified_kernel_terms: pole at x = alpha");
    i3 = StabilizedValue(-rg / ((x - alpha) * d1));
  }
  return {i1, i2, i3};
}

// Sum of the three terms with the 1/(x-alpha) parts of the first and third
// combined by hand, so the result is regular at x = alpha. Writing
// frak_e = e + p with p = rg/(x-alpha) and f_N = (N+1)/Gamma(alpha+1) + (x-alpha) S,
// the pole parts collapse to -rg (rg + (N+1)/Gamma(alpha+1) + x S) / (x f_N d1).
inline StabilizedValue terms_sum_regular(int N, double alpha, cplx zb, cplx w, const ConditionPoint& c) {
  const cplx dz = zb - c.lambda_bar, dw = w - c.lambda;
  if (dz == cplx{} || dw == cplx{}) throw validation_error("reduced kernel: coincidence on the singular set");
  const cplx x = c.x();
  const cplx d1 = dz * dw, q = 1.0 - d1;
  const StabilizedValue fN = f_alpha_stabilized(N, alpha, x);
  if (fN.is_zero()) throw numerical_error("reduced kernel: f_N(x) = 0");
  const StabilizedValue rg = specfun::reciprocal_gamma_stabilized(alpha);
  const bool has_pole = !rg.is_zero();
  if (has_pole && x == cplx{}) throw validation_error("x = lambda*lambda_bar = 0 requires alpha = 0");

  using specfun::trunc_exp_stabilized;
  struct AB {
    StabilizedValue A, B;
  };
  const auto ab = [&](int n) {
    const StabilizedValue e1 = trunc_exp_stabilized(n, alpha, c.lambda * zb);
    const StabilizedValue e2 = trunc_exp_stabilized(n, alpha, w * c.lambda_bar);
    const StabilizedValue e3 = trunc_exp_stabilized(n, alpha, w * zb);
    const StabilizedValue e4 = trunc_exp_stabilized(n, alpha, x);
    return AB{e1 * e2 - q * (e3 * e4), e1 + e2 - q * (e3 + e4)};
  };
  const AB hi = ab(N + 1), lo = ab(N);
  const cplx pr = alpha == 0.0 ? cplx{1.0} : (x - alpha) / x;

  StabilizedValue num = pr * (hi.A * cplx{N + alpha + 1.0, 0.0} - lo.A * x);
  if (has_pole) num += rg / x * (hi.B * cplx{N + alpha + 1.0, 0.0} - lo.B * x);
  StabilizedValue total = num / (d1 * d1) / fN;

  if (has_pole) {
    StabilizedValue mono = specfun::reciprocal_gamma_stabilized(alpha + 2.0), S;
    for (int k = 1; k <= N; ++k) {
      if (k > 1) mono *= x / (k + alpha);
      S += mono * cplx{static_cast<double>(N + 1 - k), 0.0};
    }
    const StabilizedValue bracket = rg + specfun::reciprocal_gamma_stabilized(alpha + 1.0) * cplx{N + 1.0, 0.0} + S * x;
    total -= rg * bracket / fN / (x * d1);
  }

  // second term: pr * frak_e_{N+1}(x|x) = pr e_{N+1}(x) + rg/x
  StabilizedValue e_hat = pr * trunc_exp_stabilized(N + 1, alpha, x);
  if (has_pole) e_hat += rg / x;
  total -= int_power(zb * w, N + 1) * specfun::reciprocal_gamma_stabilized(N + alpha + 1.0) * e_hat / fN / d1;
  return total;
}

inline double coincidence_radius(const ConditionPoint& c) {
  return 0.25 / std::max({1.0, std::abs(c.lambda), std::abs(c.lambda_bar)});
}

// G_{N-1}(x | zbar/lambda_bar, w/lambda) as sum_j m_j/(f_j f_{j+1}) A_j(y) B_j(z), with
// A_j, B_j the partial sums of f_n y^n and f_n z^n; O(N) and free of the 1/(dz dw)^2 cancellation.
inline StabilizedValue kernel_direct(int N, double alpha, cplx zb, cplx w, const ConditionPoint& c) {
  const cplx x = c.x(), y = zb / c.lambda_bar, z = w / c.lambda;
  StabilizedValue m = specfun::reciprocal_gamma_stabilized(alpha + 2.0), s1, f, A, B, yn(1.0), zn(1.0), total;
  f = m * cplx{1.0 + alpha, 0.0};
  s1 = m;
  for (int j = 0; j < N; ++j) {
    if (j > 0) {
      yn *= y;
      zn *= z;
    }
    A += f * yn;
    B += f * zn;
    const StabilizedValue mj = m;
    m *= x / (j + alpha + 2.0);
    s1 += m * cplx{j + 2.0, 0.0};
    const StabilizedValue f_next = f + s1 + m * cplx{alpha, 0.0};
    if (f.is_zero() || f_next.is_zero()) throw numerical_error("reduced kernel: f_j(x) = 0");
    total += mj / (f * f_next) * A * B;
    f = f_next;
  }
  return total;
}

} // namespace detail

/// I_n(zbar, w | lambda_bar, lambda)
inline cplx kernel_I(int n, double alpha, cplx zb, cplx w, const ConditionPoint& c) {
  return (detail::kernel_bracket(n, alpha, zb, w, c) * weight_varpi_stabilized(zb, c.lambda, alpha) *
          weight_varpi_stabilized(c.lambda_bar, w, alpha))
      .value();
}

/// The three pieces whose sum is the reduced kernel of size N at (zbar, w).
inline std::array<cplx, 3> simplified_kernel_terms(int N, double alpha, cplx zb, cplx w, const ConditionPoint& c) {
  const auto t = detail::terms_stabilized(N, alpha, zb, w, c);
  return {t[0].value(), t[1].value(), t[2].value()};
}

/// Reduced kernel (sum of the three terms), continued holomorphically through
/// zbar = lambda_bar and w = lambda: by the direct sum within unit distance of the
/// singular set, by Cauchy interpolation when lambda = 0.
inline StabilizedValue reduced_kernel(int N, double alpha, cplx zb, cplx w, const ConditionPoint& c) {
  const double r = detail::coincidence_radius(c);
  if (c.lambda != cplx{} && c.lambda_bar != cplx{} &&
      std::min(std::abs(zb - c.lambda_bar), std::abs(w - c.lambda)) < 1.0)
    return detail::kernel_direct(N, alpha, zb, w, c);
  const bool near_z = std::abs(zb - c.lambda_bar) < 0.25 * r;
  const bool near_w = std::abs(w - c.lambda) < 0.25 * r;
  if (near_z) {
    return cauchy_interpolate([&](cplx s) { return reduced_kernel(N, alpha, s, w, c); }, c.lambda_bar, r, zb);
  }
  if (near_w) {
    return cauchy_interpolate([&](cplx s) { return reduced_kernel(N, alpha, zb, s, c); }, c.lambda, r, w);
  }
  return detail::terms_sum_regular(N, alpha, zb, w, c);
}

/// K11 = reduced kernel * omega(zbar, z | lambda_bar, lambda)
inline cplx K11_finite(int N, double alpha, cplx z, cplx zb, cplx w, cplx wb, const ConditionPoint& c) {
  (void)wb;
  return (reduced_kernel(N, alpha, zb, w, c) * weight_omega_stabilized(zb, z, c.lambda_bar, c.lambda, alpha)).value();
}

namespace detail {

inline void check_points(int k, int k_min, const ModelParams& p, const std::vector<cplx>& pts) {
  p.validate();
  if (k < k_min || k > p.N - 1)
    throw validation_error("k must lie in [" + std::to_string(k_min) + ", N-1], got " + std::to_string(k));
  if (static_cast<int>(pts.size()) != k)
    throw validation_error("expected " + std::to_string(k) + " points, got " + std::to_string(pts.size()));
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (std::abs(pts[i] - pts[j]) < 1e-12)
        throw validation_error("coincident points " + std::to_string(i) + " and " + std::to_string(j));
}

inline std::vector<cplx> unscaled(const ModelParams& p, const std::vector<cplx>& pts) {
  const double s = std::sqrt(p.sigma_sq);
  std::vector<cplx> out(pts);
  for (auto& z : out) z /= s;
  return out;
}

} // namespace detail

/// Matrix K11^{(N-1)}(z_i, z_j | z_1) for i, j = 2..k.
inline KernelMatrix D11_matrix(const ModelParams& p, const std::vector<cplx>& zs) {
  const auto c = ConditionPoint::physical(zs[0]);
  const int m = static_cast<int>(zs.size()) - 1;
  Eigen::MatrixXcd K(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const cplx zi = zs[i + 1], zj = zs[j + 1];
      K(i, j) = K11_finite(p.N - 1, p.alpha, zi, std::conj(zi), zj, std::conj(zj), c);
    }
  return KernelMatrix::from(std::move(K));
}

/// k-point overlap-weighted correlation D11.
inline cplx D11(int k, const ModelParams& p, const std::vector<cplx>& points) {
  detail::check_points(k, 1, p, points);
  const auto zs = detail::unscaled(p, points);
  const cplx z1 = zs[0];
  if (z1 == cplx{} && p.alpha != 0.0) throw validation_error("D11: z1 = 0 requires alpha = 0");
  const double x = std::norm(z1);
  StabilizedValue pre = f_alpha_stabilized(p.N - 1, p.alpha, x) * detail::power(x, p.alpha) *
                        StabilizedValue::exp_of(-x);
  pre *= cplx{std::pow(p.sigma_sq, -k), 0.0};
  if (k == 1) return pre.value();
  return (pre * D11_matrix(p, zs).det_value).value();
}

/// Matrix K12(z_i, z_j | z_1, z_2) for i, j = 3..k.
inline KernelMatrix D12_matrix(const ModelParams& p, const std::vector<cplx>& zs) {
  const cplx z1 = zs[0], z2 = zs[1];
  const ConditionPoint c{z1, std::conj(z2)};
  const int n = p.N - 1;
  const int m = static_cast<int>(zs.size()) - 2;
  Eigen::MatrixXcd K(m, m);
  if (m == 0) return KernelMatrix::from(std::move(K));
  const StabilizedValue k0 = reduced_kernel(n, p.alpha, std::conj(z1), z2, c);
  std::vector<StabilizedValue> a(m), b(m);
  for (int i = 0; i < m; ++i) {
    a[i] = reduced_kernel(n, p.alpha, std::conj(z1), zs[i + 2], c);
    b[i] = reduced_kernel(n, p.alpha, std::conj(zs[i + 2]), z2, c);
  }
  for (int i = 0; i < m; ++i) {
    const cplx zi = zs[i + 2];
    const StabilizedValue om = weight_omega_stabilized(zi, std::conj(zi), z1, std::conj(z2), p.alpha);
    for (int j = 0; j < m; ++j) {
      const StabilizedValue cij = reduced_kernel(n, p.alpha, std::conj(zi), zs[j + 2], c);
      K(i, j) = (om * (cij - a[j] * b[i] / k0)).value();
    }
  }
  return KernelMatrix::from(std::move(K));
}

/// k-point off-diagonal overlap-weighted correlation D12.
inline cplx D12(int k, const ModelParams& p, const std::vector<cplx>& points) {
  detail::check_points(k, 2, p, points);
  const auto zs = detail::unscaled(p, points);
  const cplx z1 = zs[0], z2 = zs[1];
  const ConditionPoint c{z1, std::conj(z2)};
  const int n = p.N - 1;
  StabilizedValue v = f_alpha_stabilized(n, p.alpha, z1 * std::conj(z2)) *
                      weight_varpi_stabilized(z1, std::conj(z2), p.alpha) *
                      weight_varpi_stabilized(std::conj(z1), z2, p.alpha) *
                      reduced_kernel(n, p.alpha, std::conj(z1), z2, c);
  v = -v * cplx{std::pow(p.sigma_sq, -k), 0.0};
  if (k == 2) return v.value();
  return (v * D12_matrix(p, zs).det_value).value();
}

/// D12 through the decoupling identity: -e^{-|d|^2}/(1-|d|^2) times D11 with zbar_1 and zbar_2 swapped.
inline cplx D12_decoupled(int k, const ModelParams& p, const std::vector<cplx>& points) {
  detail::check_points(k, 2, p, points);
  const auto zs = detail::unscaled(p, points);
  const cplx z1 = zs[0], z2 = zs[1];
  const double d2 = std::norm(z1 - z2);
  if (std::abs(1.0 - d2) < 1e-12) throw numerical_error("D12_decoupled: pole at |z1 - z2| = 1");
  const ConditionPoint c{z1, std::conj(z2)};
  const int n = p.N - 1;
  const cplx x = c.x();
  StabilizedValue pre = f_alpha_stabilized(n, p.alpha, x) * detail::power(x, p.alpha) * StabilizedValue::exp_of(-x);

  std::vector<cplx> bars(k - 1);
  bars[0] = std::conj(z1);
  for (int i = 1; i < k - 1; ++i) bars[i] = std::conj(zs[i + 1]);
  Eigen::MatrixXcd K(k - 1, k - 1);
  for (int i = 0; i < k - 1; ++i)
    for (int j = 0; j < k - 1; ++j) {
      const cplx zi = zs[i + 1];
      K(i, j) = (reduced_kernel(n, p.alpha, bars[i], zs[j + 1], c) *
                 weight_omega_stabilized(bars[i], zi, c.lambda_bar, c.lambda, p.alpha))
                    .value();
    }
  pre *= cplx{-std::exp(-d2) / (1.0 - d2) * std::pow(p.sigma_sq, -k), 0.0};
  return (pre * KernelMatrix::from(std::move(K)).det_value).value();
}

/// W_N(x,y,z) = e_N(xy|x) e_N(xz|x) - (1 - x(1-y)(1-z)) e_N(xyz|x) e_N(x|x)
inline cplx W_oracle(int N, double alpha, cplx x, cplx y, cplx z) {
  using specfun::frak_e;
  return frak_e(N, alpha, x * y, x) * frak_e(N, alpha, x * z, x) -
         (1.0 - x * (1.0 - y) * (1.0 - z)) * frak_e(N, alpha, x * y * z, x) * frak_e(N, alpha, x, x);
}

/// Right-hand side of the shift identity W_N = W_{N+1} - corrections.
inline cplx W_shifted(int N, double alpha, cplx x, cplx y, cplx z) {
  using specfun::frak_e;
  const double g2 = specfun::reciprocal_gamma(N + alpha + 2.0);
  const cplx q = 1.0 - x * (1.0 - y) * (1.0 - z);
  const int m = N + 1;
  return W_oracle(m, alpha, x, y, z) - std::pow(x * z, m) * frak_e(m, alpha, x * y, x) * g2 -
         std::pow(x * y, m) * frak_e(m, alpha, x * z, x) * g2 +
         x * (1.0 - y) * (1.0 - z) * std::pow(x * x * y * z, m) * g2 * g2 +
         q * (std::pow(x, m) * frak_e(m, alpha, x * y * z, x) * g2 + std::pow(x * y * z, m) * frak_e(m, alpha, x, x) * g2);
}

} // namespace ovl::finite
