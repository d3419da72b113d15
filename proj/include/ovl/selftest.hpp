#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ovl/finite_kernel.hpp"
#include "ovl/limits.hpp"
#include "ovl/montecarlo.hpp"
#include "ovl/orthopoly.hpp"
#include "ovl/specfun.hpp"

namespace ovl::selftest {

struct CheckResult {
  std::string module;
  std::string name;
  double value = 0.0;     // measured defect
  double tolerance = 0.0; // pass when value <= tolerance
  bool passed = false;
  std::string error;
};

struct Check {
  std::string module;
  std::string name;
  double tolerance;
  std::function<double()> measure;
};

namespace detail {

inline double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline cplx random_disk(std::mt19937_64& rng, double r) {
  std::uniform_real_distribution<double> u(0.0, 1.0), t(0.0, 2.0 * std::numbers::pi);
  return std::polar(r * std::sqrt(u(rng)), t(rng));
}

} // namespace detail

inline std::vector<Check> checks() {
  using detail::rel;
  std::vector<Check> c;

  c.push_back({"specfun", "P + Q = 1", 1e-14, [] {
                 double m = 0.0;
                 for (double a : {0.5, 3.0, 40.0})
                   for (double x : {0.1, 3.0, 45.0})
                     m = std::max(m, std::abs(specfun::regularized_gamma_p(a, x) + specfun::regularized_gamma_q(a, x) - 1.0));
                 return m;
               }});
  c.push_back({"specfun", "F(x) + F(-x) = 1", 1e-14, [] {
                 double m = 0.0;
                 std::mt19937_64 rng(1);
                 for (int i = 0; i < 50; ++i) {
                   const cplx x = detail::random_disk(rng, 5.0);
                   m = std::max(m, std::abs(specfun::error_F(x) + specfun::error_F(-x) - 1.0));
                 }
                 return m;
               }});
  c.push_back({"specfun", "E_{1,1}(z) = e^z", 1e-12, [] {
                 double m = 0.0;
                 std::mt19937_64 rng(2);
                 for (int i = 0; i < 50; ++i) {
                   const cplx z = detail::random_disk(rng, 20.0);
                   m = std::max(m, rel(specfun::mittag_leffler(1.0, z), std::exp(z)));
                 }
                 return m;
               }});
  c.push_back({"specfun", "trunc_exp = e^z Q(n+1, z)", 1e-12, [] {
                 double m = 0.0;
                 for (int n : {0, 5, 30})
                   for (double z : {0.5, 4.0, 25.0})
                     m = std::max(m, rel(specfun::trunc_exp(n, 0.0, z), std::exp(z) * specfun::regularized_gamma_q(n + 1.0, z)));
                 return m;
               }});
  c.push_back({"finite_kernel", "g_double_sum = simplified terms", 1e-9, [] {
                 double m = 0.0;
                 std::mt19937_64 rng(3);
                 for (double a : {0.0, 0.5, 2.0})
                   for (int N : {3, 12, 30}) {
                     const auto cp = finite::ConditionPoint::physical(cplx{0.4, 0.0} + detail::random_disk(rng, 1.2));
                     const cplx zb = std::conj(cp.lambda + detail::random_disk(rng, 1.0));
                     const cplx w = cp.lambda + detail::random_disk(rng, 1.0);
                     const auto t = finite::simplified_kernel_terms(N, a, zb, w, cp);
                     const cplx g = finite::g_double_sum(N, a, cp.x(), zb / cp.lambda_bar, w / cp.lambda);
                     m = std::max(m, rel(t[0] + t[1] + t[2], g));
                   }
                 return m;
               }});
  c.push_back({"finite_kernel", "D12 = decoupled D12", 1e-10, [] {
                 const finite::ModelParams p{12, 2.0, 1.0};
                 const std::vector<cplx> pts{{1.5, 0.2}, {1.2, 0.9}, {0.3, -1.1}};
                 return rel(finite::D12(3, p, pts), finite::D12_decoupled(3, p, pts));
               }});
  c.push_back({"orthopoly", "LDU reconstruction", 1e-12, [] {
                 double m = 0.0;
                 for (double a : {0.0, 2.0, 7.0}) {
                   const auto mm = orthopoly::moment_matrix(30, a, finite::ConditionPoint::physical({1.1, -0.4}));
                   const auto f = orthopoly::ldu_decompose(mm);
                   const Eigen::MatrixXcd d = f.L() * f.D() * f.U() - mm.reduced;
                   m = std::max(m, d.cwiseAbs().maxCoeff() / mm.reduced.cwiseAbs().maxCoeff());
                 }
                 return m;
               }});
  c.push_back({"orthopoly", "kernel_from_polys = g_double_sum", 1e-9, [] {
                 const auto cp = finite::ConditionPoint::physical({0.9, 0.5});
                 const auto pp = orthopoly::build_polys(12, 2.0, cp);
                 const cplx zb{0.3, -0.8}, w{1.4, 0.2};
                 return rel(orthopoly::kernel_from_polys(12, pp, zb, w),
                            finite::g_double_sum(12, 2.0, cp.x(), zb / cp.lambda_bar, w / cp.lambda));
               }});
  c.push_back({"limits", "F(0) = 1/sqrt(2 pi)", 1e-15,
               [] { return std::abs(limits::edge_F_script(0.0) - 1.0 / specfun::sqrt_2pi); }});
  c.push_back({"limits", "edge_H vs finite difference", 1e-8, [] {
                 const cplx a{0.3, 0.1}, b{-0.2, 0.4}, cc{0.5, -0.3}, d{0.1, 0.2}, f{0.15, -0.05};
                 auto g = [&](cplx x) {
                   using specfun::error_F;
                   return std::exp(0.5 * (a + x) * (a + x)) *
                          (std::exp(-f) * error_F(b + x) * error_F(cc + x) - error_F(d + x) * error_F(a + x) +
                           f * error_F(d) * error_F(a + x));
                 };
                 const double h = 1e-5;
                 const cplx fd = -std::exp(-0.5 * a * a) * (g(h) - g(-h)) / (2.0 * h) / limits::edge_F_script(a);
                 return std::abs(limits::edge_H(a, b, cc, d, f) - fd);
               }});
  c.push_back({"limits", "weak kernel -> bulk kernel at rho = 60", 0.1, [] {
                 const cplx z = 0.2, e = -0.1, x = 0.05;
                 return rel(limits::weak_kernel(z, z, e, x, x, 60.0), limits::bulk_kernel(z, z, e, x, x));
               }});
  c.push_back({"limits", "Psi11 imaginary part", 1e-10, [] {
                 double m = 0.0;
                 std::mt19937_64 rng(4);
                 for (int i = 0; i < 20; ++i) {
                   const cplx z = detail::random_disk(rng, 2.0);
                   for (cplx v : {limits::edge_psi11(z, 1.0, limits::EdgeSide::outer), limits::weak_psi11(z, 2.0),
                                  limits::singular_psi11(z, 2.0)})
                     m = std::max(m, std::abs(v.imag()) / std::max(1.0, std::abs(v)));
                 }
                 return m;
               }});
  c.push_back({"montecarlo", "Philox4x32-10 known answer", 0.0, [] {
                 const auto b = mc::Philox4x32(0)({0, 0, 0, 0});
                 return b == mc::Philox4x32::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u} ? 0.0 : 1.0;
               }});
  c.push_back({"montecarlo", "Jordan block overlap 1 + kappa^2", 1e-12, [] {
                 Eigen::MatrixXcd A(2, 2);
                 A << 0.0, 2.0, 0.0, 1.0;
                 const auto s = mc::eig_full(A);
                 return std::abs(mc::overlap(s, 0, 0).real() - 5.0) / 5.0;
               }});
  c.push_back({"montecarlo", "O11 conditional mean (z-score)", 3.0, [] {
                 mc::SamplerConfig cfg;
                 cfg.N = 6;
                 cfg.alpha_int = 1;
                 cfg.seed = 7;
                 cfg.replicas = 2000;
                 return mc::conditional_mean_O11(cfg, 1.0).z_score();
               }});
  return c;
}

inline std::vector<CheckResult> run_all() {
  std::vector<CheckResult> out;
  for (const auto& ch : checks()) {
    CheckResult r{ch.module, ch.name, 0.0, ch.tolerance, false, {}};
    try {
      r.value = ch.measure();
      r.passed = r.value <= ch.tolerance;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    out.push_back(r);
  }
  return out;
}

} // namespace ovl::selftest
