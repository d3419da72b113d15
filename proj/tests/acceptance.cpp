#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "ginibre_reference.hpp"
#include "ovl/finite_kernel.hpp"
#include "ovl/limits.hpp"
#include "ovl/montecarlo.hpp"
#include "ovl/orthopoly.hpp"
#include "ovl/specfun.hpp"

using namespace ovl;
using finite::ConditionPoint;

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
cplx to_c(ginibre_ref::lcplx v) { return {static_cast<double>(v.real()), static_cast<double>(v.imag())}; }

cplx random_in_annulus(std::mt19937_64& rng, double rmin, double rmax) {
  std::uniform_real_distribution<double> r(rmin, rmax), t(0.0, 2.0 * std::numbers::pi);
  return std::polar(r(rng), t(rng));
}

cplx random_disk(std::mt19937_64& rng, double r) {
  std::uniform_real_distribution<double> u(0.0, 1.0), t(0.0, 2.0 * std::numbers::pi);
  return std::polar(r * std::sqrt(u(rng)), t(rng));
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Collects sub-checks of one criterion; passes when all of them do.
struct Checks {
  bool ok = true;
  std::ostringstream msg;

  void le(const std::string& name, double value, double tol) {
    const bool p = value <= tol;
    ok = ok && p;
    if (msg.tellp() > 0) msg << "; ";
    msg << name << ' ' << sci(value) << (p ? " <= " : " > ") << sci(tol);
  }
  void flag(const std::string& name, bool p, const std::string& info = "") {
    ok = ok && p;
    if (msg.tellp() > 0) msg << "; ";
    msg << name << (p ? " ok" : " FAILED") << (info.empty() ? "" : " (" + info + ")");
  }
  Outcome done() const { return {ok, msg.str()}; }
};

// ---------------------------------------------------------------- 1

Outcome master_identity() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (double a : {0.0, 0.5, 2.0, 7.0})
    for (int N = 1; N <= 40; ++N)
      for (int i = 0; i < 20; ++i) {
        const auto c = ConditionPoint::physical(random_in_annulus(rng, 0.2, 3.0));
        const cplx z = c.lambda + random_in_annulus(rng, 0.05, 1.5), w = c.lambda + random_in_annulus(rng, 0.05, 1.5);
        const auto t = finite::simplified_kernel_terms(N, a, std::conj(z), w, c);
        const cplx g = finite::g_double_sum(N, a, c.x(), std::conj(z) / c.lambda_bar, w / c.lambda);
        worst = std::max(worst, rel(t[0] + t[1] + t[2], g));
      }
  Checks ch;
  ch.le("max rel err over 3200 triples", worst, 1e-9);
  return ch.done();
}

// ---------------------------------------------------------------- 2

Outcome oracle_triangle() {
  std::mt19937_64 rng(202);
  double pg = 0.0, ps = 0.0, gs = 0.0;
  for (double a : {0.0, 2.0})
    for (int N = 1; N <= 12; ++N)
      for (int i = 0; i < 10; ++i) {
        const auto c = ConditionPoint::physical(random_in_annulus(rng, 0.3, 2.0));
        const cplx z = c.lambda + random_in_annulus(rng, 0.1, 1.5), w = c.lambda + random_in_annulus(rng, 0.1, 1.5);
        const auto pp = orthopoly::build_polys(N, a, c);
        const cplx k = orthopoly::kernel_from_polys(N, pp, std::conj(z), w);
        const cplx g = finite::g_double_sum(N, a, c.x(), std::conj(z) / c.lambda_bar, w / c.lambda);
        const auto t = finite::simplified_kernel_terms(N, a, std::conj(z), w, c);
        const cplx s = t[0] + t[1] + t[2];
        pg = std::max(pg, rel(k, g));
        ps = std::max(ps, rel(k, s));
        gs = std::max(gs, rel(g, s));
      }
  Checks ch;
  ch.le("polys-vs-double-sum", pg, 1e-9);
  ch.le("polys-vs-simplified", ps, 1e-9);
  ch.le("double-sum-vs-simplified", gs, 1e-9);
  return ch.done();
}

// ---------------------------------------------------------------- 3

Outcome ldu_and_three_term() {
  std::mt19937_64 rng(303);
  double recon = 0.0, twopath = 0.0, contract = 0.0;
  for (double a : {0.0, 0.5, 2.0, 7.0})
    for (int size = 1; size <= 30; ++size) {
      const auto c = ConditionPoint::physical(random_in_annulus(rng, 0.3, 2.0));
      const auto mm = orthopoly::moment_matrix(size, a, c);
      const auto f = orthopoly::ldu_decompose(mm);
      const Eigen::MatrixXcd d = f.L() * f.D() * f.U() - mm.reduced;
      recon = std::max(recon, d.cwiseAbs().maxCoeff() / mm.reduced.cwiseAbs().maxCoeff());
      for (int p = 0; p < size; ++p)
        twopath = std::max(twopath, rel(f.d[p], (p + a + 1.0) * finite::f_alpha(p + 1, a, c.x()) / finite::f_alpha(p, a, c.x())));
    }
  for (double a : {0.0, 0.5, 2.0, 7.0})
    for (int i = 0; i < 5; ++i) {
      const auto c = ConditionPoint::physical(random_in_annulus(rng, 0.3, 2.0));
      const auto pp = orthopoly::build_polys(26, a, c);
      const cplx z = random_in_annulus(rng, 0.2, 2.0);
      for (int k = 1; k < 25; ++k)
        contract = std::max(contract, orthopoly::three_term_residual(k, pp, a, c, z) / (1e-10 * (1.0 + std::pow(std::abs(z), k + 1))));
    }
  Checks ch;
  ch.le("LDU reconstruction", recon, 1e-12);
  ch.le("d two-path", twopath, 1e-12);
  ch.le("three-term residual / contract bound", contract, 1.0);
  return ch.done();
}

// ---------------------------------------------------------------- 4

Outcome ginibre_regression() {
  double fw = 0.0, pw = 0.0, dw = 0.0;
  for (int p = 0; p <= 12; ++p)
    for (double x : {0.1, 1.0, 2.3, 7.5}) {
      fw = std::max(fw, rel(finite::f_alpha(p, 0.0, x), to_c(ginibre_ref::f(p, x))));
      pw = std::max(pw, rel(finite::phi_alpha(p, 0.0, x), to_c(ginibre_ref::phi(p, x))));
    }
  std::mt19937_64 rng(404);
  for (int N = 2; N <= 10; ++N)
    for (int k = 1; k <= std::min(3, N - 1); ++k)
      for (int i = 0; i < 10; ++i) {
        std::vector<cplx> pts;
        for (int j = 0; j < k; ++j) pts.push_back(random_in_annulus(rng, 0.1, 2.5));
        dw = std::max(dw, rel(finite::D11(k, {N, 0.0}, pts), to_c(ginibre_ref::D11(N, pts))));
      }
  Checks ch;
  ch.le("f_p", fw, 1e-12);
  ch.le("Phi_n", pw, 1e-12);
  ch.le("D11 k<=3 N<=10", dw, 1e-12);
  return ch.done();
}

// ---------------------------------------------------------------- 5

cplx F_quadrature(cplx x) {
  using boost::math::quadrature::gauss_kronrod;
  auto part = [&](bool imag) {
    auto f = [&](double s) {
      const cplx v = std::exp(-0.5 * (x + s) * (x + s));
      return imag ? v.imag() : v.real();
    };
    return gauss_kronrod<double, 61>::integrate(f, 0.0, 60.0, 15, 1e-15);
  };
  return cplx{part(false), part(true)} / specfun::sqrt_2pi;
}

// (1/sqrt(2 pi)) int_{-rho/2}^{rho/2} e^{-(z+s)^2/2} ds
cplx L_quadrature(cplx z, double rho) {
  using boost::math::quadrature::gauss_kronrod;
  auto part = [&](bool imag) {
    auto f = [&](double s) {
      const cplx v = std::exp(-0.5 * (z + s) * (z + s));
      return imag ? v.imag() : v.real();
    };
    return gauss_kronrod<double, 61>::integrate(f, -0.5 * rho, 0.5 * rho, 15, 1e-15);
  };
  return cplx{part(false), part(true)} / specfun::sqrt_2pi;
}

Outcome special_functions() {
  using namespace specfun;
  using boost::multiprecision::cpp_bin_float_50;
  Checks ch;
  std::mt19937_64 rng(505);

  double reflect = 0.0;
  for (int i = 0; i < 100; ++i) {
    const cplx x = random_disk(rng, 5.0);
    reflect = std::max(reflect, std::abs(error_F(x) + error_F(-x) - 1.0));
  }
  ch.le("F(0) - 1/2", std::abs(error_F(0.0) - 0.5), 1e-15);
  ch.le("F reflection", reflect, 1e-12);
  ch.le("F(3) vs quadrature", rel(error_F(3.0), F_quadrature(3.0)), 1e-12);

  double band = 0.0;
  std::uniform_real_distribution<double> rr(0.01, 10.0);
  for (int i = 0; i < 100; ++i) {
    const cplx z = random_disk(rng, 4.0);
    const double rho = rr(rng);
    band = std::max(band, std::abs(band_error_L(z, rho) - (error_F(z - 0.5 * rho) - error_F(z + 0.5 * rho))));
  }
  ch.le("band reduction", band, 1e-12);
  ch.le("L_2(1+0.5i) vs quadrature", rel(band_error_L({1.0, 0.5}, 2.0), L_quadrature({1.0, 0.5}, 2.0)), 1e-10);

  double ml = 0.0;
  for (int i = 0; i < 200; ++i) {
    const cplx z = random_disk(rng, 20.0);
    ml = std::max(ml, rel(mittag_leffler(1.0, z), std::exp(z)));
    if (std::abs(z) > 1e-3) ml = std::max(ml, rel(mittag_leffler(2.0, z), (std::exp(z) - 1.0) / z));
  }
  ch.le("Mittag-Leffler special cases", ml, 1e-12);

  const double N = 20, a = 1.5, x = 7.0;
  const cplx bridge = std::exp(x) / std::pow(x, a) * (regularized_gamma_q(N + a, x) - regularized_gamma_q(a, x));
  ch.le("incomplete-gamma bridge", rel(trunc_exp(19, a, x), bridge), 1e-10);

  double qerr = 0.0;
  std::uniform_real_distribution<double> ua(0.1, 200.0), ux(0.0, 300.0);
  for (int i = 0; i < 200; ++i) {
    const double s = ua(rng), t = ux(rng);
    const double ref = boost::math::gamma_q(cpp_bin_float_50(s), cpp_bin_float_50(t)).convert_to<double>();
    if (ref > 1e-280) qerr = std::max(qerr, std::abs(regularized_gamma_q(s, t) - ref) / ref);
  }
  ch.le("Q vs 50-digit oracle", qerr, 1e-12);

  double asym = 0.0;
  const double s = 1e4;
  for (double z : {-1.0, 0.0, 1.0}) {
    const double q = regularized_gamma_q(s + 1.0, s + std::sqrt(s) * z);
    const double u = 0.5 * std::erfc(z / std::numbers::sqrt2) +
                     std::exp(-0.5 * z * z) * (2.0 + z * z) / (3.0 * std::sqrt(2.0 * std::numbers::pi * s));
    asym = std::max(asym, std::abs(q - u) * s);
  }
  ch.le("uniform asymptotic at s=1e4, |diff|*s", asym, 1.0);
  return ch.done();
}

// ---------------------------------------------------------------- 6

Outcome monte_carlo() {
  const int workers = std::max(1u, std::thread::hardware_concurrency());
  mc::SamplerConfig cfg;
  cfg.N = 30;
  cfg.alpha_int = 2;
  cfg.seed = 2024;
  cfg.replicas = 20000;
  cfg.workers = workers;
  mc::SuiteTargets t;
  t.d11_lambda = 3.5;
  t.d12_lambda1 = 3.3;
  t.d12_lambda2 = {3.3, 1.5};
  t.bandwidth = 0.35;
  const auto r = mc::overlap_suite(cfg, t);
  const finite::ModelParams p{30, 2.0, 1.0};
  const cplx d11 = finite::D11(1, p, {t.d11_lambda});
  const cplx d12 = finite::D12(2, p, {t.d12_lambda1, t.d12_lambda2});

  mc::SamplerConfig ks_cfg = cfg;
  ks_cfg.N = 10;
  ks_cfg.replicas = 2000;
  const auto ks = mc::ks_moduli(ks_cfg);

  Checks ch;
  const double dev = std::abs(r.d11.value - d11);
  ch.le("(a) |D11 MC - analytic| / std_error", dev / r.d11.std_error(), 3.0);
  ch.le("(a) relative deviation", dev / std::abs(d11), 0.05);
  ch.le("(b) O11 z-score", r.o11.z_score(), 3.0);
  ch.le("(b) O12 z-score", r.o12.z_score(), 3.0);
  ch.flag("(c) KS p-value > 1e-3", ks.p_value > 1e-3, "p = " + sci(ks.p_value));
  ch.le("discard rate", double(r.discarded) / cfg.replicas, 1e-3);
  std::ostringstream info;
  info << "D11 MC " << sci(r.d11.value.real()) << " +- " << sci(r.d11.std_error()) << " vs " << sci(d11.real())
       << "; D12 MC " << sci(r.d12.value.real()) << sci(r.d12.value.imag()) << "i +- " << sci(r.d12.std_error()) << " vs "
       << sci(d12.real()) << sci(d12.imag()) << "i; workers " << workers;
  ch.flag("info", true, info.str());
  return ch.done();
}

// ---------------------------------------------------------------- 7

Outcome convergence() {
  using namespace limits;
  const std::vector<int> Ns{50, 100, 200, 400};
  auto probe = [&](Regime r, double b, double rho, cplx p) {
    RegimePoint rp;
    rp.regime = r;
    rp.b = b;
    rp.rho = rho;
    rp.p = p;
    return converge_probe(rp, Ns, default_probe_points(r));
  };
  const auto bulk = probe(Regime::bulk, 1.0, 1.0, std::sqrt(1.5));
  const auto edge = probe(Regime::outer_edge, 1.0, 1.0, 0.0);
  const auto weak = probe(Regime::weak, 0.0, 2.0, 0.0);
  const auto sing = probe(Regime::singular, 2.0, 1.0, 0.0);
  Checks ch;
  ch.le("bulk |exponent + 1|", std::abs(bulk.exponent + 1.0), 0.2);
  ch.le("outer edge |exponent + 1/2|", std::abs(edge.exponent + 0.5), 0.2);
  ch.flag("weak monotone", weak.monotone_decreasing(), "exponent " + sci(weak.exponent));
  ch.flag("singular monotone", sing.monotone_decreasing(), "exponent " + sci(sing.exponent));
  return ch.done();
}

// ---------------------------------------------------------------- 8

cplx edge_H_fd(cplx a, cplx b, cplx c, cplx d, cplx f) {
  using specfun::error_F;
  auto inner = [&](cplx x) {
    const cplx g = std::exp(-f) * error_F(b + x) * error_F(c + x) - error_F(d + x) * error_F(a + x) +
                   f * error_F(d) * error_F(a + x);
    return std::exp(0.5 * (a + x) * (a + x)) * g;
  };
  const double h = 1e-5;
  return -std::exp(-0.5 * a * a) * (inner(h) - inner(-h)) / (2.0 * h) / limits::edge_F_script(a);
}

Outcome cross_identities() {
  using namespace limits;
  Checks ch;
  const cplx z = 0.2, e = -0.1, c = 0.05;
  ch.le("weak->bulk at rho=60", rel(weak_kernel(z, z, e, c, c, 60.0), bulk_kernel(z, z, e, c, c)), 0.1);
  ch.le("|L_50(0)/(50^2/4) - 1|", std::abs(weak_L_script(0.0, 50.0) / (50.0 * 50.0 / 4.0) - 1.0), 0.1);

  // rho -> 0 with alpha = rho/2: pi (1/alpha^2) K(zeta/alpha, zeta/alpha | chi/alpha) on the diagonal
  const double rho = 0.05, al = rho / 2.0;
  const cplx zeta{0.0, 0.3}, chi{};
  const cplx u = zeta / al, x = chi / al;
  const double ratio = std::abs(std::numbers::pi * weak_kernel(u, std::conj(u), u, x, std::conj(x), rho) / (al * al));
  ch.le("rho->0 sine diagonal |ratio - 1|", std::abs(ratio - 1.0), 0.15);

  std::mt19937_64 rng(808);
  double hw = 0.0;
  for (int i = 0; i < 50; ++i) {
    const cplx a = random_disk(rng, 2.0), b = random_disk(rng, 2.0), cc = random_disk(rng, 2.0);
    const cplx d = random_disk(rng, 2.0), f = random_disk(rng, 2.0);
    const cplx h = edge_H(a, b, cc, d, f);
    hw = std::max(hw, std::abs(h - edge_H_fd(a, b, cc, d, f)) / std::max(1.0, std::abs(h)));
  }
  ch.le("edge_H vs finite difference", hw, 1e-8);
  return ch.done();
}

// ---------------------------------------------------------------- 9

struct CsvRun {
  int exit_code = -1;
  std::vector<std::vector<double>> rows; // numeric columns param,re_arg,im_arg,re_val,im_val
};

CsvRun curves(const std::string& args) {
  CsvRun r;
  FILE* p = popen((std::string(OVL_CLI_PATH) + " curves " + args + " 2>/dev/null").c_str(), "r");
  if (!p) return r;
  std::string text;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) text.append(buf, n);
  const int status = pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line); // config echo
  std::getline(in, line); // column names
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string f;
    std::vector<double> v;
    for (int i = 0; std::getline(ls, f, ','); ++i)
      if (i >= 2) v.push_back(std::stod(f));
    r.rows.push_back(v);
  }
  return r;
}

Outcome figure_data() {
  Checks ch;
  const auto F = curves("--figure F --xmin -4 --xmax 4 --steps 400");
  ch.flag("F run", F.exit_code == 0 && F.rows.size() == 401);
  if (F.rows.size() == 401) {
    ch.le("|F(0) - 1/sqrt(2 pi)|", std::abs(F.rows[200][3] - 1.0 / specfun::sqrt_2pi), 1e-15);
    bool decreasing = true;
    for (std::size_t i = 1; i < F.rows.size(); ++i) decreasing = decreasing && F.rows[i][3] < F.rows[i - 1][3];
    ch.flag("F decreasing on [-4,4]", decreasing);
  }

  const auto L = curves("--figure L --xmin -4 --xmax 4 --steps 400");
  ch.flag("L run (rho 0.5, 2, 3)", L.exit_code == 0 && L.rows.size() == 3 * 401);
  double im = 0.0;
  for (const auto& r : L.rows) im = std::max(im, std::abs(r[4]) / std::max(1.0, std::abs(r[3])));
  ch.le("L imaginary part on the real axis", im, 1e-12);
  std::vector<double> params;
  for (const auto& r : L.rows)
    if (params.empty() || params.back() != r[0]) params.push_back(r[0]);
  ch.flag("L families", params == std::vector<double>{0.5, 2.0, 3.0});

  const auto E = curves("--figure E --xmin 0 --xmax 4 --steps 400");
  bool finite = E.exit_code == 0 && E.rows.size() == 3 * 401;
  for (const auto& r : E.rows) finite = finite && std::isfinite(r[3]) && std::abs(r[4]) <= 1e-12 * std::max(1.0, std::abs(r[3]));
  ch.flag("E_b(x|x) for b = 0.5, 1, 3 finite and real", finite);

  for (const std::string fig : {"bulk", "weak"}) {
    const auto S = curves("--figure " + fig + " --grid 50 --chi 0 --rho 10");
    bool ok = S.exit_code == 0 && S.rows.size() == 2500;
    for (const auto& r : S.rows) ok = ok && std::isfinite(r[3]) && std::isfinite(r[4]);
    ch.flag(fig + " surface 50x50", ok);
  }
  return ch.done();
}

} // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "master kernel identity", master_identity},
      {2, "oracle triangle", oracle_triangle},
      {3, "LDU, two-path d, three-term contract", ldu_and_three_term},
      {4, "alpha=0 Ginibre regression", ginibre_regression},
      {5, "special functions", special_functions},
      {6, "Monte Carlo vs analytic", monte_carlo},
      {7, "scaling-limit convergence", convergence},
      {8, "limit-function cross-identities", cross_identities},
      {9, "figure data", figure_data},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("criterion %d %s: %s [%.1f s] %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
