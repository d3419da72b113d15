#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ovl/errors.hpp"
#include "ovl/specfun.hpp"
#include "ovl/stabilized.hpp"

namespace ovl::mc {

struct SamplerConfig {
  int N = 2;
  int alpha_int = 0;
  std::uint64_t seed = 0;
  int replicas = 1;
  int workers = 1;

  void validate() const {
    if (N < 2) throw validation_error("sampler: N must be >= 2");
    if (alpha_int < 0) throw validation_error("sampler: alpha must be a nonnegative integer");
    if (replicas < 1) throw validation_error("sampler: replicas must be >= 1");
    if (workers < 1) throw validation_error("sampler: workers must be >= 1");
  }
};

// Philox4x32-10 counter-based generator
class Philox4x32 {
public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t key) : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  Block operator()(Block ctr) const {
    std::array<std::uint32_t, 2> k = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1], static_cast<std::uint32_t>(p0)};
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    return ctr;
  }

private:
  std::array<std::uint32_t, 2> key_;
};

// Stream for one replica: counter = (draw, attempt, replica lo, replica hi).
class ReplicaRng {
public:
  ReplicaRng(std::uint64_t seed, std::uint64_t replica, std::uint32_t attempt = 0)
      : gen_(seed), replica_(replica), attempt_(attempt) {}

  // two uniforms in (0, 1]
  std::array<double, 2> uniform_pair() {
    const auto b = gen_({draw_++, attempt_, static_cast<std::uint32_t>(replica_), static_cast<std::uint32_t>(replica_ >> 32)});
    const auto to_unit = [](std::uint32_t hi, std::uint32_t lo) {
      const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
      return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
    };
    return {to_unit(b[0], b[1]), to_unit(b[2], b[3])};
  }

  // standard complex Gaussian, E|g|^2 = 1
  cplx gaussian() {
    const auto [u1, u2] = uniform_pair();
    return std::polar(std::sqrt(-std::log(u1)), 2.0 * std::numbers::pi * u2);
  }

private:
  Philox4x32 gen_;
  std::uint64_t replica_;
  std::uint32_t attempt_;
  std::uint32_t draw_ = 0;
};

inline Eigen::MatrixXcd ginibre(ReplicaRng& rng, int rows, int cols) {
  Eigen::MatrixXcd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.gaussian();
  return m;
}

inline Eigen::MatrixXcd haar_unitary(ReplicaRng& rng, int n) {
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(ginibre(rng, n, n));
  Eigen::MatrixXcd Q = qr.householderQ();
  const Eigen::MatrixXcd& R = qr.matrixQR();
  for (int j = 0; j < n; ++j) {
    const double a = std::abs(R(j, j));
    if (a == 0.0) throw numerical_error("haar_unitary: rank-deficient Ginibre draw");
    Q.col(j) *= R(j, j) / a;
  }
  return Q;
}

inline Eigen::MatrixXcd sample_matrix_attempt(const SamplerConfig& cfg, std::uint64_t replica, std::uint32_t attempt) {
  ReplicaRng rng(cfg.seed, replica, attempt);
  const Eigen::MatrixXcd G = ginibre(rng, cfg.N + cfg.alpha_int, cfg.N);
  const Eigen::MatrixXcd U = haar_unitary(rng, cfg.N);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G.adjoint() * G);
  if (es.info() != Eigen::Success) throw numerical_error("sample_matrix: Hermitian eigensolver failed");
  const Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().adjoint() * U;
}

/// A = (G^dagger G)^{1/2} U for replica `replica` (retried once with fresh randomness).
inline Eigen::MatrixXcd sample_matrix(const SamplerConfig& cfg, std::uint64_t replica) {
  cfg.validate();
  try {
    return sample_matrix_attempt(cfg, replica, 0);
  } catch (const numerical_error&) {
    return sample_matrix_attempt(cfg, replica, 1);
  }
}

struct Spectrum {
  Eigen::VectorXcd z;
  Eigen::MatrixXcd R; // right eigenvectors (columns)
  Eigen::MatrixXcd L; // left eigenvectors (columns), L^dagger R = I
  bool has_vectors = false;
};

struct Tolerances {
  double residual = 1e-8;
  double gap = 1e-10;
};

inline void check_gap(const Eigen::VectorXcd& z, double scale, double tol) {
  for (int i = 0; i < z.size(); ++i)
    for (int j = i + 1; j < z.size(); ++j)
      if (std::abs(z(i) - z(j)) < tol * scale) throw numerical_error("eig: near-degenerate spectrum");
}

/// Eigenvalues with bi-orthogonal right/left eigenvectors.
inline Spectrum eig_full(const Eigen::MatrixXcd& A, Tolerances tol = {}) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, true);
  if (es.info() != Eigen::Success) throw numerical_error("eig: eigensolver failed");
  Spectrum s;
  s.z = es.eigenvalues();
  s.R = es.eigenvectors();
  const double scale = std::max(A.norm(), std::numeric_limits<double>::min());
  check_gap(s.z, scale, tol.gap);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(s.R);
  const Eigen::MatrixXcd Rinv = lu.inverse();
  s.L = Rinv.adjoint();
  s.has_vectors = true;
  const double res = (A * s.R - s.R * s.z.asDiagonal()).colwise().norm().maxCoeff();
  if (!(res <= tol.residual * scale)) throw numerical_error("eig: eigen-residual above tolerance");
  const double bio = (Rinv * s.R - Eigen::MatrixXcd::Identity(A.rows(), A.cols())).cwiseAbs().maxCoeff();
  if (!(bio <= tol.residual * std::max(1.0, s.R.norm() * Rinv.norm()))) throw numerical_error("eig: bi-orthogonality lost");
  return s;
}

inline Spectrum eig_values(const Eigen::MatrixXcd& A, Tolerances tol = {}) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, false);
  if (es.info() != Eigen::Success) throw numerical_error("eig: eigensolver failed");
  Spectrum s;
  s.z = es.eigenvalues();
  check_gap(s.z, std::max(A.norm(), std::numeric_limits<double>::min()), tol.gap);
  return s;
}

/// O_ij = <L_i|L_j><R_j|R_i>
inline cplx overlap(const Spectrum& s, int i, int j) {
  if (!s.has_vectors) throw validation_error("overlap: spectrum has no eigenvectors");
  return s.L.col(i).dot(s.L.col(j)) * s.R.col(j).dot(s.R.col(i));
}

inline Eigen::MatrixXcd overlaps(const Spectrum& s) {
  if (!s.has_vectors) throw validation_error("overlaps: spectrum has no eigenvectors");
  return (s.L.adjoint() * s.L).cwiseProduct((s.R.adjoint() * s.R).transpose());
}

inline double product_formula_O11(const Eigen::VectorXcd& z, int i) {
  double prod = 1.0;
  for (int j = 0; j < z.size(); ++j) {
    if (j == i) continue;
    const double d2 = std::norm(z(i) - z(j));
    if (d2 < 1e-24) throw validation_error("product_formula_O11: coincident eigenvalues");
    prod *= 1.0 + 1.0 / d2;
  }
  return prod;
}

inline cplx product_formula_O12(const Eigen::VectorXcd& z, int i, int j) {
  const double d2 = std::norm(z(i) - z(j));
  if (d2 < 1e-24) throw validation_error("product_formula_O12: coincident eigenvalues");
  cplx prod = -1.0 / d2;
  for (int k = 0; k < z.size(); ++k) {
    if (k == i || k == j) continue;
    const cplx den = (z(i) - z(k)) * std::conj(z(j) - z(k));
    if (std::abs(den) < 1e-24) throw validation_error("product_formula_O12: coincident eigenvalues");
    prod *= 1.0 + 1.0 / den;
  }
  return prod;
}

// ---------------------------------------------------------------- replica driver

template <class T>
struct ReplicaResults {
  std::vector<std::optional<T>> items; // indexed by replica; empty when discarded
  int discarded = 0;
  double discard_rate() const { return items.empty() ? 0.0 : static_cast<double>(discarded) / items.size(); }
};

/// Runs fn(replica, spectrum) for every replica on cfg.workers threads; results are
/// stored by replica index so the output does not depend on the worker count.
template <class Fn>
auto map_replicas(const SamplerConfig& cfg, bool vectors, Fn&& fn)
    -> ReplicaResults<std::invoke_result_t<Fn&, int, const Spectrum&>> {
  using T = std::invoke_result_t<Fn&, int, const Spectrum&>;
  cfg.validate();
  ReplicaResults<T> out;
  out.items.resize(cfg.replicas);
  const int workers = std::min(cfg.workers, cfg.replicas);
  auto work = [&](int w) {
    for (int r = w; r < cfg.replicas; r += workers) {
      try {
        const Eigen::MatrixXcd A = sample_matrix(cfg, static_cast<std::uint64_t>(r));
        const Spectrum s = vectors ? eig_full(A) : eig_values(A);
        out.items[r] = fn(r, s);
      } catch (const numerical_error&) {
        out.items[r].reset();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& it : out.items)
    if (!it) ++out.discarded;
  return out;
}

// ---------------------------------------------------------------- estimators

struct Estimate {
  cplx value{};
  double std_error_re = 0.0;
  double std_error_im = 0.0;
  int used = 0;
  int discarded = 0;
  long long hits = 0;

  double std_error() const { return std::hypot(std_error_re, std_error_im); }
  double discard_rate() const { return used + discarded == 0 ? 0.0 : static_cast<double>(discarded) / (used + discarded); }
};

/// Mean and batch-means standard error of per-replica values (replica order).
inline Estimate batch_mean(const std::vector<cplx>& xs, int batches = 50) {
  Estimate e;
  e.used = static_cast<int>(xs.size());
  if (xs.empty()) return e;
  cplx sum{};
  for (const auto& x : xs) sum += x;
  e.value = sum / static_cast<double>(xs.size());
  const int B = std::max(2, std::min<int>(batches, static_cast<int>(xs.size())));
  std::vector<cplx> means(B);
  std::vector<int> counts(B);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const int b = static_cast<int>(i * B / xs.size());
    means[b] += xs[i];
    ++counts[b];
  }
  double vr = 0.0, vi = 0.0;
  int nb = 0;
  for (int b = 0; b < B; ++b) {
    if (counts[b] == 0) continue;
    const cplx m = means[b] / static_cast<double>(counts[b]) - e.value;
    vr += m.real() * m.real();
    vi += m.imag() * m.imag();
    ++nb;
  }
  if (nb > 1) {
    e.std_error_re = std::sqrt(vr / (nb - 1) / nb);
    e.std_error_im = std::sqrt(vi / (nb - 1) / nb);
  }
  return e;
}

template <class T, class Fn>
Estimate fold_estimate(const ReplicaResults<T>& res, Fn&& value_of) {
  std::vector<cplx> xs;
  long long hits = 0;
  for (const auto& it : res.items)
    if (it) {
      xs.push_back(value_of(*it));
      hits += it->hits;
    }
  Estimate e = batch_mean(xs);
  e.discarded = res.discarded;
  e.hits = hits;
  return e;
}

struct WindowSample {
  cplx value{};
  long long hits = 0;
};

// Top-hat disk of radius h normalised in dA = d^2z/pi (area h^2).
inline WindowSample d11_window(const Eigen::VectorXcd& z, cplx lambda, double h) {
  WindowSample w;
  for (int i = 0; i < z.size(); ++i)
    if (std::abs(z(i) - lambda) < h) {
      w.value += product_formula_O11(z, i) / (h * h);
      ++w.hits;
    }
  return w;
}

inline WindowSample d12_window(const Eigen::VectorXcd& z, cplx l1, cplx l2, double h) {
  WindowSample w;
  for (int i = 0; i < z.size(); ++i) {
    if (std::abs(z(i) - l1) >= h) continue;
    for (int j = 0; j < z.size(); ++j) {
      if (j == i || std::abs(z(j) - l2) >= h) continue;
      w.value += product_formula_O12(z, i, j) / (h * h * h * h);
      ++w.hits;
    }
  }
  return w;
}

/// Windowed estimator of the one-point overlap-weighted density D11 at lambda.
inline Estimate estimate_D11(const SamplerConfig& cfg, cplx lambda, double bandwidth) {
  if (!(bandwidth > 0.0)) throw validation_error("estimate_D11: bandwidth must be positive");
  const auto res = map_replicas(cfg, false, [&](int, const Spectrum& s) { return d11_window(s.z, lambda, bandwidth); });
  return fold_estimate(res, [](const WindowSample& w) { return w.value; });
}

/// Windowed estimator of the two-point off-diagonal overlap-weighted density D12.
inline Estimate estimate_D12(const SamplerConfig& cfg, cplx lambda1, cplx lambda2, double bandwidth) {
  if (!(bandwidth > 0.0)) throw validation_error("estimate_D12: bandwidth must be positive");
  const auto res =
      map_replicas(cfg, false, [&](int, const Spectrum& s) { return d12_window(s.z, lambda1, lambda2, bandwidth); });
  return fold_estimate(res, [](const WindowSample& w) { return w.value; });
}

inline int nearest_index(const Eigen::VectorXcd& z, cplx target) {
  int best = 0;
  for (int i = 1; i < z.size(); ++i)
    if (std::abs(z(i) - target) < std::abs(z(best) - target)) best = i;
  return best;
}

struct ConditionalMeanTest {
  cplx mean_diff{};
  double std_error_re = 0.0;
  double std_error_im = 0.0;
  int used = 0;
  int discarded = 0;

  double z_score() const {
    const double zr = std_error_re > 0 ? std::abs(mean_diff.real()) / std_error_re : 0.0;
    const double zi = std_error_im > 0 ? std::abs(mean_diff.imag()) / std_error_im : 0.0;
    return std::max(zr, zi);
  }
  bool passes(double sigmas = 3.0) const { return z_score() <= sigmas; }
};

struct DiffSample {
  cplx value{};
  long long hits = 1;
};

inline ConditionalMeanTest to_test(const Estimate& e) {
  return {e.value, e.std_error_re, e.std_error_im, e.used, e.discarded};
}

/// Mean of O11(eigenvectors) - O11(product formula) for the eigenvalue nearest lambda.
inline ConditionalMeanTest conditional_mean_O11(const SamplerConfig& cfg, cplx lambda) {
  const auto res = map_replicas(cfg, true, [&](int, const Spectrum& s) {
    const int i = nearest_index(s.z, lambda);
    return DiffSample{overlap(s, i, i) - product_formula_O11(s.z, i)};
  });
  return to_test(fold_estimate(res, [](const DiffSample& d) { return d.value; }));
}

/// Same for O12 between the eigenvalues nearest lambda1 and lambda2 (replicas where both coincide are skipped).
inline ConditionalMeanTest conditional_mean_O12(const SamplerConfig& cfg, cplx lambda1, cplx lambda2) {
  const auto res = map_replicas(cfg, true, [&](int, const Spectrum& s) -> std::optional<DiffSample> {
    const int i = nearest_index(s.z, lambda1), j = nearest_index(s.z, lambda2);
    if (i == j) return std::nullopt;
    return DiffSample{overlap(s, i, j) - product_formula_O12(s.z, i, j)};
  });
  std::vector<cplx> xs;
  for (const auto& it : res.items)
    if (it && *it) xs.push_back((*it)->value);
  auto e = batch_mean(xs);
  e.discarded = res.discarded;
  return to_test(e);
}

struct SuiteTargets {
  cplx d11_lambda{};
  cplx d12_lambda1{};
  cplx d12_lambda2{};
  double bandwidth = 0.35;
};

struct SuiteResult {
  Estimate d11;
  Estimate d12;
  ConditionalMeanTest o11;
  ConditionalMeanTest o12;
  int discarded = 0;
  int replicas = 0;
};

/// One pass over the replicas producing both windowed estimators and both
/// eigenvector-vs-product-formula tests (O11 at the eigenvalue nearest d11_lambda,
/// O12 between the eigenvalues nearest d12_lambda1 and d12_lambda2).
inline SuiteResult overlap_suite(const SamplerConfig& cfg, const SuiteTargets& t) {
  if (!(t.bandwidth > 0.0)) throw validation_error("overlap_suite: bandwidth must be positive");
  struct Row {
    WindowSample d11, d12;
    cplx o11;
    std::optional<cplx> o12;
  };
  const auto res = map_replicas(cfg, true, [&](int, const Spectrum& s) {
    Row row;
    row.d11 = d11_window(s.z, t.d11_lambda, t.bandwidth);
    row.d12 = d12_window(s.z, t.d12_lambda1, t.d12_lambda2, t.bandwidth);
    const int k = nearest_index(s.z, t.d11_lambda);
    row.o11 = overlap(s, k, k) - product_formula_O11(s.z, k);
    const int i = nearest_index(s.z, t.d12_lambda1), j = nearest_index(s.z, t.d12_lambda2);
    if (i != j) row.o12 = overlap(s, i, j) - product_formula_O12(s.z, i, j);
    return row;
  });
  std::vector<cplx> a, b, c, d;
  long long hits11 = 0, hits12 = 0;
  for (const auto& it : res.items) {
    if (!it) continue;
    a.push_back(it->d11.value);
    b.push_back(it->d12.value);
    hits11 += it->d11.hits;
    hits12 += it->d12.hits;
    c.push_back(it->o11);
    if (it->o12) d.push_back(*it->o12);
  }
  SuiteResult out;
  out.d11 = batch_mean(a);
  out.d12 = batch_mean(b);
  out.d11.hits = hits11;
  out.d12.hits = hits12;
  out.o11 = to_test(batch_mean(c));
  out.o12 = to_test(batch_mean(d));
  out.discarded = res.discarded;
  out.replicas = cfg.replicas;
  out.d11.discarded = out.d12.discarded = out.o11.discarded = out.o12.discarded = res.discarded;
  return out;
}

// ---------------------------------------------------------------- moduli law

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
  long long n = 0;
};

/// Kolmogorov survival function Q_KS(t) = 2 sum_{j>=1} (-1)^{j-1} e^{-2 j^2 t^2}
inline double kolmogorov_q(double t) {
  if (t < 0.2) return 1.0;
  double sum = 0.0;
  for (int j = 1; j < 200; ++j) {
    const double term = std::exp(-2.0 * j * j * t * t);
    sum += (j % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// CDF of a uniformly chosen squared modulus: (1/N) sum_k P(k+alpha+1, x).
inline double moduli_mixture_cdf(int N, int alpha, double x) {
  double s = 0.0;
  for (int k = 0; k < N; ++k) s += specfun::regularized_gamma_p(k + alpha + 1.0, x);
  return s / N;
}

/// KS test of the pooled squared moduli against the mixture of Gamma(k+alpha+1) laws.
inline KsResult ks_moduli(const SamplerConfig& cfg) {
  const auto res = map_replicas(cfg, false, [&](int, const Spectrum& s) {
    std::vector<double> m(s.z.size());
    for (int i = 0; i < s.z.size(); ++i) m[i] = std::norm(s.z(i));
    return m;
  });
  std::vector<double> xs;
  for (const auto& it : res.items)
    if (it) xs.insert(xs.end(), it->begin(), it->end());
  std::sort(xs.begin(), xs.end());
  KsResult r;
  r.n = static_cast<long long>(xs.size());
  if (xs.empty()) return r;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = moduli_mixture_cdf(cfg.N, cfg.alpha_int, xs[i]);
    r.statistic = std::max({r.statistic, (i + 1) / n - F, F - i / n});
  }
  const double sn = std::sqrt(n);
  r.p_value = kolmogorov_q((sn + 0.12 + 0.11 / sn) * r.statistic);
  return r;
}

// ---------------------------------------------------------------- batch output

struct BatchRecord {
  int replica = 0;
  int eig_index = 0;
  cplx z{};
  double O11_eig = 0.0;
  double O11_prod = 0.0;
};

inline std::vector<BatchRecord> sample_batch(const SamplerConfig& cfg) {
  const auto res = map_replicas(cfg, true, [&](int r, const Spectrum& s) {
    std::vector<BatchRecord> rows;
    for (int i = 0; i < s.z.size(); ++i)
      rows.push_back({r, i, s.z(i), overlap(s, i, i).real(), product_formula_O11(s.z, i)});
    return rows;
  });
  std::vector<BatchRecord> out;
  for (const auto& it : res.items)
    if (it) out.insert(out.end(), it->begin(), it->end());
  return out;
}

} // namespace ovl::mc
