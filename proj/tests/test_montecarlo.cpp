#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <boost/math/distributions/gamma.hpp>
#include <gtest/gtest.h>

#include "ovl/finite_kernel.hpp"
#include "ovl/montecarlo.hpp"

using namespace ovl;
using namespace ovl::mc;

namespace {

SamplerConfig config(int N, int alpha, int replicas, std::uint64_t seed = 1, int workers = 1) {
  SamplerConfig c;
  c.N = N;
  c.alpha_int = alpha;
  c.replicas = replicas;
  c.seed = seed;
  c.workers = workers;
  return c;
}

int index_of(const Eigen::VectorXcd& z, cplx target) {
  for (int i = 0; i < z.size(); ++i)
    if (std::abs(z(i) - target) < 1e-12) return i;
  return -1;
}

} // namespace

TEST(Philox, KnownAnswer) {
  const auto out = Philox4x32(0)({0, 0, 0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Sampler, Validation) {
  EXPECT_THROW(sample_matrix(config(1, 0, 1), 0), validation_error);
  EXPECT_THROW(sample_matrix(config(4, -1, 1), 0), validation_error);
  EXPECT_THROW(sample_matrix(config(4, 0, 0), 0), validation_error);
  EXPECT_THROW(sample_matrix(config(4, 0, 1, 1, 0), 0), validation_error);
}

TEST(Sampler, Deterministic) {
  const auto cfg = config(6, 2, 1, 42);
  const Eigen::MatrixXcd a = sample_matrix(cfg, 17), b = sample_matrix(cfg, 17);
  EXPECT_TRUE((a.array() == b.array()).all());
  EXPECT_FALSE((a.array() == sample_matrix(cfg, 18).array()).all());
  EXPECT_FALSE((a.array() == sample_matrix(config(6, 2, 1, 43), 17).array()).all());
}

TEST(Sampler, IndependentOfWorkerCount) {
  auto fn = [](int, const Spectrum& s) { return s.z; };
  const auto one = map_replicas(config(8, 1, 30, 5, 1), false, fn);
  const auto three = map_replicas(config(8, 1, 30, 5, 3), false, fn);
  ASSERT_EQ(one.items.size(), three.items.size());
  for (std::size_t r = 0; r < one.items.size(); ++r) {
    ASSERT_EQ(one.items[r].has_value(), three.items[r].has_value());
    if (one.items[r]) EXPECT_TRUE((one.items[r]->array() == three.items[r]->array()).all());
  }
  const auto e1 = estimate_D11(config(8, 1, 200, 5, 1), 2.0, 0.5);
  const auto e3 = estimate_D11(config(8, 1, 200, 5, 3), 2.0, 0.5);
  EXPECT_EQ(e1.value, e3.value);
  EXPECT_EQ(e1.std_error_re, e3.std_error_re);
}

TEST(Sampler, GinibreEntryVariance) {
  const auto cfg = config(3, 0, 10000, 11);
  double sum = 0.0;
  for (int r = 0; r < cfg.replicas; ++r) sum += std::norm(sample_matrix(cfg, r)(0, 0));
  EXPECT_NEAR(sum / cfg.replicas, 1.0, 0.05);
}

TEST(Sampler, HaarUnitary) {
  ReplicaRng rng(3, 0);
  const Eigen::MatrixXcd U = haar_unitary(rng, 7);
  EXPECT_LT((U.adjoint() * U - Eigen::MatrixXcd::Identity(7, 7)).norm(), 1e-13);
}

// Independent check of the squared-moduli law: the same mixture drawn directly from Gamma variates.
TEST(Sampler, ModuliLawMatchesGammaDraws) {
  const auto res = ks_moduli(config(10, 2, 2000, 3));
  EXPECT_EQ(res.n, 20000);
  EXPECT_GT(res.p_value, 1e-3) << res.statistic;

  std::mt19937_64 rng(99);
  std::vector<double> xs;
  for (int r = 0; r < 2000; ++r)
    for (int k = 0; k < 10; ++k) xs.push_back(std::gamma_distribution<double>(k + 3.0, 1.0)(rng));
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double F = 0.0;
    for (int k = 0; k < 10; ++k) F += boost::math::cdf(boost::math::gamma_distribution<double>(k + 3.0), xs[i]);
    F /= 10.0;
    d = std::max({d, (i + 1) / n - F, F - i / n});
    EXPECT_NEAR(F, moduli_mixture_cdf(10, 2, xs[i]), 1e-13);
  }
  EXPECT_LT(d, 1.95 / std::sqrt(n));
}

TEST(Kolmogorov, Survival) {
  EXPECT_EQ(kolmogorov_q(0.0), 1.0);
  EXPECT_NEAR(kolmogorov_q(1.36), 0.0494, 2e-4);
  EXPECT_NEAR(kolmogorov_q(1.63), 0.0098, 2e-4);
}

TEST(Eig, DiagonalIsNormal) {
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = cplx{0.0, 2.0};
  const auto s = eig_full(A);
  const Eigen::MatrixXcd O = overlaps(s);
  EXPECT_LT((O - Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Eig, JordanLikeOverlap) {
  for (double kappa : {0.5, 2.0, 10.0}) {
    Eigen::MatrixXcd A(2, 2);
    A << 0.0, kappa, 0.0, 1.0;
    const auto s = eig_full(A);
    const int i = index_of(s.z, 0.0);
    ASSERT_GE(i, 0);
    EXPECT_NEAR(overlap(s, i, i).real(), 1.0 + kappa * kappa, 1e-12 * (1.0 + kappa * kappa));
    EXPECT_NEAR(overlap(s, 1 - i, 1 - i).real(), 1.0 + kappa * kappa, 1e-12 * (1.0 + kappa * kappa));
  }
}

TEST(Eig, ReconstructionAndOverlapProperties) {
  const auto cfg = config(12, 1, 20, 8);
  for (int r = 0; r < cfg.replicas; ++r) {
    const Eigen::MatrixXcd A = sample_matrix(cfg, r);
    const auto s = eig_full(A);
    const Eigen::MatrixXcd back = s.R * s.z.asDiagonal() * s.L.adjoint();
    EXPECT_LT((back - A).norm(), 1e-8 * A.norm());
    const Eigen::MatrixXcd O = overlaps(s);
    for (int i = 0; i < cfg.N; ++i) {
      EXPECT_GE(O(i, i).real(), 1.0 - 1e-8);
      EXPECT_LT(std::abs(O(i, i).imag()), 1e-8 * O(i, i).real());
      EXPECT_GE(product_formula_O11(s.z, i), 1.0);
      for (int j = 0; j < cfg.N; ++j) {
        EXPECT_LT(std::abs(O(i, j) - std::conj(O(j, i))), 1e-10 * std::abs(O(i, j)) + 1e-14);
        EXPECT_LT(std::abs(O(i, j) - overlap(s, i, j)), 1e-10 * std::abs(O(i, j)) + 1e-14);
      }
    }
  }
}

TEST(Eig, NearDegenerateIsFlagged) {
  EXPECT_THROW(eig_full(Eigen::MatrixXcd::Identity(3, 3)), numerical_error);
  EXPECT_THROW(eig_values(Eigen::MatrixXcd::Identity(3, 3)), numerical_error);
  EXPECT_THROW(overlaps(eig_values(Eigen::MatrixXcd::Random(3, 3))), validation_error);
}

TEST(ProductFormula, Examples) {
  Eigen::VectorXcd z2(2);
  z2 << 0.0, 2.0;
  EXPECT_DOUBLE_EQ(product_formula_O11(z2, 0), 1.25);
  EXPECT_EQ(product_formula_O12(z2, 0, 1), cplx(-0.25));

  Eigen::VectorXcd z3(3);
  z3 << 0.0, 2.0, cplx{0.0, 10.0};
  EXPECT_NEAR(product_formula_O11(z3, 0), 1.25 * 1.01, 1e-15);
  // (0 - 10i) * conj(2 - 10i) = 100 - 20i
  const cplx expect = -0.25 * (1.0 + 1.0 / cplx{100.0, -20.0});
  EXPECT_LT(std::abs(product_formula_O12(z3, 0, 1) - expect), 1e-15);
  EXPECT_LT(std::abs(product_formula_O12(z3, 1, 0) - std::conj(expect)), 1e-15);

  Eigen::VectorXcd zc(3);
  zc << 0.5, 0.5, 1.0;
  EXPECT_THROW(product_formula_O11(zc, 0), validation_error);
  EXPECT_THROW(product_formula_O12(zc, 0, 1), validation_error);
}

TEST(BatchMean, Basics) {
  std::vector<cplx> xs;
  for (int i = 0; i < 100; ++i) xs.push_back(cplx(i % 2 ? 1.0 : 3.0, 0.0));
  const auto e = batch_mean(xs);
  EXPECT_EQ(e.used, 100);
  EXPECT_DOUBLE_EQ(e.value.real(), 2.0);
  EXPECT_EQ(e.std_error_re, 0.0);
  EXPECT_EQ(e.std_error_im, 0.0);
  EXPECT_EQ(batch_mean({}).used, 0);

  // batch-means error over 20 independent runs averages to sigma / sqrt(n)
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  double se_re = 0.0, se_im = 0.0;
  for (int run = 0; run < 20; ++run) {
    std::vector<cplx> ys;
    for (int i = 0; i < 2000; ++i) ys.push_back({g(rng), 2.0 * g(rng)});
    const auto f = batch_mean(ys);
    se_re += f.std_error_re / 20.0;
    se_im += f.std_error_im / 20.0;
  }
  EXPECT_NEAR(se_re * std::sqrt(2000.0), 1.0, 0.1);
  EXPECT_NEAR(se_im * std::sqrt(2000.0), 2.0, 0.2);
}

TEST(ConditionalMean, O11AndO12AgreeWithEigenvectors) {
  const auto cfg = config(10, 1, 10000, 21);
  const auto t11 = conditional_mean_O11(cfg, 1.0);
  EXPECT_TRUE(t11.passes(3.0)) << t11.mean_diff << " z=" << t11.z_score();
  EXPECT_LT(static_cast<double>(t11.discarded) / cfg.replicas, 1e-3);
  const auto t12 = conditional_mean_O12(config(10, 1, 10000, 22), 1.0, cplx{1.0, 1.0});
  EXPECT_TRUE(t12.passes(3.0)) << t12.mean_diff << " z=" << t12.z_score();
  EXPECT_GT(t12.used, 5000);
}

TEST(Estimator, D11MatchesAnalytic) {
  const auto cfg = config(10, 1, 6000, 31);
  const cplx lambda{1.6, 0.8};
  const auto e = estimate_D11(cfg, lambda, 0.35);
  const cplx exact = finite::D11(1, {10, 1.0}, {lambda});
  EXPECT_LE(std::abs(e.value - exact), 3.0 * e.std_error()) << e.value << " vs " << exact;
  EXPECT_GT(e.used, 5990);

  const auto half = estimate_D11(cfg, lambda, 0.175);
  EXPECT_LE(std::abs(half.value - e.value), half.std_error() + e.std_error());

  const auto far = estimate_D11(config(10, 1, 500, 32), 3.0 * std::sqrt(10.0), 0.35);
  EXPECT_LT(std::abs(far.value), 1e-3 * std::abs(exact));
  EXPECT_THROW(estimate_D11(cfg, lambda, 0.0), validation_error);
}

TEST(Estimator, D12SignAndSwapSymmetry) {
  const auto cfg = config(10, 1, 4000, 41);
  const cplx l1{1.6, 0.3}, l2{1.6, 0.8};
  const auto a = estimate_D12(cfg, l1, l2, 0.2);
  const auto b = estimate_D12(cfg, l2, l1, 0.2);
  const cplx exact = finite::D12(2, {10, 1.0}, {l1, l2});
  EXPECT_LT(exact.real(), 0.0);
  EXPECT_LT(a.value.real(), 0.0);
  EXPECT_LE(std::abs(a.value - exact), 3.0 * a.std_error()) << a.value << " vs " << exact;
  EXPECT_LT(std::abs(a.value - std::conj(b.value)), 1e-12 * std::abs(a.value));
  EXPECT_THROW(estimate_D12(cfg, l1, l2, -1.0), validation_error);
}

TEST(Estimator, D12MatchesAnalytic) {
  const auto cfg = config(10, 1, 6000, 51);
  const cplx l1{1.5, 0.0}, l2{1.5, 1.2};
  const auto e = estimate_D12(cfg, l1, l2, 0.35);
  const cplx exact = finite::D12(2, {10, 1.0}, {l1, l2});
  EXPECT_LE(std::abs(e.value - exact), 3.0 * e.std_error()) << e.value << " vs " << exact;
}

TEST(Batch, RecordsAreConsistent) {
  const auto rows = sample_batch(config(5, 1, 4, 61));
  ASSERT_EQ(rows.size(), 20u);
  for (const auto& r : rows) {
    EXPECT_GE(r.O11_eig, 1.0 - 1e-8);
    EXPECT_GE(r.O11_prod, 1.0);
  }
  EXPECT_EQ(rows.front().replica, 0);
  EXPECT_EQ(rows.back().replica, 3);
  EXPECT_EQ(rows.back().eig_index, 4);
}
