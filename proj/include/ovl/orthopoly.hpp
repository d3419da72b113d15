#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ovl/errors.hpp"
#include "ovl/finite_kernel.hpp"
#include "ovl/specfun.hpp"

namespace ovl::orthopoly {

using finite::ConditionPoint;

struct MomentMatrix {
  int size = 0;
  double alpha = 0.0;
  Eigen::MatrixXcd entries; // <z^i, z^j>
  Eigen::MatrixXcd reduced; // entries / Gamma(i+alpha+1)
};

struct LDUFactors {
  std::vector<cplx> d;
  std::vector<cplx> ell; // ell[p] = L(p+1, p)
  std::vector<cplx> u;   // u[p] = U(p, p+1)

  Eigen::MatrixXcd L() const {
    const int n = static_cast<int>(d.size());
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(n, n);
    for (int p = 0; p + 1 < n; ++p) m(p + 1, p) = ell[p];
    return m;
  }
  Eigen::MatrixXcd U() const {
    const int n = static_cast<int>(d.size());
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(n, n);
    for (int p = 0; p + 1 < n; ++p) m(p, p + 1) = u[p];
    return m;
  }
  Eigen::MatrixXcd D() const {
    return Eigen::Map<const Eigen::VectorXcd>(d.data(), static_cast<Eigen::Index>(d.size())).asDiagonal();
  }
};

// pbar(k, m): coefficient of zbar^m in Pbar_k; q(k, j): coefficient of w^j in Q_k.
struct PolyPair {
  Eigen::MatrixXcd pbar;
  Eigen::MatrixXcd q;
  std::vector<cplx> norms;
  int size() const { return static_cast<int>(norms.size()); }
};

inline MomentMatrix moment_matrix(int size, double alpha, const ConditionPoint& c) {
  if (size < 1) throw validation_error("moment_matrix: size must be >= 1");
  const cplx x = c.x();
  MomentMatrix mm;
  mm.size = size;
  mm.alpha = alpha;
  mm.reduced = Eigen::MatrixXcd::Zero(size, size);
  for (int i = 0; i < size; ++i) {
    mm.reduced(i, i) = alpha + i + 2.0 + x;
    if (i + 1 < size) {
      mm.reduced(i, i + 1) = -c.lambda * (i + alpha + 1.0);
      mm.reduced(i + 1, i) = -c.lambda_bar;
    }
  }
  mm.entries = mm.reduced;
  for (int i = 0; i < size; ++i) mm.entries.row(i) *= std::tgamma(i + alpha + 1.0);
  return mm;
}

/// LDU of the reduced moment matrix (tridiagonal elimination).
inline LDUFactors ldu_decompose(const MomentMatrix& mm) {
  const int n = mm.size;
  const auto& mu = mm.reduced;
  LDUFactors f;
  f.d.resize(n);
  f.ell.resize(n > 0 ? n - 1 : 0);
  f.u.resize(n > 0 ? n - 1 : 0);
  const double scale = mu.cwiseAbs().maxCoeff();
  for (int p = 0; p < n; ++p) {
    f.d[p] = mu(p, p);
    if (p > 0) f.d[p] -= f.ell[p - 1] * f.d[p - 1] * f.u[p - 1];
    if (std::abs(f.d[p]) <= 1e-14 * scale)
      throw numerical_error("ldu_decompose: singular leading minor at index " + std::to_string(p));
    if (p + 1 < n) {
      f.u[p] = mu(p, p + 1) / f.d[p];
      f.ell[p] = mu(p + 1, p) / f.d[p];
    }
  }
  return f;
}

/// Bi-orthogonal pair from the triangular inverses of the LDU factors.
inline PolyPair build_polys(int size, double alpha, const ConditionPoint& c) {
  const auto mm = moment_matrix(size, alpha, c);
  const auto f = ldu_decompose(mm);
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(size, size);
  const Eigen::MatrixXcd Linv = f.L().triangularView<Eigen::UnitLower>().solve(I);
  const Eigen::MatrixXcd Uinv = f.U().triangularView<Eigen::UnitUpper>().solve(I);
  PolyPair pp;
  pp.pbar = Linv;
  // rows of L^{-1} Gamma^{-1}, rescaled to be monic
  for (int k = 0; k < size; ++k)
    for (int m = 0; m <= k; ++m)
      pp.pbar(k, m) = Linv(k, m) * std::exp(std::lgamma(k + alpha + 1.0) - std::lgamma(m + alpha + 1.0));
  pp.q = Uinv.transpose();
  pp.norms.resize(size);
  for (int k = 0; k < size; ++k) pp.norms[k] = std::tgamma(k + alpha + 1.0) * f.d[k];
  return pp;
}

inline cplx eval_poly(const Eigen::MatrixXcd& coeffs, int k, cplx z) {
  cplx acc{};
  for (int j = k; j >= 0; --j) acc = acc * z + coeffs(k, j);
  return acc;
}

/// sum_{k<N} Pbar_k(zbar) Q_k(w) / D_k
inline cplx kernel_from_polys(int N, const PolyPair& pp, cplx zb, cplx w) {
  if (N < 1 || N > pp.size()) throw validation_error("kernel_from_polys: N out of range");
  cplx sum{};
  for (int k = 0; k < N; ++k) sum += eval_poly(pp.pbar, k, zb) * eval_poly(pp.q, k, w) / pp.norms[k];
  return sum;
}

/// max |(Pbar M Q^T)_{kl} - delta_kl D_k| / |D_k|
inline double biorthogonality_defect(const PolyPair& pp, const MomentMatrix& mm) {
  const Eigen::MatrixXcd G = pp.pbar * mm.entries * pp.q.transpose();
  double worst = 0.0;
  for (int k = 0; k < G.rows(); ++k)
    for (int l = 0; l < G.cols(); ++l) {
      const cplx target = k == l ? pp.norms[k] : cplx{};
      worst = std::max(worst, std::abs(G(k, l) - target) / std::abs(pp.norms[k]));
    }
  return worst;
}

/// |z P_k - (P_{k+1} + b_k P_k + c_k z P_{k-1})| with b_k = -lambda f_k/f_{k+1}, c_k = lambda f_{k-1}/f_k,
/// where P_k has the coefficients of Q_k.
inline double three_term_residual(int k, const PolyPair& pp, double alpha, const ConditionPoint& c, cplx z) {
  if (k < 1 || k >= pp.size() - 1) throw validation_error("three_term_residual: need 1 <= k < size-1");
  const cplx x = c.x();
  const cplx fkm = finite::f_alpha_stabilized(k - 1, alpha, x).value();
  const cplx fk = finite::f_alpha_stabilized(k, alpha, x).value();
  const cplx fkp = finite::f_alpha_stabilized(k + 1, alpha, x).value();
  const cplx b = -c.lambda * fk / fkp, cc = c.lambda * fkm / fk;
  const cplx pk = eval_poly(pp.q, k, z);
  return std::abs(z * pk - (eval_poly(pp.q, k + 1, z) + b * pk + cc * z * eval_poly(pp.q, k - 1, z)));
}

} // namespace ovl::orthopoly
