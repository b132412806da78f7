#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "marlab/errors.hpp"

namespace marlab {

struct NnlsResult {
  Eigen::VectorXd x;
  int iterations = 0;
};

/// Lawson–Hanson active-set NNLS in normal-equation form:
///   minimize 1/2 x^T G x - h^T x  subject to x >= 0,
/// where G = A^T A and h = A^T t for the underlying least-squares system.
/// Deterministic: ties in the dual pick the lowest index.
inline NnlsResult nnls_normal(const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                              int max_iterations = 0) {
  const Eigen::Index n = G.rows();
  if (G.cols() != n || h.size() != n)
    throw DimensionMismatch("nnls: G must be square and match h");
  if (max_iterations <= 0) max_iterations = 10 * static_cast<int>(n) + 30;

  NnlsResult result;
  result.x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  Eigen::VectorXd w = h;  // negative gradient at x = 0
  const double tol = 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff());

  auto solve_passive = [&](Eigen::VectorXd& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    const auto np = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd Gp(np, np);
    Eigen::VectorXd hp(np);
    for (Eigen::Index a = 0; a < np; ++a) {
      hp(a) = h(idx[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < np; ++b)
        Gp(a, b) = G(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
    const Eigen::VectorXd zp = Gp.ldlt().solve(hp);
    z.setZero(n);
    for (Eigen::Index a = 0; a < np; ++a) z(idx[static_cast<std::size_t>(a)]) = zp(a);
    return idx;
  };

  int iter = 0;
  while (true) {
    // pick the most violated dual coordinate outside the passive set
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    while (true) {
      if (++iter > max_iterations)
        throw NumericalError("nnls failed to converge", iter);
      Eigen::VectorXd z;
      const auto idx = solve_passive(z);
      bool feasible = true;
      for (Eigen::Index j : idx)
        if (z(j) <= 0.0) feasible = false;
      if (feasible) {
        result.x = z;
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (Eigen::Index j : idx) {
        if (z(j) <= 0.0) {
          const double step = result.x(j) / (result.x(j) - z(j));
          alpha = std::min(alpha, step);
        }
      }
      result.x += alpha * (z - result.x);
      for (Eigen::Index j : idx) {
        if (result.x(j) <= tol) {
          result.x(j) = 0.0;
          passive[static_cast<std::size_t>(j)] = false;
        }
      }
    }
    w = h - G * result.x;
  }
  result.iterations = iter;
  return result;
}

}  // namespace marlab
