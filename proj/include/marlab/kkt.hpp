#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "marlab/attack.hpp"
#include "marlab/dataset.hpp"
#include "marlab/network.hpp"
#include "marlab/nnls.hpp"

namespace marlab {

/// How far a margin-normalized network is from satisfying the stationarity,
/// nonnegativity and complementarity conditions of the minimum-norm
/// margin-1 problem. Multipliers live on the margin set only.
struct KktReport {
  Eigen::VectorXd lambdas;                  // length m, zero off the margin set
  double stationarity_residual_w = 0.0;     // ||W - W_hat||_F / ||W||_F
  double stationarity_residual_b = 0.0;
  double stationarity_residual_v = 0.0;
  double complementarity_residual = 0.0;    // max_i |lambda_i (q_i - 1)|
  double feasibility_min_margin = 0.0;
};

/// Rescale parameters so the minimal margin is exactly 1. Degree-2
/// homogeneity: signs, margin ratios and flip sizes are unchanged.
inline NetworkParams normalize_to_margin(const NetworkParams& params, const Dataset& ds) {
  const Eigen::VectorXd q = margins(params, ds);
  std::vector<std::int64_t> bad;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (!(q(i) > 0.0)) bad.push_back(i);
  if (!bad.empty())
    throw NotInterpolated("normalize_to_margin: nonpositive margins present", std::move(bad));
  const double alpha = 1.0 / std::sqrt(q.minCoeff());
  if (alpha == 1.0) return params;
  return params.scaled(alpha);
}

/// Fit multipliers lambda >= 0 (and free subgradient values where a
/// preactivation sits inside the +-activation_tol band) by nonnegative least
/// squares on the stacked stationarity equations for W and b:
///   w_j = sum_i lambda_i y_i v_j s'_{ij} x_i,   b_j = sum_i lambda_i y_i v_j s'_{ij}.
/// The v equation v_j = sum_i lambda_i y_i relu(w_j . x_i + b_j) is evaluated
/// with the fitted lambda. Expects margin-normalized parameters.
inline KktReport kkt_residual(const NetworkParams& params, const Dataset& ds,
                              const std::vector<Eigen::Index>& index_set,
                              double activation_tol = 1e-8) {
  const Eigen::Index k = params.width();
  const auto n_set = static_cast<Eigen::Index>(index_set.size());
  if (n_set < 1) throw InvalidArgument("kkt_residual: empty margin set");

  const Eigen::MatrixXd pre = preactivations(params, ds);
  const Eigen::VectorXd q = margins(params, ds);

  // classify margin-set preactivations: active / inactive / in-band
  Eigen::MatrixXd active(n_set, k);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> band;  // (set position, neuron)
  for (Eigen::Index a = 0; a < n_set; ++a) {
    const Eigen::Index i = index_set[static_cast<std::size_t>(a)];
    for (Eigen::Index j = 0; j < k; ++j) {
      const double pij = pre(i, j);
      if (pij > activation_tol) {
        active(a, j) = 1.0;
      } else {
        active(a, j) = 0.0;
        // zero-output neurons contribute nothing; skip their band variables
        if (pij >= -activation_tol && params.v(j) != 0.0) band.emplace_back(a, j);
      }
    }
  }

  // Normal equations in closed form. Column for lambda_a stacks, over j,
  // y_a v_j active(a,j) [x_a; 1]; hence
  //   G[a,b] = y_a y_b (<x_a, x_b> + 1) sum_j v_j^2 active(a,j) active(b,j).
  const auto nb = static_cast<Eigen::Index>(band.size());
  const Eigen::Index n_var = n_set + nb;
  Eigen::MatrixXd X_set(n_set, ds.d);
  Eigen::VectorXd y_set(n_set);
  for (Eigen::Index a = 0; a < n_set; ++a) {
    X_set.row(a) = ds.points.row(index_set[static_cast<std::size_t>(a)]);
    y_set(a) = ds.labels(index_set[static_cast<std::size_t>(a)]);
  }
  const Eigen::MatrixXd gram1 = (X_set * X_set.transpose()).array() + 1.0;
  const Eigen::VectorXd v2 = params.v.cwiseProduct(params.v);
  const Eigen::MatrixXd shared = active * v2.asDiagonal() * active.transpose();

  Eigen::MatrixXd G(n_var, n_var);
  Eigen::VectorXd h(n_var);
  for (Eigen::Index a = 0; a < n_set; ++a) {
    for (Eigen::Index b = 0; b < n_set; ++b)
      G(a, b) = y_set(a) * y_set(b) * gram1(a, b) * shared(a, b);
    double ha = 0.0;
    for (Eigen::Index j = 0; j < k; ++j)
      if (active(a, j) != 0.0)
        ha += params.v(j) * pre(index_set[static_cast<std::size_t>(a)], j);
    h(a) = y_set(a) * ha;
  }
  for (Eigen::Index u = 0; u < nb; ++u) {
    const auto [a0, j0] = band[static_cast<std::size_t>(u)];
    const double vj2 = v2(j0);
    for (Eigen::Index b = 0; b < n_set; ++b) {
      const double g = y_set(a0) * y_set(b) * gram1(a0, b) * vj2 * active(b, j0);
      G(n_set + u, b) = g;
      G(b, n_set + u) = g;
    }
    for (Eigen::Index w = 0; w < nb; ++w) {
      const auto [b0, l0] = band[static_cast<std::size_t>(w)];
      G(n_set + u, n_set + w) =
          (j0 == l0) ? y_set(a0) * y_set(b0) * gram1(a0, b0) * vj2 : 0.0;
    }
    h(n_set + u) =
        y_set(a0) * params.v(j0) * pre(index_set[static_cast<std::size_t>(a0)], j0);
  }

  const NnlsResult fit = nnls_normal(G, h);

  // reconstruct W_hat, b_hat, v_hat from the fitted coefficients
  Eigen::MatrixXd coef(n_set, k);  // lambda_a s'_{aj}
  for (Eigen::Index a = 0; a < n_set; ++a)
    for (Eigen::Index j = 0; j < k; ++j) coef(a, j) = fit.x(a) * active(a, j);
  for (Eigen::Index u = 0; u < nb; ++u) {
    const auto [a0, j0] = band[static_cast<std::size_t>(u)];
    coef(a0, j0) += fit.x(n_set + u);
  }
  Eigen::MatrixXd scaled(n_set, k);  // lambda_a y_a v_j s'_{aj}
  for (Eigen::Index a = 0; a < n_set; ++a)
    scaled.row(a) = y_set(a) * coef.row(a).cwiseProduct(params.v.transpose());
  const Eigen::MatrixXd W_hat = scaled.transpose() * X_set;
  const Eigen::VectorXd b_hat = scaled.colwise().sum().transpose();

  Eigen::MatrixXd act_set(n_set, k);
  for (Eigen::Index a = 0; a < n_set; ++a)
    act_set.row(a) = pre.row(index_set[static_cast<std::size_t>(a)]).cwiseMax(0.0);
  const Eigen::VectorXd v_hat =
      act_set.transpose() * fit.x.head(n_set).cwiseProduct(y_set);

  auto rel = [](double num, double den) { return den > 0.0 ? num / den : num; };
  KktReport report;
  report.lambdas = Eigen::VectorXd::Zero(ds.size());
  for (Eigen::Index a = 0; a < n_set; ++a)
    report.lambdas(index_set[static_cast<std::size_t>(a)]) = fit.x(a);
  report.stationarity_residual_w = rel((params.W - W_hat).norm(), params.W.norm());
  report.stationarity_residual_b = rel((params.b - b_hat).norm(), params.b.norm());
  report.stationarity_residual_v = rel((params.v - v_hat).norm(), params.v.norm());
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    report.complementarity_residual =
        std::max(report.complementarity_residual, std::abs(report.lambdas(i) * (q(i) - 1.0)));
  report.feasibility_min_margin = q.minCoeff();
  return report;
}

struct AntipodalFixture {
  NetworkParams params;
  Dataset ds;
  Eigen::Vector2d lambdas;
};

/// Exact KKT point in closed form: the pair {(sqrt(d) e_1, +1), (-sqrt(d)
/// e_1, -1)} with a two-neuron network whose own-neuron preactivations are
/// a (d+1) and cross preactivations a (1-d) < 0. With a = (d+1)^{-3/4},
/// |v_j| = (d+1)^{-1/4} and lambda = (d+1)^{-1/2} both margins equal 1 and
/// the stationarity equations hold with zero residual.
inline AntipodalFixture antipodal_kkt_fixture(int d) {
  if (d < 2) throw InvalidArgument("antipodal_kkt_fixture: need d >= 2");
  const double dp1 = static_cast<double>(d) + 1.0;
  const double a = std::pow(dp1, -0.75);
  const double vmag = std::pow(dp1, -0.25);
  const double lambda = std::pow(dp1, -0.5);
  const double radius = std::sqrt(static_cast<double>(d));

  AntipodalFixture fx;
  fx.ds.d = d;
  fx.ds.seed = 0;
  fx.ds.source = DataSource::kExplicit;
  fx.ds.points = Eigen::MatrixXd::Zero(2, d);
  fx.ds.points(0, 0) = radius;
  fx.ds.points(1, 0) = -radius;
  fx.ds.labels.resize(2);
  fx.ds.labels << 1.0, -1.0;

  fx.params.W = Eigen::MatrixXd::Zero(2, d);
  fx.params.W.row(0) = a * fx.ds.points.row(0);
  fx.params.W.row(1) = -a * fx.ds.points.row(0);
  fx.params.b = Eigen::VectorXd::Constant(2, a);
  fx.params.v.resize(2);
  fx.params.v << vmag, -vmag;
  fx.lambdas << lambda, lambda;
  return fx;
}

}  // namespace marlab
