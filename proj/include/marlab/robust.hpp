#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "marlab/dataset.hpp"
#include "marlab/network.hpp"
#include "marlab/prng.hpp"

namespace marlab {

struct RobustCertificate {
  double margin_min = 0.0;
  double claimed_radius = 0.0;  // (1 - c) sqrt(d) / 4
  double c_used = 0.0;
  Eigen::Index width_k = 0;
};

struct RobustNetwork {
  NetworkParams params;
  RobustCertificate cert;
};

/// One dedicated neuron per example: v_j = y_j, w_j = 2 x_j / (d (1 - c)),
/// b_j = -(1 + c) / (1 - c); remaining neurons zero. Each example activates
/// exactly its own neuron with preactivation 1, every cross preactivation is
/// at most -1, so all margins equal 1 and no perturbation of norm up to
/// (1 - c) sqrt(d) / 4 can flip a sign.
inline RobustNetwork build_robust(const Dataset& ds, double c, Eigen::Index k) {
  if (!(c >= 0.0 && c < 1.0)) throw InvalidArgument("build_robust: need 0 <= c < 1");
  const Eigen::Index m = ds.size();
  if (k < m) throw InvalidArgument("build_robust: width k must be at least m");
  const double d = static_cast<double>(ds.d);
  const CorrelationStats stats = correlation_stats(ds);
  if (stats.p_max > c * d * (1.0 + 1e-12)) {
    throw PreconditionViolation(
        "build_robust: |<x_" + std::to_string(stats.argmax_i) + ", x_" +
        std::to_string(stats.argmax_j) + ">| = " + std::to_string(stats.p_max) +
        " exceeds c*d = " + std::to_string(c * d));
  }

  NetworkParams p;
  p.W = Eigen::MatrixXd::Zero(k, ds.d);
  p.b = Eigen::VectorXd::Zero(k);
  p.v = Eigen::VectorXd::Zero(k);
  const double w_scale = 2.0 / (d * (1.0 - c));
  const double bias = -(1.0 + c) / (1.0 - c);
  for (Eigen::Index j = 0; j < m; ++j) {
    p.W.row(j) = w_scale * ds.points.row(j);
    p.b(j) = bias;
    p.v(j) = ds.labels(j);
  }

  RobustNetwork out{std::move(p), {}};
  out.cert.margin_min = margins(out.params, ds).minCoeff();
  out.cert.c_used = c;
  out.cert.claimed_radius = (1.0 - c) * std::sqrt(d) / 4.0;
  out.cert.width_k = k;
  return out;
}

struct CertifyReport {
  std::int64_t flips_found = 0;      // attack trials whose output sign flipped
  double worst_margin_after = 0.0;   // min over trials of y_i N(x_i + delta)
  std::int64_t trials = 0;
  double radius = 0.0;
};

/// Empirical falsification at a fixed perturbation norm. Per example the
/// suite tries `attack_budget` random directions, the directions toward and
/// away from every opposite-class point, the steepest output-descent
/// direction, and the universal direction sum_l y_l x_l. Directions depend
/// only on (seed, example), never on the radius, so trials at different radii
/// are nested scalings of each other.
inline CertifyReport certify_radius(const NetworkParams& params, const Dataset& ds,
                                    double radius, std::int64_t attack_budget,
                                    std::uint64_t seed) {
  if (radius < 0.0) throw InvalidArgument("certify_radius: radius must be nonnegative");
  const Eigen::Index m = ds.size();
  const int d = ds.d;
  CertifyReport report;
  report.radius = radius;
  report.worst_margin_after = margins(params, ds).minCoeff();

  Eigen::VectorXd universal = Eigen::VectorXd::Zero(d);
  for (Eigen::Index l = 0; l < m; ++l) universal += ds.labels(l) * ds.points.row(l).transpose();
  const bool have_universal = universal.norm() >= 1e-12;
  if (have_universal) universal.normalize();

  Eigen::VectorXd dir(d);
  auto attempt = [&](Eigen::Index i, const Eigen::VectorXd& point) {
    const double q = ds.labels(i) * forward(params, point);
    ++report.trials;
    if (q < 0.0) ++report.flips_found;
    report.worst_margin_after = std::min(report.worst_margin_after, q);
  };

  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::VectorXd x = ds.points.row(i).transpose();
    SplitMix64 stream(hash64({seed, static_cast<std::uint64_t>(i)}));
    for (std::int64_t t = 0; t < attack_budget; ++t) {
      double norm2 = 0.0;
      do {
        for (int j = 0; j < d; ++j) dir(j) = stream.next_gaussian();
        norm2 = dir.squaredNorm();
      } while (norm2 == 0.0);
      attempt(i, x + (radius / std::sqrt(norm2)) * dir);
    }
    for (Eigen::Index l = 0; l < m; ++l) {
      if (ds.labels(l) == ds.labels(i)) continue;
      dir = ds.points.row(l).transpose() - x;
      const double n = dir.norm();
      if (n < 1e-12) continue;
      attempt(i, x + (radius / n) * dir);
      attempt(i, x - (radius / n) * dir);
    }
    // steepest descent of y_i N at x_i
    const Eigen::VectorXd pre = params.W * x + params.b;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(d);
    for (Eigen::Index j = 0; j < params.width(); ++j)
      if (pre(j) > 0.0) grad += params.v(j) * params.W.row(j).transpose();
    const double gn = grad.norm();
    if (gn > 0.0) attempt(i, x - (ds.labels(i) * radius / gn) * grad);
    if (have_universal) attempt(i, x - ds.labels(i) * radius * universal);
  }
  return report;
}

}  // namespace marlab
