#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "marlab/dataset.hpp"
#include "marlab/errors.hpp"

namespace marlab {

/// Parameters of a width-k depth-2 ReLU network
///   N(x) = sum_j v_j relu(w_j . x + b_j).
/// The map is homogeneous of degree 2 in (W, b, v) jointly.
struct NetworkParams {
  Eigen::MatrixXd W;  // k x d, row j = w_j
  Eigen::VectorXd b;  // k
  Eigen::VectorXd v;  // k

  Eigen::Index width() const { return W.rows(); }
  Eigen::Index dim() const { return W.cols(); }

  double squared_norm() const {
    return W.squaredNorm() + b.squaredNorm() + v.squaredNorm();
  }

  NetworkParams scaled(double alpha) const { return {alpha * W, alpha * b, alpha * v}; }

  void validate() const {
    if (b.size() != width() || v.size() != width())
      throw DimensionMismatch("network: b and v must have length k");
    if (!W.allFinite() || !b.allFinite() || !v.allFinite())
      throw InvalidArgument("network: parameters contain non-finite entries");
  }
};

enum class LossKind { kExponential, kLogistic };

struct LossSpec {
  LossKind kind = LossKind::kExponential;
};

inline std::string to_string(LossKind k) {
  return k == LossKind::kExponential ? "exponential" : "logistic";
}

inline LossKind loss_kind_from_string(const std::string& s) {
  if (s == "exponential") return LossKind::kExponential;
  if (s == "logistic") return LossKind::kLogistic;
  throw ParseError("unknown loss kind: " + s);
}

/// loss(q): e^{-q} or log(1 + e^{-q}), written to stay finite for large q.
inline double loss_value(LossKind kind, double q) {
  if (kind == LossKind::kExponential) return std::exp(-q);
  return q >= 0.0 ? std::log1p(std::exp(-q)) : -q + std::log1p(std::exp(q));
}

/// d loss / d q.
inline double loss_slope(LossKind kind, double q) {
  if (kind == LossKind::kExponential) return -std::exp(-q);
  return -1.0 / (1.0 + std::exp(q));
}

inline double forward(const NetworkParams& p, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != p.dim())
    throw DimensionMismatch("forward: input has length " + std::to_string(x.size()) +
                            ", network expects " + std::to_string(p.dim()));
  return p.v.dot((p.W * x + p.b).cwiseMax(0.0));
}

/// m x k matrix of first-layer preactivations w_j . x_i + b_j.
inline Eigen::MatrixXd preactivations(const NetworkParams& p, const Dataset& ds) {
  if (ds.d != p.dim())
    throw DimensionMismatch("preactivations: dataset dimension " + std::to_string(ds.d) +
                            " != network dimension " + std::to_string(p.dim()));
  return (ds.points * p.W.transpose()).rowwise() + p.b.transpose();
}

inline Eigen::VectorXd outputs(const NetworkParams& p, const Dataset& ds) {
  return preactivations(p, ds).cwiseMax(0.0) * p.v;
}

/// Per-example margins y_i N(x_i).
inline Eigen::VectorXd margins(const NetworkParams& p, const Dataset& ds) {
  return ds.labels.cwiseProduct(outputs(p, ds));
}

struct LossAndGradient {
  double loss = 0.0;
  NetworkParams gradient;
  Eigen::VectorXd margins;  // y_i N(x_i), reused by callers
};

/// Total loss sum_i loss(y_i N(x_i)) and its gradient. The ReLU derivative at
/// zero preactivation is taken as 0, so the active set is the strict
/// inequality pre > 0. Per-example losses are summed in index order.
inline LossAndGradient loss_and_gradient(const NetworkParams& p, const Dataset& ds,
                                         LossSpec spec) {
  const Eigen::Index m = ds.size();
  const Eigen::MatrixXd pre = preactivations(p, ds);
  const Eigen::MatrixXd act = pre.cwiseMax(0.0);
  const Eigen::VectorXd out = act * p.v;
  LossAndGradient r;
  r.margins = ds.labels.cwiseProduct(out);

  Eigen::VectorXd slope(m);
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double li = loss_value(spec.kind, r.margins(i));
    if (!std::isfinite(li))
      throw NumericOverflow("loss overflow at example " + std::to_string(i), i);
    total += li;
    slope(i) = loss_slope(spec.kind, r.margins(i));
  }
  if (!std::isfinite(total))
    throw NumericOverflow("total loss is not finite", -1);
  r.loss = total;

  // dL/dout_i = loss'(q_i) y_i; spread through the active units.
  const Eigen::VectorXd s = slope.cwiseProduct(ds.labels);
  const Eigen::MatrixXd gated =
      (s * p.v.transpose()).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  r.gradient.W = gated.transpose() * ds.points;
  r.gradient.b = gated.colwise().sum().transpose();
  r.gradient.v = act.transpose() * s;
  return r;
}

}  // namespace marlab
