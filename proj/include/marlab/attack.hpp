#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "marlab/dataset.hpp"
#include "marlab/errors.hpp"
#include "marlab/network.hpp"

namespace marlab {

/// The set of examples within a multiplicative slack of the smallest margin,
/// with the correlation quantities the perturbation theory conditions on.
struct MarginReport {
  Eigen::VectorXd margins;                    // all m margins
  Eigen::Index i_marg = 0;                    // index of the minimal margin
  double slack = 1.1;
  std::vector<Eigen::Index> margin_set;       // I, ascending
  std::vector<Eigen::Index> i_plus, i_minus;  // partition of I by label
  double balance_c = 0.0;                     // min(|I+|, |I-|) / |I|
  double p_margin = 0.0;                      // max_{i != j in I} |<x_i, x_j>|
  double c_prime_margin = 0.0;                // |I| (p_margin + 1) / (d + 1)
};

inline MarginReport margin_set(const NetworkParams& params, const Dataset& ds,
                               double slack = 1.1) {
  if (!(slack >= 1.0)) throw InvalidArgument("margin_set: slack must be at least 1");
  MarginReport r;
  r.slack = slack;
  r.margins = margins(params, ds);
  std::vector<std::int64_t> bad;
  for (Eigen::Index i = 0; i < r.margins.size(); ++i)
    if (!(r.margins(i) > 0.0)) bad.push_back(i);
  if (!bad.empty()) {
    std::string msg = "margin_set: nonpositive margin at indices";
    for (auto i : bad) msg += " " + std::to_string(i);
    throw NotInterpolated(msg, std::move(bad));
  }
  r.margins.minCoeff(&r.i_marg);
  const double cutoff = slack * r.margins(r.i_marg);
  for (Eigen::Index i = 0; i < r.margins.size(); ++i) {
    if (r.margins(i) <= cutoff) {
      r.margin_set.push_back(i);
      (ds.labels(i) > 0.0 ? r.i_plus : r.i_minus).push_back(i);
    }
  }
  const auto isz = static_cast<double>(r.margin_set.size());
  r.balance_c = static_cast<double>(std::min(r.i_plus.size(), r.i_minus.size())) / isz;
  for (std::size_t a = 0; a < r.margin_set.size(); ++a)
    for (std::size_t b = a + 1; b < r.margin_set.size(); ++b)
      r.p_margin = std::max(r.p_margin, std::abs(ds.points.row(r.margin_set[a])
                                                     .dot(ds.points.row(r.margin_set[b]))));
  r.c_prime_margin = isz * (r.p_margin + 1.0) / (static_cast<double>(ds.d) + 1.0);
  return r;
}

struct UniversalDirection {
  Eigen::VectorXd z_hat;    // unit vector
  Eigen::VectorXd raw_sum;  // sum_{i in I} y_i x_i
};

/// The label-signed sum of the margin-set points. Depends only on the data,
/// never on the network.
inline UniversalDirection universal_direction(const Dataset& ds,
                                              const std::vector<Eigen::Index>& index_set) {
  UniversalDirection u;
  u.raw_sum = Eigen::VectorXd::Zero(ds.d);
  for (Eigen::Index i : index_set) u.raw_sum += ds.labels(i) * ds.points.row(i).transpose();
  const double n = u.raw_sum.norm();
  if (n < 1e-12)
    throw DegenerateDirection("universal_direction: signed sum has norm " + std::to_string(n));
  u.z_hat = u.raw_sum / n;
  return u;
}

struct FlipSizes {
  std::vector<std::optional<double>> per_example;  // aligned with the index set
  std::optional<double> joint;                     // max over the set; empty if any entry is
  double c_max = 0.0;
};

/// Smallest c in (0, c_max] with y_i N(x_i - y_i c z_hat) < 0, per example:
/// geometric doubling from 1e-3 sqrt(d) to bracket the first sign change,
/// then bisection to relative tolerance 1e-4. The perturbed output is
/// piecewise linear but not necessarily monotone in c; later re-crossings
/// are ignored.
inline FlipSizes min_flip_size(const NetworkParams& params, const Dataset& ds,
                               const std::vector<Eigen::Index>& index_set,
                               const Eigen::VectorXd& z_hat, double c_max = -1.0) {
  const double sqrt_d = std::sqrt(static_cast<double>(ds.d));
  FlipSizes sizes;
  sizes.c_max = c_max > 0.0 ? c_max : 4.0 * sqrt_d;
  sizes.per_example.reserve(index_set.size());

  bool all_flipped = true;
  double joint = 0.0;
  for (Eigen::Index i : index_set) {
    const Eigen::VectorXd x = ds.points.row(i).transpose();
    const double y = ds.labels(i);
    auto signed_out = [&](double c) { return y * forward(params, x - (y * c) * z_hat); };

    double lo = 0.0, hi = 1e-3 * sqrt_d;
    bool found = false;
    while (true) {
      const double probe = std::min(hi, sizes.c_max);
      if (signed_out(probe) < 0.0) {
        hi = probe;
        found = true;
        break;
      }
      lo = probe;
      if (probe >= sizes.c_max) break;
      hi *= 2.0;
    }
    if (!found) {
      sizes.per_example.emplace_back(std::nullopt);
      all_flipped = false;
      continue;
    }
    while (hi - lo > 1e-4 * hi) {
      const double mid = 0.5 * (lo + hi);
      (signed_out(mid) < 0.0 ? hi : lo) = mid;
    }
    sizes.per_example.emplace_back(hi);
    joint = std::max(joint, hi);
  }
  if (all_flipped && !index_set.empty()) sizes.joint = joint;
  return sizes;
}

enum class PerturbationMode { kEmpirical, kTheoretical };

inline std::string to_string(PerturbationMode m) {
  return m == PerturbationMode::kEmpirical ? "empirical" : "theoretical";
}

struct PerturbationReport {
  PerturbationMode mode = PerturbationMode::kEmpirical;
  std::vector<Eigen::Index> margin_set;
  Eigen::VectorXd z_hat;
  Eigen::VectorXd raw_sum;
  std::optional<double> eta1, eta2;    // theoretical mode only
  Eigen::VectorXd z_theoretical;       // (eta1 + eta2) raw_sum; empty otherwise
  double z_norm = 0.0;                 // norm of the reported z vector
  std::optional<double> norm_bound;    // 18 sqrt(2 d) / (c sqrt(m))
  std::vector<std::optional<double>> per_example_flip;
  std::optional<double> joint_flip_size;
  Eigen::VectorXd z;                   // the realized universal perturbation
};

/// Closed-form perturbation for exact-KKT networks: z = (eta1 + eta2)
/// sum_{i in I} y_i x_i, where eta1 activates every opposite-sign neuron and
/// eta2 then drives the output past the opposite margin. Needs the margin
/// set small enough that m (p+1) / (d+1) <= 1/3.
inline PerturbationReport theoretical_perturbation(const Dataset& ds,
                                                   const std::vector<Eigen::Index>& index_set) {
  const auto m = static_cast<std::int64_t>(index_set.size());
  if (m < 2) throw InvalidArgument("theoretical_perturbation: need at least two examples");
  std::int64_t positives = 0;
  for (Eigen::Index i : index_set) positives += ds.labels(i) > 0.0 ? 1 : 0;
  if (positives == 0 || positives == m)
    throw InvalidArgument("theoretical_perturbation: both classes must be present");

  double p = 0.0;
  for (std::size_t a = 0; a < index_set.size(); ++a)
    for (std::size_t b = a + 1; b < index_set.size(); ++b)
      p = std::max(p, std::abs(ds.points.row(index_set[a]).dot(ds.points.row(index_set[b]))));
  const double d = static_cast<double>(ds.d);
  const double md = static_cast<double>(m);
  const double c = static_cast<double>(std::min(positives, m - positives)) / md;
  const double c_prime = md * (p + 1.0) / (d + 1.0);
  if (c_prime > 1.0 / 3.0)
    throw HypothesisViolated("theoretical_perturbation: m(p+1)/(d+1) = " +
                                 std::to_string(c_prime) + " exceeds 1/3 (m=" +
                                 std::to_string(m) + ", p=" + std::to_string(p) +
                                 ", d=" + std::to_string(ds.d) + ")",
                             m, p, ds.d);
  const double gap = d - md * p;
  if (!(gap > 0.0))
    throw std::logic_error("theoretical_perturbation: d - m p <= 0 despite c' <= 1/3");

  PerturbationReport r;
  r.mode = PerturbationMode::kTheoretical;
  r.margin_set = index_set;
  const UniversalDirection dir = universal_direction(ds, index_set);
  r.z_hat = dir.z_hat;
  r.raw_sum = dir.raw_sum;
  r.eta1 = (p + 1.0) / gap;
  r.eta2 = 2.0 * (c * c_prime + 1.0) * (d + 1.0) / (md * c * gap);
  r.z_theoretical = (*r.eta1 + *r.eta2) * r.raw_sum;
  r.z = r.z_theoretical;
  r.z_norm = r.z_theoretical.norm();
  r.norm_bound = 18.0 * std::sqrt(2.0 * d) / (c * std::sqrt(md));
  if (r.z_norm > *r.norm_bound)
    throw std::logic_error("theoretical_perturbation: norm bound violated");
  return r;
}

/// Measured perturbation for a concrete network: universal direction of the
/// margin set plus per-example minimal flip scalings along it.
inline PerturbationReport empirical_perturbation(const NetworkParams& params, const Dataset& ds,
                                                 const MarginReport& mr, double c_max = -1.0) {
  PerturbationReport r;
  r.mode = PerturbationMode::kEmpirical;
  r.margin_set = mr.margin_set;
  const UniversalDirection dir = universal_direction(ds, mr.margin_set);
  r.z_hat = dir.z_hat;
  r.raw_sum = dir.raw_sum;
  const FlipSizes sizes = min_flip_size(params, ds, mr.margin_set, r.z_hat, c_max);
  r.per_example_flip = sizes.per_example;
  r.joint_flip_size = sizes.joint;
  if (sizes.joint) {
    r.z = *sizes.joint * r.z_hat;
    r.z_norm = *sizes.joint;
  } else {
    r.z = Eigen::VectorXd();
    r.z_norm = 0.0;
  }
  return r;
}

}  // namespace marlab
