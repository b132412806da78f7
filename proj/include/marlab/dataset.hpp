#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>

#include "marlab/errors.hpp"
#include "marlab/prng.hpp"

namespace marlab {

enum class DataSource { kSphereUniform, kGaussianNormalized, kOrthogonalBasis, kExplicit };
enum class LabelRule { kUniform, kBalancedAlternating };

inline std::string to_string(DataSource s) {
  switch (s) {
    case DataSource::kSphereUniform: return "sphere-uniform";
    case DataSource::kGaussianNormalized: return "gaussian-normalized";
    case DataSource::kOrthogonalBasis: return "orthogonal-basis";
    case DataSource::kExplicit: return "explicit";
  }
  return "explicit";
}

inline DataSource data_source_from_string(const std::string& s) {
  if (s == "sphere-uniform") return DataSource::kSphereUniform;
  if (s == "gaussian-normalized") return DataSource::kGaussianNormalized;
  if (s == "orthogonal-basis") return DataSource::kOrthogonalBasis;
  if (s == "explicit") return DataSource::kExplicit;
  throw ParseError("unknown dataset source: " + s);
}

/// Binary-classification points on the sphere of radius sqrt(d).
/// Immutable after construction; safe to share across threads.
struct Dataset {
  int d = 0;
  Eigen::MatrixXd points;   // m x d, one example per row
  Eigen::VectorXd labels;   // entries are exactly +1 or -1
  std::uint64_t seed = 0;
  DataSource source = DataSource::kExplicit;

  Eigen::Index size() const { return points.rows(); }

  void validate() const {
    if (size() < 1 || d < 1) throw InvalidArgument("dataset: need m >= 1 and d >= 1");
    if (points.cols() != d) throw DimensionMismatch("dataset: points have wrong dimension");
    if (labels.size() != size()) throw DimensionMismatch("dataset: label count != point count");
    const double radius = std::sqrt(static_cast<double>(d));
    for (Eigen::Index i = 0; i < size(); ++i) {
      if (std::abs(points.row(i).norm() - radius) > 1e-10 * radius)
        throw InvalidArgument("dataset: point " + std::to_string(i) +
                              " is not on the radius-sqrt(d) sphere");
      const double y = labels(i);
      if (y != 1.0 && y != -1.0)
        throw InvalidArgument("dataset: label " + std::to_string(i) + " is not in {-1,+1}");
    }
  }
};

/// Pairwise-correlation summary of a dataset.
struct CorrelationStats {
  double p_max = 0.0;       // max_{i != j} |<x_i, x_j>|; 0 when m = 1
  double p_max_unit = 0.0;  // p_max / d
  double balance_c = 0.0;   // min(|I+|, |I-|) / m, in [0, 1/2]
  double c_prime = 0.0;     // m (p_max + 1) / (d + 1)
  Eigen::Index argmax_i = -1;
  Eigen::Index argmax_j = -1;
};

namespace detail {

inline void assign_labels(Eigen::VectorXd& labels, LabelRule rule, std::uint64_t seed) {
  if (rule == LabelRule::kBalancedAlternating) {
    for (Eigen::Index i = 0; i < labels.size(); ++i) labels(i) = (i % 2 == 0) ? 1.0 : -1.0;
    return;
  }
  SplitMix64 stream(hash64({seed, 0x6c6162656c73ULL}));  // "labels"
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    labels(i) = (stream.next_u64() >> 63) ? -1.0 : 1.0;
}

inline Dataset sample_sphere_tagged(Eigen::Index m, int d, std::uint64_t seed, LabelRule rule,
                                    DataSource tag) {
  if (m < 1 || d < 1) throw InvalidArgument("sample_sphere: need m >= 1 and d >= 1");
  Dataset ds;
  ds.d = d;
  ds.seed = seed;
  ds.source = tag;
  ds.points.resize(m, d);
  ds.labels.resize(m);
  SplitMix64 stream(hash64({seed, 0x706f696e7473ULL}));  // "points"
  const double radius = std::sqrt(static_cast<double>(d));
  for (Eigen::Index i = 0; i < m; ++i) {
    double norm2 = 0.0;
    do {
      for (int j = 0; j < d; ++j) ds.points(i, j) = stream.next_gaussian();
      norm2 = ds.points.row(i).squaredNorm();
    } while (norm2 == 0.0);  // probability-0 rejection keeps the map exact
    ds.points.row(i) *= radius / std::sqrt(norm2);
  }
  assign_labels(ds.labels, rule, seed);
  return ds;
}

}  // namespace detail

/// m i.i.d. uniform samples on the radius-sqrt(d) sphere: a standard-normal
/// vector, normalized, scaled by sqrt(d). Deterministic given the seed.
inline Dataset sample_sphere(Eigen::Index m, int d, std::uint64_t seed,
                             LabelRule rule = LabelRule::kUniform) {
  return detail::sample_sphere_tagged(m, d, seed, rule, DataSource::kSphereUniform);
}

/// Normalized-Gaussian sampling. The construction coincides with
/// sample_sphere; only the recorded source differs.
inline Dataset sample_gaussian_normalized(Eigen::Index m, int d, std::uint64_t seed,
                                          LabelRule rule = LabelRule::kUniform) {
  return detail::sample_sphere_tagged(m, d, seed, rule, DataSource::kGaussianNormalized);
}

/// The first m vectors of the scaled standard basis, x_i = sqrt(d) e_i, with
/// +1 labels on the first half of the selected points.
inline Dataset orthogonal_subset(int d, Eigen::Index m) {
  if (d < 1 || m < 1 || m > d) throw InvalidArgument("orthogonal_subset: need 1 <= m <= d");
  Dataset ds;
  ds.d = d;
  ds.seed = 0;
  ds.source = DataSource::kOrthogonalBasis;
  ds.points = Eigen::MatrixXd::Zero(m, d);
  ds.labels.resize(m);
  const double radius = std::sqrt(static_cast<double>(d));
  for (Eigen::Index i = 0; i < m; ++i) {
    ds.points(i, i) = radius;
    ds.labels(i) = (2 * (i + 1) <= m) ? 1.0 : -1.0;
  }
  return ds;
}

/// The full orthogonal dataset: m = d points sqrt(d) e_i, labels +1 on the
/// first half. Requires even d so the classes balance.
inline Dataset orthogonal_dataset(int d) {
  if (d < 2 || d % 2 != 0) throw InvalidArgument("orthogonal_dataset: d must be even and >= 2");
  return orthogonal_subset(d, d);
}

inline CorrelationStats correlation_stats(const Dataset& ds) {
  CorrelationStats stats;
  const Eigen::Index m = ds.size();
  if (m >= 2) {
    // Exact pairwise scan; the Gram matrix stays small at laboratory scale.
    const Eigen::MatrixXd gram = ds.points * ds.points.transpose();
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) {
        const double a = std::abs(gram(i, j));
        if (a > stats.p_max) {
          stats.p_max = a;
          stats.argmax_i = i;
          stats.argmax_j = j;
        }
      }
    }
  }
  stats.p_max_unit = stats.p_max / static_cast<double>(ds.d);
  const Eigen::Index positives = (ds.labels.array() > 0.0).count();
  const Eigen::Index negatives = m - positives;
  stats.balance_c = static_cast<double>(std::min(positives, negatives)) / static_cast<double>(m);
  stats.c_prime =
      static_cast<double>(m) * (stats.p_max + 1.0) / (static_cast<double>(ds.d) + 1.0);
  return stats;
}

}  // namespace marlab
