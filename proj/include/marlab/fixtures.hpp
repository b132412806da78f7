#pragma once

#include "marlab/dataset.hpp"
#include "marlab/network.hpp"

namespace marlab {

/// Margin-1 network on an orthogonal dataset with zero biases:
/// w_j = x_j / d, b_j = 0, v_j = y_j. Every example then sits exactly on the
/// activation boundary of all cross neurons, which makes the network maximally
/// fragile along the signed data sum while keeping all margins at 1.
inline NetworkParams zero_bias_margin_net(const Dataset& ds) {
  NetworkParams p;
  const double d = static_cast<double>(ds.d);
  p.W = ds.points / d;
  p.b = Eigen::VectorXd::Zero(ds.size());
  p.v = ds.labels;
  return p;
}

}  // namespace marlab
