#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "marlab/network.hpp"
#include "marlab/prng.hpp"

namespace marlab {

/// Discrete gradient descent standing in for gradient flow: tiny initial step
/// size grown by a fixed factor every period, run until the loss is
/// essentially zero. An exponentially tailed loss needs the growing step to
/// make progress once margins are large.
struct TrainConfig {
  LossSpec loss{};
  double lr0 = 1e-5;
  double lr_growth = 1.1;
  std::int64_t lr_period = 100;
  Eigen::Index batch_size = 5000;
  double stop_loss = 1e-30;
  std::int64_t max_iters = 400000;
  std::uint64_t init_seed = 0;
  std::optional<double> init_scale_w;  // std of W entries; defaults to 1/sqrt(d)
  std::optional<double> init_scale_v;  // std of v entries; defaults to 1/sqrt(k)

  void validate() const {
    if (!(lr0 > 0.0)) throw InvalidArgument("train config: lr0 must be positive");
    if (!(lr_growth > 1.0)) throw InvalidArgument("train config: lr_growth must exceed 1");
    if (lr_period < 1) throw InvalidArgument("train config: lr_period must be positive");
    if (batch_size < 1) throw InvalidArgument("train config: batch_size must be positive");
    if (!(stop_loss > 0.0)) throw InvalidArgument("train config: stop_loss must be positive");
    if (max_iters < 0) throw InvalidArgument("train config: max_iters must be nonnegative");
  }
};

struct TrainReport {
  NetworkParams final_params;
  double final_loss = 0.0;
  std::int64_t iterations_used = 0;
  std::vector<std::pair<std::int64_t, double>> loss_trace;  // downsampled, <= 1000 points
  std::optional<std::int64_t> interpolated_at;              // first iter with all margins > 0
  bool converged = false;
};

/// The loss became non-finite. Carries the step index and the parameters from
/// the last iteration whose loss evaluated finite.
class TrainDivergence : public Error {
 public:
  TrainDivergence(const std::string& msg, std::int64_t iteration, NetworkParams last_finite)
      : Error(msg), iteration_(iteration), last_finite_(std::move(last_finite)) {}
  std::int64_t iteration() const { return iteration_; }
  const NetworkParams& last_finite_params() const { return last_finite_; }

 private:
  std::int64_t iteration_;
  NetworkParams last_finite_;
};

inline double lr_at(const TrainConfig& cfg, std::int64_t t) {
  return cfg.lr0 * std::pow(cfg.lr_growth, static_cast<double>(t / cfg.lr_period));
}

/// Gaussian first layer, Gaussian output layer, zero biases.
inline NetworkParams init_params(int d, Eigen::Index k, const TrainConfig& cfg) {
  if (d < 1 || k < 1) throw InvalidArgument("init_params: need d >= 1 and k >= 1");
  const double sw = cfg.init_scale_w.value_or(1.0 / std::sqrt(static_cast<double>(d)));
  const double sv = cfg.init_scale_v.value_or(1.0 / std::sqrt(static_cast<double>(k)));
  SplitMix64 stream(hash64({cfg.init_seed, 0x696e6974ULL}));  // "init"
  NetworkParams p;
  p.W.resize(k, d);
  for (Eigen::Index j = 0; j < k; ++j)
    for (int c = 0; c < d; ++c) p.W(j, c) = sw * stream.next_gaussian();
  p.b = Eigen::VectorXd::Zero(k);
  p.v.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) p.v(j) = sv * stream.next_gaussian();
  return p;
}

/// Observer invoked once per iteration with the pre-step parameters; used by
/// callers that snapshot the trajectory at loss thresholds.
using TrainObserver =
    std::function<void(std::int64_t iter, double loss, const NetworkParams& params)>;

namespace detail {

inline Dataset batch_view(const Dataset& ds, Eigen::Index begin, Eigen::Index count) {
  Dataset b;
  b.d = ds.d;
  b.seed = ds.seed;
  b.source = ds.source;
  b.points = ds.points.middleRows(begin, count);
  b.labels = ds.labels.segment(begin, count);
  return b;
}

}  // namespace detail

/// Full-batch gradient descent (fixed sequential mini-batches once m exceeds
/// batch_size) with the growing step schedule. Deterministic given inputs.
inline TrainReport train(const Dataset& ds, Eigen::Index k, const TrainConfig& cfg,
                         const TrainObserver& observer = {}) {
  cfg.validate();
  if (ds.size() < 1) throw InvalidArgument("train: dataset is empty");
  const Eigen::Index m = ds.size();
  const bool full_batch = m <= cfg.batch_size;
  const Eigen::Index n_batches = full_batch ? 1 : (m + cfg.batch_size - 1) / cfg.batch_size;

  NetworkParams params = init_params(ds.d, k, cfg);
  NetworkParams last_finite = params;

  TrainReport report;
  std::int64_t trace_stride = 1;
  auto record = [&](std::int64_t t, double loss) {
    if (t % trace_stride != 0) return;
    report.loss_trace.emplace_back(t, loss);
    if (report.loss_trace.size() >= 1000) {
      std::vector<std::pair<std::int64_t, double>> kept;
      kept.reserve(500);
      for (std::size_t i = 0; i < report.loss_trace.size(); i += 2)
        kept.push_back(report.loss_trace[i]);
      report.loss_trace = std::move(kept);
      trace_stride *= 2;
    }
  };

  std::int64_t t = 0;
  double current_loss = 0.0;
  while (true) {
    LossAndGradient eval;
    try {
      eval = loss_and_gradient(params, ds, cfg.loss);
    } catch (const NumericOverflow& e) {
      throw TrainDivergence("training diverged at iteration " + std::to_string(t) + ": " +
                                e.what(),
                            t, last_finite);
    }
    current_loss = eval.loss;
    last_finite = params;
    if (observer) observer(t, current_loss, params);
    record(t, current_loss);
    if (!report.interpolated_at && (eval.margins.array() > 0.0).all())
      report.interpolated_at = t;

    if (current_loss < cfg.stop_loss) {
      report.converged = true;
      break;
    }
    if (t >= cfg.max_iters) break;

    const double lr = lr_at(cfg, t);
    if (full_batch) {
      params.W.noalias() -= lr * eval.gradient.W;
      params.b -= lr * eval.gradient.b;
      params.v -= lr * eval.gradient.v;
    } else {
      // One sequential batch per iteration; the full-loss stop check above
      // keeps the stopping rule batch-independent.
      const Eigen::Index bi = static_cast<Eigen::Index>(t % n_batches);
      const Eigen::Index begin = bi * cfg.batch_size;
      const Eigen::Index count = std::min(cfg.batch_size, m - begin);
      const Dataset batch = detail::batch_view(ds, begin, count);
      const LossAndGradient beval = loss_and_gradient(params, batch, cfg.loss);
      params.W.noalias() -= lr * beval.gradient.W;
      params.b -= lr * beval.gradient.b;
      params.v -= lr * beval.gradient.v;
    }
    ++t;
  }

  if (report.loss_trace.empty() || report.loss_trace.back().first != t)
    report.loss_trace.emplace_back(t, current_loss);
  report.final_params = std::move(params);
  report.final_loss = current_loss;
  report.iterations_used = t;
  return report;
}

}  // namespace marlab
