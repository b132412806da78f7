#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "marlab/attack.hpp"
#include "marlab/dataset.hpp"
#include "marlab/kkt.hpp"
#include "marlab/network.hpp"
#include "marlab/prng.hpp"
#include "marlab/robust.hpp"
#include "marlab/trainer.hpp"

namespace marlab {

using nlohmann::json;

inline void save_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError("invalid JSON in " + path);
  return j;
}

namespace detail {

inline std::vector<double> flatten_row_major(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

inline Eigen::MatrixXd unflatten_row_major(const std::vector<double>& v, Eigen::Index rows,
                                           Eigen::Index cols) {
  if (static_cast<Eigen::Index>(v.size()) != rows * cols)
    throw ParseError("matrix payload has wrong length");
  Eigen::MatrixXd m(rows, cols);
  std::size_t idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v[idx++];
  return m;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <typename T>
json opt_to_json(const std::optional<T>& o) {
  if (o) return *o;
  return nullptr;
}

}  // namespace detail

// ---- Dataset (.ds.json) ----

inline json to_json(const Dataset& ds) {
  json j;
  j["d"] = ds.d;
  j["m"] = ds.size();
  j["seed"] = ds.seed;
  j["source"] = to_string(ds.source);
  j["prng"] = kPrngName;
  std::vector<int> labels(static_cast<std::size_t>(ds.size()));
  for (Eigen::Index i = 0; i < ds.size(); ++i) labels[static_cast<std::size_t>(i)] =
      ds.labels(i) > 0.0 ? 1 : -1;
  j["labels"] = labels;
  j["points"] = detail::flatten_row_major(ds.points);
  return j;
}

inline Dataset dataset_from_json(const json& j) {
  Dataset ds;
  try {
    ds.d = j.at("d").get<int>();
    const auto m = j.at("m").get<Eigen::Index>();
    ds.seed = j.at("seed").get<std::uint64_t>();
    ds.source = data_source_from_string(j.at("source").get<std::string>());
    const auto labels = j.at("labels").get<std::vector<int>>();
    if (static_cast<Eigen::Index>(labels.size()) != m)
      throw ParseError("dataset: label count mismatch");
    ds.labels.resize(m);
    for (Eigen::Index i = 0; i < m; ++i)
      ds.labels(i) = labels[static_cast<std::size_t>(i)] >= 0 ? 1.0 : -1.0;
    ds.points = detail::unflatten_row_major(j.at("points").get<std::vector<double>>(), m, ds.d);
  } catch (const json::exception& e) {
    throw ParseError(std::string("dataset: ") + e.what());
  }
  ds.validate();
  return ds;
}

// ---- NetworkParams (.net.json) ----

inline json to_json(const NetworkParams& p) {
  json j;
  j["k"] = p.width();
  j["d"] = p.dim();
  j["W"] = detail::flatten_row_major(p.W);
  j["b"] = detail::vector_to_json(p.b);
  j["v"] = detail::vector_to_json(p.v);
  return j;
}

inline NetworkParams network_from_json(const json& j) {
  NetworkParams p;
  try {
    const auto k = j.at("k").get<Eigen::Index>();
    const auto d = j.at("d").get<Eigen::Index>();
    p.W = detail::unflatten_row_major(j.at("W").get<std::vector<double>>(), k, d);
    p.b = detail::vector_from_json(j.at("b"));
    p.v = detail::vector_from_json(j.at("v"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("network: ") + e.what());
  }
  p.validate();
  return p;
}

// ---- TrainReport (.train.json) ----

inline json to_json(const TrainReport& r) {
  json j;
  j["final_params"] = to_json(r.final_params);
  j["final_loss"] = r.final_loss;
  j["iterations_used"] = r.iterations_used;
  j["converged"] = r.converged;
  j["interpolated_at"] = detail::opt_to_json(r.interpolated_at);
  json trace = json::array();
  for (const auto& [t, loss] : r.loss_trace) trace.push_back({t, loss});
  j["loss_trace"] = trace;
  return j;
}

inline TrainReport train_report_from_json(const json& j) {
  TrainReport r;
  try {
    r.final_params = network_from_json(j.at("final_params"));
    r.final_loss = j.at("final_loss").get<double>();
    r.iterations_used = j.at("iterations_used").get<std::int64_t>();
    r.converged = j.at("converged").get<bool>();
    if (!j.at("interpolated_at").is_null())
      r.interpolated_at = j.at("interpolated_at").get<std::int64_t>();
    for (const auto& e : j.at("loss_trace"))
      r.loss_trace.emplace_back(e.at(0).get<std::int64_t>(), e.at(1).get<double>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("train report: ") + e.what());
  }
  return r;
}

// ---- TrainConfig (run-config JSON) ----

inline json to_json(const TrainConfig& c) {
  json j;
  j["loss"] = to_string(c.loss.kind);
  j["lr0"] = c.lr0;
  j["lr_growth"] = c.lr_growth;
  j["lr_period"] = c.lr_period;
  j["batch_size"] = c.batch_size;
  j["stop_loss"] = c.stop_loss;
  j["max_iters"] = c.max_iters;
  j["init_seed"] = c.init_seed;
  j["init_scale_w"] = detail::opt_to_json(c.init_scale_w);
  j["init_scale_v"] = detail::opt_to_json(c.init_scale_v);
  return j;
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  try {
    if (j.contains("loss")) c.loss.kind = loss_kind_from_string(j["loss"].get<std::string>());
    if (j.contains("lr0")) c.lr0 = j["lr0"].get<double>();
    if (j.contains("lr_growth")) c.lr_growth = j["lr_growth"].get<double>();
    if (j.contains("lr_period")) c.lr_period = j["lr_period"].get<std::int64_t>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<Eigen::Index>();
    if (j.contains("stop_loss")) c.stop_loss = j["stop_loss"].get<double>();
    if (j.contains("max_iters")) c.max_iters = j["max_iters"].get<std::int64_t>();
    if (j.contains("init_seed")) c.init_seed = j["init_seed"].get<std::uint64_t>();
    if (j.contains("init_scale_w") && !j["init_scale_w"].is_null())
      c.init_scale_w = j["init_scale_w"].get<double>();
    if (j.contains("init_scale_v") && !j["init_scale_v"].is_null())
      c.init_scale_v = j["init_scale_v"].get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---- PerturbationReport (.pert.json) ----

inline json to_json(const PerturbationReport& r) {
  json j;
  j["mode"] = to_string(r.mode);
  j["margin_set"] = r.margin_set;
  j["z_hat"] = detail::vector_to_json(r.z_hat);
  j["raw_sum"] = detail::vector_to_json(r.raw_sum);
  j["eta1"] = detail::opt_to_json(r.eta1);
  j["eta2"] = detail::opt_to_json(r.eta2);
  j["z_theoretical"] = detail::vector_to_json(r.z_theoretical);
  j["z_norm"] = r.z_norm;
  j["norm_bound"] = detail::opt_to_json(r.norm_bound);
  json flips = json::array();
  for (const auto& f : r.per_example_flip) flips.push_back(detail::opt_to_json(f));
  j["per_example_flip"] = flips;
  j["joint_flip_size"] = detail::opt_to_json(r.joint_flip_size);
  j["z"] = detail::vector_to_json(r.z);
  return j;
}

inline PerturbationReport perturbation_from_json(const json& j) {
  PerturbationReport r;
  try {
    r.mode = j.at("mode").get<std::string>() == "theoretical" ? PerturbationMode::kTheoretical
                                                              : PerturbationMode::kEmpirical;
    r.margin_set = j.at("margin_set").get<std::vector<Eigen::Index>>();
    r.z_hat = detail::vector_from_json(j.at("z_hat"));
    r.raw_sum = detail::vector_from_json(j.at("raw_sum"));
    if (!j.at("eta1").is_null()) r.eta1 = j.at("eta1").get<double>();
    if (!j.at("eta2").is_null()) r.eta2 = j.at("eta2").get<double>();
    r.z_theoretical = detail::vector_from_json(j.at("z_theoretical"));
    r.z_norm = j.at("z_norm").get<double>();
    if (!j.at("norm_bound").is_null()) r.norm_bound = j.at("norm_bound").get<double>();
    for (const auto& e : j.at("per_example_flip"))
      r.per_example_flip.push_back(e.is_null() ? std::optional<double>{}
                                               : std::optional<double>{e.get<double>()});
    if (!j.at("joint_flip_size").is_null())
      r.joint_flip_size = j.at("joint_flip_size").get<double>();
    r.z = detail::vector_from_json(j.at("z"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("perturbation report: ") + e.what());
  }
  return r;
}

// ---- KktReport (.kkt.json) ----

inline json to_json(const KktReport& r) {
  json j;
  j["lambdas"] = detail::vector_to_json(r.lambdas);
  j["stationarity_residual_w"] = r.stationarity_residual_w;
  j["stationarity_residual_b"] = r.stationarity_residual_b;
  j["stationarity_residual_v"] = r.stationarity_residual_v;
  j["complementarity_residual"] = r.complementarity_residual;
  j["feasibility_min_margin"] = r.feasibility_min_margin;
  return j;
}

// ---- Robustness certificate / certification report ----

inline json to_json(const RobustCertificate& c) {
  json j;
  j["margin_min"] = c.margin_min;
  j["claimed_radius"] = c.claimed_radius;
  j["c_used"] = c.c_used;
  j["width_k"] = c.width_k;
  return j;
}

inline json to_json(const CertifyReport& r) {
  json j;
  j["flips_found"] = r.flips_found;
  j["worst_margin_after"] = r.worst_margin_after;
  j["trials"] = r.trials;
  j["radius"] = r.radius;
  return j;
}

}  // namespace marlab
