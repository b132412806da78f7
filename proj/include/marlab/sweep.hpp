#pragma once

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "marlab/attack.hpp"
#include "marlab/dataset.hpp"
#include "marlab/kkt.hpp"
#include "marlab/robust.hpp"
#include "marlab/svg.hpp"
#include "marlab/trainer.hpp"

namespace marlab {

struct ModeFlags {
  bool run_theoretical = true;
  bool run_robust_baseline = false;
};

/// Cross product of dimensions, sample-size exponents (m = round(d^alpha)),
/// widths and base seeds; one trained-and-attacked run per combination.
struct SweepConfig {
  std::vector<int> dims;
  std::vector<double> alpha_list;
  std::vector<Eigen::Index> widths;
  std::vector<std::uint64_t> seeds;
  TrainConfig train;
  double slack = 1.1;
  ModeFlags mode_flags;
  std::string output_dir = "sweep-out";
  bool plots = false;
  int workers = 0;                    // 0 = hardware concurrency
  std::int64_t attack_budget = 1000;  // robust-baseline trials per example

  void validate() const {
    if (dims.empty() || alpha_list.empty() || widths.empty() || seeds.empty())
      throw InvalidArgument("sweep config: dims, alpha_list, widths and seeds must be nonempty");
    for (int d : dims)
      if (d < 1) throw InvalidArgument("sweep config: dims must be positive");
    for (double a : alpha_list)
      if (!(a > 0.0)) throw InvalidArgument("sweep config: alphas must be positive");
    for (Eigen::Index w : widths)
      if (w < 1) throw InvalidArgument("sweep config: widths must be positive");
    if (!(slack >= 1.0)) throw InvalidArgument("sweep config: slack must be at least 1");
    train.validate();
  }
};

struct SweepRow {
  std::uint64_t seed = 0;
  int d = 0;
  Eigen::Index m = 0;
  double alpha = 0.0;
  Eigen::Index width = 0;
  double final_loss = 0.0;
  std::int64_t iterations = 0;
  double margin_min = 0.0;
  Eigen::Index margin_set_size = 0;
  double margin_ratio = 0.0;
  std::optional<double> joint_flip_size;
  std::optional<double> flip_over_sqrtd;
  double p_max = 0.0;
  double balance_c = 0.0;
  std::optional<double> theoretical_z_norm;
  std::optional<double> kkt_residual_w;
  std::string status = "ok";
};

inline constexpr const char* kSweepCsvHeader =
    "seed,d,m,alpha,width,final_loss,iterations,margin_min,margin_set_size,margin_ratio,"
    "joint_flip_size,flip_over_sqrtd,p_max,balance_c,theoretical_z_norm,kkt_residual_w,status";

/// Dataset seed: independent of width and retry attempt, so correlation
/// columns agree across widths for the same (d, alpha, seed).
inline std::uint64_t derive_dataset_seed(std::uint64_t base_seed, int d, double alpha) {
  return hash64({base_seed, static_cast<std::uint64_t>(d), double_bits(alpha)});
}

/// Initialization seed: also keyed by width and retry attempt.
inline std::uint64_t derive_init_seed(std::uint64_t base_seed, int d, double alpha,
                                      Eigen::Index width, std::uint64_t attempt) {
  return hash64({base_seed, static_cast<std::uint64_t>(d), double_bits(alpha),
                 static_cast<std::uint64_t>(width), attempt});
}

inline Eigen::Index samples_for(int d, double alpha) {
  return static_cast<Eigen::Index>(
      std::llround(std::pow(static_cast<double>(d), alpha)));
}

namespace detail {

inline std::string fmt_double(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string fmt_opt(const std::optional<double>& x) {
  return x ? fmt_double(*x) : std::string();
}

inline std::string csv_line(const SweepRow& r, bool aggregate) {
  std::string line;
  line += aggregate ? std::string() : std::to_string(r.seed);
  line += ',' + std::to_string(r.d);
  line += ',' + std::to_string(r.m);
  line += ',' + fmt_double(r.alpha);
  line += ',' + std::to_string(r.width);
  line += ',' + fmt_double(r.final_loss);
  line += ',' + fmt_double(static_cast<double>(r.iterations));
  line += ',' + fmt_double(r.margin_min);
  line += ',' + fmt_double(static_cast<double>(r.margin_set_size));
  line += ',' + fmt_double(r.margin_ratio);
  line += ',' + fmt_opt(r.joint_flip_size);
  line += ',' + fmt_opt(r.flip_over_sqrtd);
  line += ',' + fmt_double(r.p_max);
  line += ',' + fmt_double(r.balance_c);
  line += ',' + fmt_opt(r.theoretical_z_norm);
  line += ',' + fmt_opt(r.kkt_residual_w);
  line += ',' + r.status;
  return line;
}

/// Mean/std accumulation over the optional and plain numeric columns.
struct GroupStats {
  std::vector<SweepRow> rows;

  static double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  }
  static double std_of(const std::vector<double>& v) {
    const double mu = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  }
};

}  // namespace detail

struct SweepResult {
  std::vector<SweepRow> rows;  // data rows in config order
  std::string csv_path;
  bool any_failed = false;
};

/// One full pipeline run: sample, train (one retry on divergence with a
/// shifted init seed), margin set, universal flip sizes, whole-dataset
/// theoretical norm when its hypothesis holds, optional robust baseline
/// check at the measured flip size, KKT residual.
inline SweepRow sweep_run_single(const SweepConfig& cfg, int d, double alpha,
                                 Eigen::Index width, std::uint64_t base_seed,
                                 std::vector<std::string>& log) {
  SweepRow row;
  row.seed = base_seed;
  row.d = d;
  row.alpha = alpha;
  row.width = width;
  row.m = samples_for(d, alpha);

  const Dataset ds = sample_sphere(row.m, d, derive_dataset_seed(base_seed, d, alpha));
  const CorrelationStats stats = correlation_stats(ds);
  row.p_max = stats.p_max;
  row.balance_c = stats.balance_c;

  TrainConfig tc = cfg.train;
  TrainReport report;
  bool trained = false;
  for (std::uint64_t attempt : {std::uint64_t{0}, std::uint64_t{1000}}) {
    tc.init_seed = derive_init_seed(base_seed, d, alpha, width, attempt);
    try {
      report = train(ds, width, tc);
      trained = true;
      if (attempt != 0)
        log.push_back("retry succeeded: d=" + std::to_string(d) + " alpha=" +
                      detail::fmt_double(alpha) + " width=" + std::to_string(width) +
                      " seed=" + std::to_string(base_seed));
      break;
    } catch (const TrainDivergence& e) {
      log.push_back(std::string("divergence (attempt ") + std::to_string(attempt) +
                    "): " + e.what());
    }
  }
  if (!trained) {
    row.status = "diverged";
    return row;
  }

  row.final_loss = report.final_loss;
  row.iterations = report.iterations_used;
  if (!report.converged) {
    row.status = "not-converged";
    return row;
  }

  const MarginReport mr = margin_set(report.final_params, ds, cfg.slack);
  row.margin_min = mr.margins.minCoeff();
  row.margin_set_size = static_cast<Eigen::Index>(mr.margin_set.size());
  row.margin_ratio = static_cast<double>(row.margin_set_size) / static_cast<double>(row.m);

  const PerturbationReport pert = empirical_perturbation(report.final_params, ds, mr);
  row.joint_flip_size = pert.joint_flip_size;
  if (pert.joint_flip_size)
    row.flip_over_sqrtd = *pert.joint_flip_size / std::sqrt(static_cast<double>(d));

  if (cfg.mode_flags.run_theoretical) {
    // Whole-dataset variant: depends only on the data, never on the width.
    std::vector<Eigen::Index> all(ds.size());
    for (Eigen::Index i = 0; i < ds.size(); ++i) all[static_cast<std::size_t>(i)] = i;
    try {
      row.theoretical_z_norm = theoretical_perturbation(ds, all).z_norm;
    } catch (const HypothesisViolated&) {
      // hypothesis m(p+1)/(d+1) <= 1/3 fails; column stays empty
    } catch (const InvalidArgument&) {
      // one-sided labels
    }
  }

  std::optional<std::string> failure;
  if (!pert.joint_flip_size) {
    failure = "not-flipped";
  } else if (cfg.mode_flags.run_robust_baseline) {
    const double c = stats.p_max / static_cast<double>(d);
    const RobustNetwork robust = build_robust(ds, c, ds.size());
    const CertifyReport cert =
        certify_radius(robust.params, ds, *pert.joint_flip_size, cfg.attack_budget,
                       hash64({base_seed, static_cast<std::uint64_t>(d), double_bits(alpha),
                               static_cast<std::uint64_t>(width), 0xc3f1ULL}));
    if (cert.flips_found > 0) failure = "robust-flip";
  }

  const NetworkParams normalized = normalize_to_margin(report.final_params, ds);
  row.kkt_residual_w = kkt_residual(normalized, ds, mr.margin_set).stationarity_residual_w;

  if (failure) row.status = *failure;
  return row;
}

namespace detail {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void append_aggregates(std::vector<std::string>& lines,
                              const std::vector<SweepRow>& rows) {
  // group key in config order of first appearance
  std::vector<std::tuple<int, double, Eigen::Index>> order;
  std::map<std::tuple<int, double, Eigen::Index>, std::vector<const SweepRow*>> groups;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.d, r.alpha, r.width);
    if (groups.find(key) == groups.end()) order.push_back(key);
    auto& members = groups[key];
    if (r.status == "ok") members.push_back(&r);
  }
  for (const auto& key : order) {
    const auto& members = groups[key];
    if (members.empty()) continue;
    auto collect = [&](auto getter) {
      std::vector<double> vals;
      for (const SweepRow* r : members) {
        const auto v = getter(*r);
        if (v) vals.push_back(*v);
      }
      return vals;
    };
    auto make_row = [&](bool stddev) {
      SweepRow agg;
      agg.d = std::get<0>(key);
      agg.alpha = std::get<1>(key);
      agg.width = std::get<2>(key);
      agg.m = members.front()->m;
      auto reduce = [&](const std::vector<double>& vals) -> std::optional<double> {
        if (vals.empty() || (stddev && vals.size() < 2)) return std::nullopt;
        return stddev ? GroupStats::std_of(vals) : GroupStats::mean_of(vals);
      };
      auto plain = [&](const std::vector<double>& vals) {
        const auto r = reduce(vals);
        return r ? *r : 0.0;
      };
      agg.final_loss = plain(collect([](const SweepRow& r) {
        return std::optional<double>(r.final_loss);
      }));
      agg.iterations = 0;  // formatted from the double below
      const auto iters = plain(collect([](const SweepRow& r) {
        return std::optional<double>(static_cast<double>(r.iterations));
      }));
      agg.margin_min = plain(collect([](const SweepRow& r) {
        return std::optional<double>(r.margin_min);
      }));
      const auto mset = plain(collect([](const SweepRow& r) {
        return std::optional<double>(static_cast<double>(r.margin_set_size));
      }));
      agg.margin_ratio = plain(collect([](const SweepRow& r) {
        return std::optional<double>(r.margin_ratio);
      }));
      agg.joint_flip_size = reduce(collect([](const SweepRow& r) { return r.joint_flip_size; }));
      agg.flip_over_sqrtd = reduce(collect([](const SweepRow& r) { return r.flip_over_sqrtd; }));
      agg.p_max = plain(collect([](const SweepRow& r) {
        return std::optional<double>(r.p_max);
      }));
      agg.balance_c = plain(collect([](const SweepRow& r) {
        return std::optional<double>(r.balance_c);
      }));
      agg.theoretical_z_norm =
          reduce(collect([](const SweepRow& r) { return r.theoretical_z_norm; }));
      agg.kkt_residual_w = reduce(collect([](const SweepRow& r) { return r.kkt_residual_w; }));
      agg.status = stddev ? "std" : "mean";

      // aggregate rows carry fractional means for the integer columns
      std::string line;
      line += ',' + std::to_string(agg.d);
      line += ',' + std::to_string(agg.m);
      line += ',' + fmt_double(agg.alpha);
      line += ',' + std::to_string(agg.width);
      line += ',' + fmt_double(agg.final_loss);
      line += ',' + fmt_double(iters);
      line += ',' + fmt_double(agg.margin_min);
      line += ',' + fmt_double(mset);
      line += ',' + fmt_double(agg.margin_ratio);
      line += ',' + fmt_opt(agg.joint_flip_size);
      line += ',' + fmt_opt(agg.flip_over_sqrtd);
      line += ',' + fmt_double(agg.p_max);
      line += ',' + fmt_double(agg.balance_c);
      line += ',' + fmt_opt(agg.theoretical_z_norm);
      line += ',' + fmt_opt(agg.kkt_residual_w);
      line += ',' + agg.status;
      return line;
    };
    lines.push_back(make_row(false));
    if (members.size() >= 2) lines.push_back(make_row(true));
  }
}

}  // namespace detail

/// Re-derive every aggregate row of a sweep CSV from its data rows and
/// compare byte-for-byte. Comment lines (leading '#') are ignored.
inline bool audit_sweep_csv(const std::string& path);

inline SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  const std::string csv_path = (fs::path(cfg.output_dir) / "sweep.csv").string();
  const std::string log_path = (fs::path(cfg.output_dir) / "sweep.log").string();
  std::ofstream csv(csv_path);
  std::ofstream logf(log_path);
  if (!csv || !logf) throw IoError("sweep output directory is not writable: " + cfg.output_dir);

  struct Task {
    int d;
    double alpha;
    Eigen::Index width;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (int d : cfg.dims)
    for (double alpha : cfg.alpha_list)
      for (Eigen::Index width : cfg.widths)
        for (std::uint64_t seed : cfg.seeds) tasks.push_back({d, alpha, width, seed});

  std::vector<SweepRow> rows(tasks.size());
  std::vector<std::vector<std::string>> logs(tasks.size());
  std::atomic<std::size_t> next{0};
  int workers = cfg.workers > 0 ? cfg.workers
                                : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = std::min<int>(workers, static_cast<int>(tasks.size()));

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      const Task& t = tasks[i];
      try {
        rows[i] = sweep_run_single(cfg, t.d, t.alpha, t.width, t.seed, logs[i]);
      } catch (const std::exception& e) {
        rows[i].seed = t.seed;
        rows[i].d = t.d;
        rows[i].alpha = t.alpha;
        rows[i].width = t.width;
        rows[i].m = samples_for(t.d, t.alpha);
        rows[i].status = "error";
        logs[i].push_back(std::string("error: ") + e.what());
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  csv << "# generated " << detail::utc_timestamp() << " prng=" << kPrngName << "\n";
  csv << kSweepCsvHeader << "\n";
  std::vector<std::string> lines;
  for (const auto& r : rows) lines.push_back(detail::csv_line(r, false));
  detail::append_aggregates(lines, rows);
  for (const auto& l : lines) csv << l << "\n";
  csv.close();
  for (const auto& runlog : logs)
    for (const auto& line : runlog) logf << line << "\n";
  logf.close();

  if (!audit_sweep_csv(csv_path))
    throw std::logic_error("sweep: aggregate audit failed for " + csv_path);

  if (cfg.plots) {
    for (double alpha : cfg.alpha_list) {
      for (Eigen::Index width : cfg.widths) {
        SvgSeries flips{"mean joint flip size", "#d62728", {}};
        SvgSeries ref{"sqrt(d)", "#7f7f7f", {}};
        for (int d : cfg.dims) {
          std::vector<double> vals;
          for (const auto& r : rows)
            if (r.d == d && r.alpha == alpha && r.width == width && r.status == "ok" &&
                r.joint_flip_size)
              vals.push_back(*r.joint_flip_size);
          if (!vals.empty())
            flips.points.emplace_back(d, detail::GroupStats::mean_of(vals));
          ref.points.emplace_back(d, std::sqrt(static_cast<double>(d)));
        }
        std::ostringstream name;
        name << "flip_alpha" << alpha << "_w" << width << ".svg";
        write_svg_line_chart((fs::path(cfg.output_dir) / name.str()).string(),
                             "minimal universal flip size vs dimension", {flips, ref});
      }
    }
  }

  SweepResult result;
  result.rows = std::move(rows);
  result.csv_path = csv_path;
  for (const auto& r : result.rows)
    if (r.status != "ok") result.any_failed = true;
  return result;
}

inline bool audit_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sweep CSV: " + path);
  std::string line;
  std::vector<std::string> data_lines, aggregate_lines;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kSweepCsvHeader) return false;
      header_seen = true;
      continue;
    }
    const auto last_comma = line.find_last_of(',');
    const std::string status = line.substr(last_comma + 1);
    if (status == "mean" || status == "std")
      aggregate_lines.push_back(line);
    else
      data_lines.push_back(line);
  }

  // Reconstruct rows from the CSV text and recompute the aggregate block.
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto pos = s.find(',', start);
      if (pos == std::string::npos) {
        cells.push_back(s.substr(start));
        break;
      }
      cells.push_back(s.substr(start, pos - start));
      start = pos + 1;
    }
    return cells;
  };
  auto parse_double = [](const std::string& s) {
    double x = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), x);
    return x;
  };
  std::vector<SweepRow> rows;
  for (const auto& dl : data_lines) {
    const auto cells = split(dl);
    if (cells.size() != 17) return false;
    SweepRow r;
    r.seed = cells[0].empty() ? 0 : std::stoull(cells[0]);
    r.d = std::stoi(cells[1]);
    r.m = std::stoll(cells[2]);
    r.alpha = parse_double(cells[3]);
    r.width = std::stoll(cells[4]);
    r.final_loss = parse_double(cells[5]);
    r.iterations = std::llround(parse_double(cells[6]));
    r.margin_min = parse_double(cells[7]);
    r.margin_set_size = std::llround(parse_double(cells[8]));
    r.margin_ratio = parse_double(cells[9]);
    if (!cells[10].empty()) r.joint_flip_size = parse_double(cells[10]);
    if (!cells[11].empty()) r.flip_over_sqrtd = parse_double(cells[11]);
    r.p_max = parse_double(cells[12]);
    r.balance_c = parse_double(cells[13]);
    if (!cells[14].empty()) r.theoretical_z_norm = parse_double(cells[14]);
    if (!cells[15].empty()) r.kkt_residual_w = parse_double(cells[15]);
    r.status = cells[16];
    rows.push_back(r);
  }
  std::vector<std::string> expected;
  detail::append_aggregates(expected, rows);
  return expected == aggregate_lines;
}

}  // namespace marlab
