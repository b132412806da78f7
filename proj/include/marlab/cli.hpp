#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "marlab/fixtures.hpp"
#include "marlab/io.hpp"
#include "marlab/sweep.hpp"

namespace marlab {

// Exit codes: 0 success, 1 module error, 2 bad arguments or config,
// 3 file I/O or parse failure, 4 sweep completed with failing rows.
inline constexpr int kExitOk = 0;
inline constexpr int kExitModuleError = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitIoError = 3;
inline constexpr int kExitRowFailure = 4;

namespace cli_detail {

struct TrainFlags {
  std::optional<std::string> loss;
  std::optional<double> lr0, lr_growth, stop_loss, init_scale_w, init_scale_v;
  std::optional<std::int64_t> lr_period, max_iters, batch_size;
  std::optional<std::uint64_t> init_seed;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--loss", loss, "loss kind: exponential|logistic");
    cmd->add_option("--lr0", lr0, "initial learning rate");
    cmd->add_option("--lr-growth", lr_growth, "learning-rate growth factor");
    cmd->add_option("--lr-period", lr_period, "iterations per growth step");
    cmd->add_option("--batch-size", batch_size, "mini-batch size");
    cmd->add_option("--stop-loss", stop_loss, "stop once the loss falls below this");
    cmd->add_option("--max-iters", max_iters, "iteration cap");
    cmd->add_option("--init-seed", init_seed, "initialization seed");
    cmd->add_option("--init-scale-w", init_scale_w, "std of W at init (default 1/sqrt(d))");
    cmd->add_option("--init-scale-v", init_scale_v, "std of v at init (default 1/sqrt(k))");
  }

  void apply(TrainConfig& cfg) const {
    if (loss) cfg.loss.kind = loss_kind_from_string(*loss);
    if (lr0) cfg.lr0 = *lr0;
    if (lr_growth) cfg.lr_growth = *lr_growth;
    if (lr_period) cfg.lr_period = *lr_period;
    if (batch_size) cfg.batch_size = *batch_size;
    if (stop_loss) cfg.stop_loss = *stop_loss;
    if (max_iters) cfg.max_iters = *max_iters;
    if (init_seed) cfg.init_seed = *init_seed;
    if (init_scale_w) cfg.init_scale_w = *init_scale_w;
    if (init_scale_v) cfg.init_scale_v = *init_scale_v;
  }
};

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"depth-2 ReLU margin/robustness laboratory"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate a dataset (.ds.json)");
  int gen_d = 0;
  std::int64_t gen_m = 0;
  std::uint64_t gen_seed = 0;
  bool gen_orth = false, gen_gauss = false;
  std::string gen_labels = "uniform", gen_out;
  gen->add_option("--d", gen_d, "input dimension")->required();
  gen->add_option("--m", gen_m, "number of points (defaults to d when --orthogonal)");
  gen->add_option("--seed", gen_seed, "sampling seed");
  gen->add_flag("--orthogonal", gen_orth, "scaled standard basis instead of random points");
  gen->add_flag("--gaussian", gen_gauss, "record the source as gaussian-normalized");
  gen->add_option("--labels", gen_labels, "label rule: uniform|alternating");
  gen->add_option("--out", gen_out, "output path")->required();

  // ---- train ----
  auto* tr = app.add_subcommand("train", "train a network on a dataset");
  std::string tr_ds, tr_net_out, tr_report_out;
  std::int64_t tr_width = 0;
  cli_detail::TrainFlags tr_flags;
  tr->add_option("--ds", tr_ds, "dataset file")->required();
  tr->add_option("--width", tr_width, "network width k")->required();
  tr->add_option("--net-out", tr_net_out, "write final parameters (.net.json)");
  tr->add_option("--report-out", tr_report_out, "write the training report (.train.json)");
  tr_flags.add_to(tr);

  // ---- attack ----
  auto* at = app.add_subcommand("attack", "universal perturbation report (.pert.json)");
  std::string at_net, at_ds, at_out;
  double at_slack = 1.1, at_cmax = -1.0;
  bool at_theoretical = false;
  at->add_option("--net", at_net, "network file")->required();
  at->add_option("--ds", at_ds, "dataset file")->required();
  at->add_option("--slack", at_slack, "margin-set slack");
  at->add_option("--c-max", at_cmax, "flip search cap (default 4 sqrt(d))");
  at->add_flag("--theoretical", at_theoretical, "closed-form perturbation from the margin set");
  at->add_option("--out", at_out, "output path");

  // ---- robust ----
  auto* rb = app.add_subcommand("robust", "build the provably robust network");
  std::string rb_ds, rb_net_out, rb_report_out;
  double rb_c = -1.0, rb_radius = -1.0;
  std::int64_t rb_width = 0, rb_budget = 1000;
  std::uint64_t rb_seed = 0;
  bool rb_certify = false;
  rb->add_option("--ds", rb_ds, "dataset file")->required();
  rb->add_option("--c", rb_c, "correlation level (default p_max/d)");
  rb->add_option("--width", rb_width, "width k >= m (default m)");
  rb->add_option("--net-out", rb_net_out, "write the constructed network");
  rb->add_flag("--certify", rb_certify, "run the falsification suite");
  rb->add_option("--radius", rb_radius, "certification radius (default 0.9 x claimed)");
  rb->add_option("--budget", rb_budget, "random attack directions per example");
  rb->add_option("--seed", rb_seed, "attack seed");
  rb->add_option("--report-out", rb_report_out, "write certificate + certification JSON");

  // ---- kkt ----
  auto* kk = app.add_subcommand("kkt", "KKT residual report (.kkt.json)");
  std::string kk_net, kk_ds, kk_out, kk_fixture;
  double kk_slack = 1.1, kk_tol = 1e-8;
  int kk_d = 3;
  kk->add_option("--net", kk_net, "network file");
  kk->add_option("--ds", kk_ds, "dataset file");
  kk->add_option("--slack", kk_slack, "margin-set slack");
  kk->add_option("--activation-tol", kk_tol, "band half-width for subgradient fitting");
  kk->add_option("--fixture", kk_fixture, "run a built-in exact fixture: antipodal");
  kk->add_option("--d", kk_d, "fixture dimension");
  kk->add_option("--out", kk_out, "output path");

  // ---- sweep ----
  auto* sw = app.add_subcommand("sweep", "run the experiment grid, emit CSV");
  std::string sw_config;
  std::vector<int> sw_dims;
  std::vector<double> sw_alphas;
  std::vector<std::int64_t> sw_widths;
  std::vector<std::uint64_t> sw_seeds;
  std::optional<double> sw_slack;
  std::optional<std::string> sw_outdir;
  std::optional<bool> sw_theo, sw_robust, sw_plots;
  std::optional<int> sw_workers;
  std::optional<std::int64_t> sw_budget;
  cli_detail::TrainFlags sw_train;
  sw->add_option("--config", sw_config, "sweep config JSON");
  sw->add_option("--dims", sw_dims, "dimensions")->delimiter(',');
  sw->add_option("--alphas", sw_alphas, "sample-size exponents")->delimiter(',');
  sw->add_option("--widths", sw_widths, "network widths")->delimiter(',');
  sw->add_option("--seeds", sw_seeds, "base seeds")->delimiter(',');
  sw->add_option("--slack", sw_slack, "margin-set slack");
  sw->add_option("--output-dir", sw_outdir, "output directory");
  sw->add_option("--run-theoretical", sw_theo, "compute the theoretical z norm");
  sw->add_option("--run-robust-baseline", sw_robust, "certify the robust net at the flip size");
  sw->add_option("--plots", sw_plots, "emit SVG charts");
  sw->add_option("--workers", sw_workers, "worker threads (0 = auto)");
  sw->add_option("--attack-budget", sw_budget, "robust-baseline trials per example");
  sw_train.add_to(sw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (gen->parsed()) {
      Dataset ds;
      const LabelRule rule = gen_labels == "alternating" ? LabelRule::kBalancedAlternating
                                                         : LabelRule::kUniform;
      if (gen_orth) {
        ds = gen_m > 0 ? orthogonal_subset(gen_d, gen_m) : orthogonal_dataset(gen_d);
      } else if (gen_gauss) {
        ds = sample_gaussian_normalized(gen_m, gen_d, gen_seed, rule);
      } else {
        ds = sample_sphere(gen_m, gen_d, gen_seed, rule);
      }
      save_json(gen_out, to_json(ds));
      const CorrelationStats st = correlation_stats(ds);
      std::cout << "wrote " << gen_out << ": m=" << ds.size() << " d=" << ds.d
                << " source=" << to_string(ds.source) << " p_max=" << st.p_max << "\n";
      return kExitOk;
    }

    if (tr->parsed()) {
      const Dataset ds = dataset_from_json(load_json(tr_ds));
      TrainConfig cfg;
      tr_flags.apply(cfg);
      const TrainReport report = train(ds, tr_width, cfg);
      if (!tr_net_out.empty()) save_json(tr_net_out, to_json(report.final_params));
      if (!tr_report_out.empty()) save_json(tr_report_out, to_json(report));
      std::cout << "trained k=" << tr_width << ": loss=" << report.final_loss
                << " iters=" << report.iterations_used
                << (report.converged ? "" : " (not converged)") << "\n";
      return kExitOk;
    }

    if (at->parsed()) {
      const NetworkParams net = network_from_json(load_json(at_net));
      const Dataset ds = dataset_from_json(load_json(at_ds));
      const MarginReport mr = margin_set(net, ds, at_slack);
      PerturbationReport report;
      if (at_theoretical) {
        report = theoretical_perturbation(ds, mr.margin_set);
        std::cout << "theoretical |I|=" << mr.margin_set.size() << ": |z|=" << report.z_norm
                  << " bound=" << *report.norm_bound << "\n";
      } else {
        report = empirical_perturbation(net, ds, mr, at_cmax);
        std::cout << "empirical |I|=" << mr.margin_set.size() << ": joint flip=";
        if (report.joint_flip_size)
          std::cout << *report.joint_flip_size << " (flip/sqrt(d)="
                    << *report.joint_flip_size / std::sqrt(static_cast<double>(ds.d)) << ")";
        else
          std::cout << "not-flipped within c_max";
        std::cout << "\n";
      }
      if (!at_out.empty()) save_json(at_out, to_json(report));
      return kExitOk;
    }

    if (rb->parsed()) {
      const Dataset ds = dataset_from_json(load_json(rb_ds));
      const double c = rb_c >= 0.0 ? rb_c
                                   : correlation_stats(ds).p_max / static_cast<double>(ds.d);
      const Eigen::Index k = rb_width > 0 ? rb_width : ds.size();
      const RobustNetwork net = build_robust(ds, c, k);
      if (!rb_net_out.empty()) save_json(rb_net_out, to_json(net.params));
      json report = to_json(net.cert);
      std::cout << "robust k=" << k << ": margin_min=" << net.cert.margin_min
                << " claimed_radius=" << net.cert.claimed_radius;
      if (rb_certify) {
        const double radius = rb_radius > 0.0 ? rb_radius : 0.9 * net.cert.claimed_radius;
        const CertifyReport cert = certify_radius(net.params, ds, radius, rb_budget, rb_seed);
        report["certification"] = to_json(cert);
        std::cout << " | certified radius=" << radius << " flips=" << cert.flips_found
                  << " worst_margin=" << cert.worst_margin_after;
      }
      std::cout << "\n";
      if (!rb_report_out.empty()) save_json(rb_report_out, report);
      return kExitOk;
    }

    if (kk->parsed()) {
      KktReport report;
      if (!kk_fixture.empty()) {
        if (kk_fixture != "antipodal")
          throw InvalidArgument("unknown fixture: " + kk_fixture);
        const AntipodalFixture fx = antipodal_kkt_fixture(kk_d);
        const std::vector<Eigen::Index> all{0, 1};
        report = kkt_residual(fx.params, fx.ds, all, kk_tol);
      } else {
        if (kk_net.empty() || kk_ds.empty())
          throw InvalidArgument("kkt: need --net and --ds (or --fixture)");
        const NetworkParams net = network_from_json(load_json(kk_net));
        const Dataset ds = dataset_from_json(load_json(kk_ds));
        const NetworkParams normalized = normalize_to_margin(net, ds);
        const MarginReport mr = margin_set(normalized, ds, kk_slack);
        report = kkt_residual(normalized, ds, mr.margin_set, kk_tol);
      }
      std::cout << "kkt residuals: w=" << report.stationarity_residual_w
                << " b=" << report.stationarity_residual_b
                << " v=" << report.stationarity_residual_v
                << " compl=" << report.complementarity_residual
                << " min_margin=" << report.feasibility_min_margin << "\n";
      if (!kk_out.empty()) save_json(kk_out, to_json(report));
      return kExitOk;
    }

    if (sw->parsed()) {
      SweepConfig cfg;
      if (!sw_config.empty()) {
        const json j = load_json(sw_config);
        try {
          if (j.contains("dims")) cfg.dims = j["dims"].get<std::vector<int>>();
          if (j.contains("alpha_list"))
            cfg.alpha_list = j["alpha_list"].get<std::vector<double>>();
          if (j.contains("widths"))
            cfg.widths = j["widths"].get<std::vector<Eigen::Index>>();
          if (j.contains("seeds"))
            cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
          if (j.contains("train")) cfg.train = train_config_from_json(j["train"]);
          if (j.contains("slack")) cfg.slack = j["slack"].get<double>();
          if (j.contains("mode_flags")) {
            const auto& mf = j["mode_flags"];
            if (mf.contains("run_theoretical"))
              cfg.mode_flags.run_theoretical = mf["run_theoretical"].get<bool>();
            if (mf.contains("run_robust_baseline"))
              cfg.mode_flags.run_robust_baseline = mf["run_robust_baseline"].get<bool>();
          }
          if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
          if (j.contains("plots")) cfg.plots = j["plots"].get<bool>();
          if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
          if (j.contains("attack_budget"))
            cfg.attack_budget = j["attack_budget"].get<std::int64_t>();
        } catch (const json::exception& e) {
          throw ParseError(std::string("sweep config: ") + e.what());
        }
      }
      if (!sw_dims.empty()) cfg.dims = sw_dims;
      if (!sw_alphas.empty()) cfg.alpha_list = sw_alphas;
      if (!sw_widths.empty()) {
        cfg.widths.assign(sw_widths.begin(), sw_widths.end());
      }
      if (!sw_seeds.empty()) cfg.seeds = sw_seeds;
      if (sw_slack) cfg.slack = *sw_slack;
      if (sw_outdir) cfg.output_dir = *sw_outdir;
      if (sw_theo) cfg.mode_flags.run_theoretical = *sw_theo;
      if (sw_robust) cfg.mode_flags.run_robust_baseline = *sw_robust;
      if (sw_plots) cfg.plots = *sw_plots;
      if (sw_workers) cfg.workers = *sw_workers;
      if (sw_budget) cfg.attack_budget = *sw_budget;
      sw_train.apply(cfg.train);

      SweepResult result;
      try {
        result = run_sweep(cfg);
      } catch (const InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
      }
      std::int64_t failures = 0;
      for (const auto& r : result.rows)
        if (r.status != "ok") ++failures;
      std::cout << "wrote " << result.csv_path << ": " << result.rows.size() << " rows, "
                << failures << " failures\n";
      return result.any_failed ? kExitRowFailure : kExitOk;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitModuleError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitModuleError;
  }
  return kExitConfigError;
}

}  // namespace marlab
