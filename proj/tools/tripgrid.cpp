#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "tripgrid/core/csv_io.hpp"
#include "tripgrid/core/metrics.hpp"
#include "tripgrid/core/tste.hpp"
#include "tripgrid/econ/econ.hpp"
#include "tripgrid/harness/curves.hpp"
#include "tripgrid/oracle/ground_truth.hpp"
#include "tripgrid/service/http.hpp"
#include "tripgrid/service/offline.hpp"

namespace fs = std::filesystem;
using namespace tripgrid;

namespace {

std::size_t max_object(std::span<const Triplet> ts) {
  std::size_t m = 0;
  for (const auto& t : ts) m = std::max<std::size_t>({m, t.probe, t.near, t.far});
  return m;
}

void print_summary(std::span<const harness::StrategySummary> summary) {
  std::printf("%-22s %6s %10s %10s %10s\n", "strategy", "seeds", "tge", "loo_nn", "dollars");
  for (const auto& s : summary) {
    std::printf("%-22s %6zu %10.4f %10.4f %10.2f\n", s.strategy.c_str(), s.seeds, s.median_final_tge,
                s.median_final_loo_nn, s.median_final_dollars);
  }
}

service::HttpServer* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tripgrid: grid-based triplet collection, t-STE embedding and cost analysis"};
  app.require_subcommand(0, 1);
  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults, "Print the default experiment config as JSON and exit");

  // run
  auto* run = app.add_subcommand("run", "Run a synthetic collection experiment and write learning curves");
  std::string config_path, out_dir = "out";
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> budget;
  std::size_t threads = 0;
  run->add_option("--config", config_path, "Experiment config (JSON)");
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--seeds", seeds, "Override the seed list")->delimiter(',');
  run->add_option("--budget-screens", budget, "Override the screen budget");
  run->add_option("--threads", threads, "Worker threads (0 = one per core)");

  // distribution
  auto* dist = app.add_subcommand("distribution", "Occurrence histograms for grid versus random triplets");
  harness::DistributionConfig dcfg;
  std::string dist_out;
  dist->add_option("--objects", dcfg.n_objects)->capture_default_str();
  dist->add_option("--clusters", dcfg.n_clusters)->capture_default_str();
  dist->add_option("--triplets", dcfg.triplets)->capture_default_str();
  dist->add_option("--grid-n", dcfg.grid.n)->capture_default_str();
  dist->add_option("--grid-k", dcfg.grid.k)->capture_default_str();
  dist->add_option("--seed", dcfg.seed)->capture_default_str();
  dist->add_option("--out", dist_out, "Histogram CSV (object,grid,random)");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a t-STE embedding to a triplet CSV");
  std::string fit_in, fit_out;
  std::size_t fit_n = 0;
  TsteConfig fit_cfg;
  double fit_alpha = 0.0;
  fit->add_option("--triplets", fit_in, "Triplet CSV")->required();
  fit->add_option("--out", fit_out, "Embedding CSV")->required();
  fit->add_option("--objects", fit_n, "Object count (default: largest id + 1)");
  fit->add_option("--dim", fit_cfg.dim)->capture_default_str();
  fit->add_option("--alpha", fit_alpha, "Student-t degrees of freedom (default max(5, dim - 1))");
  fit->add_option("--max-iters", fit_cfg.max_iters)->capture_default_str();
  fit->add_option("--seed", fit_cfg.seed)->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "Score an embedding against triplets and optional labels");
  std::string eval_emb, eval_triplets, eval_labels;
  eval->add_option("--embedding", eval_emb, "Embedding CSV")->required();
  eval->add_option("--triplets", eval_triplets, "Held-out triplet CSV")->required();
  eval->add_option("--labels", eval_labels, "Vector file whose labels drive the LOO-NN error");

  // recommend
  auto* rec = app.add_subcommand("recommend", "Suggest the largest n-choose-n/2 grid that meets a wage floor");
  std::string timing_path;
  double wage_floor = 6.0;
  rec->add_option("--timing", timing_path, "Timing CSV (n,k,seconds); default: built-in table");
  rec->add_option("--wage-floor", wage_floor, "Minimum hourly wage in dollars")->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the collection HTTP service");
  service::ServeConfig scfg;
  std::string data_dir = "data", manifest;
  serve->add_option("--host", scfg.host)->capture_default_str();
  serve->add_option("--port", scfg.port)->capture_default_str();
  serve->add_option("--data-dir", data_dir)->capture_default_str();
  serve->add_option("--assets", scfg.asset_root, "Directory catalog paths are relative to")->capture_default_str();
  serve->add_option("--ui", scfg.ui_dir, "Static directory for the browser client");
  serve->add_option("--manifest", manifest, "Create this experiment on start unless it already exists");

  // replay
  auto* replay = app.add_subcommand("replay", "Rebuild the triplet export offline from a manifest and answer log");
  std::string replay_manifest, replay_log, replay_out;
  std::optional<double> exclude_rate;
  replay->add_option("--manifest", replay_manifest)->required();
  replay->add_option("--log", replay_log)->required();
  replay->add_option("--out", replay_out, "Triplet CSV (default: stdout)");
  replay->add_option("--exclude-failed-catch-workers", exclude_rate,
                     "Drop workers whose catch pass rate is below this fraction");

  CLI11_PARSE(app, argc, argv);

  try {
    if (print_defaults) {
      std::cout << harness::to_json(harness::ExperimentConfig{}).dump(2) << '\n';
      return 0;
    }

    if (*run) {
      auto cfg = config_path.empty() ? harness::ExperimentConfig{} : harness::load_config(config_path);
      if (!seeds.empty()) cfg.seeds = seeds;
      if (budget) cfg.set_budget(*budget);
      if (threads) cfg.threads = threads;
      cfg.validate();
      fs::create_directories(out_dir);
      const auto curves = harness::run_experiment(cfg);
      harness::emit_curves_csv((fs::path(out_dir) / "curves.csv").string(), curves, cfg);
      const auto summary = harness::summarize(curves);
      std::ofstream(fs::path(out_dir) / "summary.json") << harness::summary_json(summary).dump(2) << '\n';
      print_summary(summary);
      return 0;
    }

    if (*dist) {
      const auto r = harness::reproduce_distribution_figure(dcfg);
      std::printf("triplets %zu (grid screens %zu)\n", r.triplets, r.grid_screens);
      std::printf("grid   mean %.3f std %.3f\n", r.grid.mean, r.grid.stddev);
      std::printf("random mean %.3f std %.3f\n", r.random.mean, r.random.stddev);
      if (!dist_out.empty()) {
        std::ofstream out(dist_out);
        out << "object,grid,random\n";
        for (std::size_t i = 0; i < dcfg.n_objects; ++i) out << i << ',' << r.grid.histogram[i] << ',' << r.random.histogram[i] << '\n';
        if (!out) throw IoError("cannot write " + dist_out);
      }
      return 0;
    }

    if (*fit) {
      const auto ts = csv::read_triplets_file(fit_in);
      const std::size_t n = fit_n ? fit_n : (ts.empty() ? 0 : max_object(ts) + 1);
      if (fit_alpha > 0.0) fit_cfg.alpha = fit_alpha;
      TsteTrace trace;
      const auto emb = tste_fit(ts, n, fit_cfg, &trace);
      csv::write_embedding_file(fit_out, emb);
      std::printf("fitted %zu points from %zu triplets: log-likelihood %.6f after %zu iterations, training error %.4f\n",
                  n, ts.size(), trace.final_log_likelihood, trace.iterations,
                  ts.empty() ? 0.0 : triplet_generalization_error(emb, ts));
      return 0;
    }

    if (*eval) {
      const auto emb = csv::read_embedding_file(eval_emb);
      const auto ts = csv::read_triplets_file(eval_triplets);
      std::printf("tge %.6f\n", triplet_generalization_error(emb, ts));
      if (!eval_labels.empty()) {
        const auto gt = load_vectors(eval_labels);
        std::printf("loo_nn %.6f\n", loo_nn_error(emb, gt.labels));
      }
      return 0;
    }

    if (*rec) {
      econ::TimingTable timing = econ::default_timing_table();
      if (!timing_path.empty()) {
        std::ifstream in(timing_path);
        if (!in) throw IoError("cannot open " + timing_path);
        timing = econ::read_timing_table(in);
      }
      for (const auto& [nk, secs] : timing) {
        std::printf("%2zu-choose-%-2zu %6.2f s  $%6.2f/hr  %4zu triplets/screen\n", nk.first, nk.second, secs,
                    econ::hourly_wage(secs), econ::triplets_per_answer(nk.first, nk.second));
      }
      const auto choice = econ::recommend_grid(timing, {}, wage_floor);
      if (!choice) {
        std::printf("no measured n-choose-n/2 grid pays at least $%.2f/hr\n", wage_floor);
        return 2;
      }
      std::printf("recommend %zu-choose-%zu ($%.2f/hr)\n", choice->n, choice->k, choice->wage);
      return 0;
    }

    if (*serve) {
      service::CollectionService svc(data_dir);
      if (!manifest.empty()) {
        std::ifstream in(manifest);
        if (!in) throw IoError("cannot open manifest " + manifest);
        auto exp = service::experiment_from_json(nlohmann::json::parse(in));
        if (exp.experiment_id.empty() || !svc.contains(exp.experiment_id)) {
          std::printf("created experiment %s\n", svc.create_experiment(exp).c_str());
        }
      }
      service::HttpServer server(svc, scfg);
      const int port = server.bind();
      g_server = &server;
      std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
      std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
      std::printf("listening on %s:%d, data in %s\n", scfg.host.c_str(), port, data_dir.c_str());
      std::fflush(stdout);
      server.listen();
      return 0;
    }

    if (*replay) {
      const auto out = service::offline_export_files(replay_manifest, replay_log, exclude_rate);
      if (replay_out.empty()) {
        std::cout << out.csv;
      } else {
        std::ofstream f(replay_out, std::ios::binary);
        f << out.csv;
        if (!f) throw IoError("cannot write " + replay_out);
      }
      std::fprintf(stderr, "raw %zu unique %zu\n", out.raw, out.unique);
      return 0;
    }

    std::cout << app.help();
    return 0;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
  }
  return 1;
}
