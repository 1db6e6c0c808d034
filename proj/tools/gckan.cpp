// gckan: Granger-causality detection with KAN and cMLP models.
//
// Subcommands:
//   simulate   generate a VAR or Lorenz-96 panel with ground truth
//   run        train per-target models over a proximal-strength sweep,
//              extract causality, evaluate ROC/AUROC
//   report     merge results.json files into a comparison table
//   selftest   run the numeric property suites
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gckan/experiment.hpp"
#include "gckan/selftest.hpp"

namespace {

using namespace gckan;

struct CommonOpts {
  std::string preset;
  std::string config_path;
  std::string output_dir;
  bool list_presets = false;
};

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.preset.empty() && !opts.config_path.empty())
    throw ConfigError("use either --preset or --config, not both");
  if (!opts.preset.empty()) {
    cfg = make_preset(opts.preset);
  } else if (!opts.config_path.empty()) {
    cfg = config_from_json(load_json_file(opts.config_path));
  } else {
    throw ConfigError("need --preset NAME or --config FILE (try --list-presets)");
  }
  if (!opts.output_dir.empty()) cfg.output_dir = opts.output_dir;
  return cfg;
}

void print_presets() {
  std::cout << "bundled presets:\n";
  for (const std::string& name : preset_names()) std::cout << "  " << name << "\n";
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      seeds.push_back(std::stoull(cell));
    } catch (const std::exception&) {
      throw ConfigError("bad seed list entry: '" + cell + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      values.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ConfigError("bad numeric list entry: '" + cell + "'");
    }
  }
  return values;
}

int cmd_simulate(const CommonOpts& opts) {
  RunConfig cfg = resolve_config(opts);
  if (cfg.generator.kind == "csv")
    throw ConfigError("simulate needs a var or lorenz96 generator");
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const std::string hash = config_hash(cfg);

  TimeSeries series;
  GroundTruth truth;
  if (cfg.generator.kind == "var") {
    VarSim sim = simulate_var(cfg.generator.var);
    series = std::move(sim.series);
    truth = std::move(sim.truth);
  } else {
    LorenzSim sim = simulate_lorenz96(cfg.generator.lorenz);
    series = std::move(sim.series);
    truth = std::move(sim.truth);
  }
  const fs::path outdir(cfg.output_dir);
  write_panel_csv(outdir / "data.csv", series, hash);
  write_json_file(outdir / "truth.json", truth_to_json(truth, hash));
  Json echo = generator_to_json(cfg.generator);
  echo["config_hash"] = hash;
  echo["tool_version"] = std::string(kToolVersion);
  echo["schema_version"] = kSchemaVersion;
  write_json_file(outdir / "simulate.resolved.json", echo);
  std::cout << "wrote " << (outdir / "data.csv").string() << " (" << series.values.rows() << "x"
            << series.values.cols() << ") and truth.json\n";
  return 0;
}

int cmd_run(const CommonOpts& opts, const std::string& model, const std::string& seeds_csv,
            const std::string& sweep_csv, int epochs, double eta, double lambda, int max_lag,
            int workers, bool save_models, bool save_logs, bool no_svg, bool include_diagonal,
            const std::string& contribution_mode, bool quiet) {
  RunConfig cfg = resolve_config(opts);
  if (!model.empty()) apply_model_kind(cfg, model);
  if (!seeds_csv.empty()) cfg.seeds = parse_seed_list(seeds_csv);
  if (!sweep_csv.empty()) cfg.sweep = parse_double_list(sweep_csv);
  if (epochs >= 0) cfg.train.epochs = epochs;
  if (eta > 0) cfg.train.eta = eta;
  if (lambda >= 0) cfg.train.lambda = lambda;
  if (max_lag > 0) cfg.train.max_lag = max_lag;
  if (workers > 0) cfg.workers = workers;
  if (save_models) cfg.save_models = true;
  if (save_logs) cfg.save_training_logs = true;
  if (no_svg) cfg.write_svg = false;
  if (include_diagonal) cfg.include_diagonal = true;
  if (!contribution_mode.empty()) cfg.contribution_mode = contribution_mode;

  const RunResults results = run_experiment(cfg, quiet ? nullptr : &std::cerr);
  write_run_outputs(results);
  std::cout << "experiment " << cfg.experiment << " model=" << cfg.model_kind;
  if (results.auroc_mean)
    std::cout << " AUROC mean=" << *results.auroc_mean << " stderr=" << *results.auroc_stderr;
  std::cout << " wall=" << results.wall_time_sec << "s -> " << cfg.output_dir << "\n";
  return 0;
}

int cmd_report(const std::string& dir, std::vector<std::string> files,
               const std::string& outdir, bool no_svg) {
  namespace fs = std::filesystem;
  std::vector<fs::path> paths;
  if (!dir.empty())
    paths = find_results_files(dir);
  for (const std::string& f : files) paths.emplace_back(f);
  if (paths.empty()) throw ConfigError("report: no results.json files found");
  const std::vector<ReportRow> rows = collect_report_rows(paths);
  const std::string out = outdir.empty() ? (dir.empty() ? "." : dir) : outdir;
  write_report(rows, out, !no_svg);
  std::cout << report_markdown(rows);
  std::cout << "report written to " << out << "\n";
  return 0;
}

int cmd_selftest() {
  const std::vector<PropertyResult> results = run_property_suite();
  bool all = true;
  for (const PropertyResult& r : results) {
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
    all = all && r.pass;
  }
  if (!all) {
    std::cout << "selftest FAILED\n";
    return 3;
  }
  std::cout << "selftest OK (" << results.size() << " properties)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Granger causality detection with Kolmogorov-Arnold networks"};
  app.require_subcommand(1);

  CommonOpts sim_opts, run_opts;

  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic panel + ground truth");
  sim->add_option("--preset", sim_opts.preset, "bundled preset name");
  sim->add_option("--config", sim_opts.config_path, "JSON config file");
  sim->add_option("--out", sim_opts.output_dir, "output directory");
  sim->add_flag("--list-presets", sim_opts.list_presets, "list bundled presets and exit");

  std::string model, seeds_csv, sweep_csv, contribution_mode;
  int epochs = -1, max_lag = -1, workers = -1;
  double eta = -1.0, lambda = -1.0;
  bool save_models = false, save_logs = false, no_svg = false, include_diagonal = false;
  bool quiet = false;

  CLI::App* run = app.add_subcommand("run", "train, sweep, and evaluate an experiment");
  run->add_option("--preset", run_opts.preset, "bundled preset name");
  run->add_option("--config", run_opts.config_path, "JSON config file");
  run->add_option("--out", run_opts.output_dir, "output directory");
  run->add_flag("--list-presets", run_opts.list_presets, "list bundled presets and exit");
  run->add_option("--model", model, "gckan | cmlp (preset override)");
  run->add_option("--seeds", seeds_csv, "comma-separated model seeds");
  run->add_option("--sweep", sweep_csv, "comma-separated lambda_prox sweep");
  run->add_option("--epochs", epochs, "training epochs override");
  run->add_option("--eta", eta, "learning rate override");
  run->add_option("--lambda", lambda, "regularization weight override");
  run->add_option("--max-lag", max_lag, "max lag p override");
  run->add_option("--workers", workers, "worker thread count (0 = hardware)");
  run->add_flag("--save-models", save_models, "write every trained model JSON");
  run->add_flag("--save-logs", save_logs, "write per-fit training-log CSVs");
  run->add_flag("--no-svg", no_svg, "skip SVG outputs");
  run->add_flag("--include-diagonal", include_diagonal, "count self-edges in TPR/FPR");
  run->add_option("--contribution-mode", contribution_mode, "activation | weight");
  run->add_flag("--quiet", quiet, "suppress progress output");

  std::string report_dir, report_out;
  std::vector<std::string> report_files;
  bool report_no_svg = false;
  CLI::App* rep = app.add_subcommand("report", "merge results.json files into a table");
  rep->add_option("--dir", report_dir, "directory scanned recursively for results.json");
  rep->add_option("files", report_files, "explicit results.json paths");
  rep->add_option("--out", report_out, "report output directory");
  rep->add_flag("--no-svg", report_no_svg, "skip the SVG chart");

  CLI::App* self = app.add_subcommand("selftest", "run the numeric property suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      if (sim_opts.list_presets) {
        print_presets();
        return 0;
      }
      return cmd_simulate(sim_opts);
    }
    if (run->parsed()) {
      if (run_opts.list_presets) {
        print_presets();
        return 0;
      }
      return cmd_run(run_opts, model, seeds_csv, sweep_csv, epochs, eta, lambda, max_lag,
                     workers, save_models, save_logs, no_svg, include_diagonal,
                     contribution_mode, quiet);
    }
    if (rep->parsed()) return cmd_report(report_dir, report_files, report_out, report_no_svg);
    if (self->parsed()) return cmd_selftest();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
