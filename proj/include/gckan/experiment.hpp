#pragma once

#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "gckan/causality.hpp"
#include "gckan/cmlp.hpp"
#include "gckan/evaluation.hpp"
#include "gckan/prox.hpp"
#include "gckan/serialize.hpp"
#include "gckan/simulators.hpp"
#include "gckan/svg.hpp"

namespace gckan {

namespace fs = std::filesystem;

struct GeneratorSpec {
  std::string kind = "var";  // "var" | "lorenz96" | "csv"
  VarSpec var;
  LorenzSpec lorenz;
  std::string panel_path;
  std::string truth_path;  // optional; without it only contributions are emitted

  int series_count() const {
    if (kind == "var") return var.n;
    if (kind == "lorenz96") return lorenz.n;
    return 0;  // csv: known after loading
  }
};

/// One experiment: a generator (or external panel), a model kind, training
/// settings, the proximal-strength sweep, and the seeds of the repeated
/// initializations.
struct RunConfig {
  std::string experiment = "experiment";
  GeneratorSpec generator;
  std::string model_kind = "gckan";  // "gckan" | "cmlp"
  TrainConfig train;
  std::vector<double> sweep;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  bool include_diagonal = false;
  std::string contribution_mode = "activation";
  int heatmap_sweep_index = -1;  // -1: middle sweep point
  bool save_models = false;
  bool save_training_logs = false;
  bool write_svg = true;
  // execution details; not part of the semantic config hash
  std::string output_dir = "runs/out";
  int workers = 0;  // 0: hardware concurrency

  void validate() const {
    if (seeds.empty()) throw ConfigError("config: seeds must be non-empty");
    if (sweep.empty()) throw ConfigError("config: sweep must be non-empty");
    for (double lp : sweep)
      if (lp < 0.0) throw ConfigError("config: sweep values must be >= 0");
    if (model_kind != "gckan" && model_kind != "cmlp")
      throw ConfigError("config: model_kind must be 'gckan' or 'cmlp'");
    if (generator.kind != "var" && generator.kind != "lorenz96" && generator.kind != "csv")
      throw ConfigError("config: generator kind must be var|lorenz96|csv");
    if (generator.kind == "var") generator.var.validate();
    if (generator.kind == "lorenz96") generator.lorenz.validate();
    if (generator.kind == "csv" && generator.panel_path.empty())
      throw ConfigError("config: csv generator needs a panel path");
    contribution_mode_from_string(contribution_mode);
    train.validate();
    if (heatmap_sweep_index >= static_cast<int>(sweep.size()))
      throw ConfigError("config: heatmap_sweep_index out of range");
  }
};

inline Json generator_to_json(const GeneratorSpec& g) {
  Json j{{"kind", g.kind}};
  if (g.kind == "var") {
    j["n"] = g.var.n;
    j["order"] = g.var.order;
    j["parents_per_series"] = g.var.parents_per_series;
    j["coeff_magnitude"] = g.var.coeff_magnitude;
    j["noise_std"] = g.var.noise_std;
    j["T"] = g.var.T;
    j["seed"] = g.var.seed;
    j["burn_in"] = g.var.burn_in;
  } else if (g.kind == "lorenz96") {
    j["n"] = g.lorenz.n;
    j["forcing"] = g.lorenz.forcing;
    j["dt_integrate"] = g.lorenz.dt_integrate;
    j["sample_rate"] = g.lorenz.sample_rate;
    j["T"] = g.lorenz.T;
    j["burn_in"] = g.lorenz.burn_in;
    j["noise_std"] = g.lorenz.noise_std;
    j["seed"] = g.lorenz.seed;
  } else {
    j["panel"] = g.panel_path;
    if (!g.truth_path.empty()) j["truth"] = g.truth_path;
  }
  return j;
}

inline GeneratorSpec generator_from_json(const Json& j) {
  GeneratorSpec g;
  g.kind = j.value("kind", "var");
  if (g.kind == "var") {
    g.var.n = j.value("n", g.var.n);
    g.var.order = j.value("order", g.var.order);
    g.var.parents_per_series = j.value("parents_per_series", g.var.parents_per_series);
    g.var.coeff_magnitude = j.value("coeff_magnitude", g.var.coeff_magnitude);
    g.var.noise_std = j.value("noise_std", g.var.noise_std);
    g.var.T = j.value("T", g.var.T);
    g.var.seed = j.value("seed", g.var.seed);
    g.var.burn_in = j.value("burn_in", g.var.burn_in);
  } else if (g.kind == "lorenz96") {
    g.lorenz.n = j.value("n", g.lorenz.n);
    g.lorenz.forcing = j.value("forcing", g.lorenz.forcing);
    g.lorenz.dt_integrate = j.value("dt_integrate", g.lorenz.dt_integrate);
    g.lorenz.sample_rate = j.value("sample_rate", g.lorenz.sample_rate);
    g.lorenz.T = j.value("T", g.lorenz.T);
    g.lorenz.burn_in = j.value("burn_in", g.lorenz.burn_in);
    g.lorenz.noise_std = j.value("noise_std", g.lorenz.noise_std);
    g.lorenz.seed = j.value("seed", g.lorenz.seed);
  } else if (g.kind == "csv") {
    g.panel_path = j.value("panel", "");
    g.truth_path = j.value("truth", "");
  }
  return g;
}

inline Json train_to_json(const TrainConfig& t) {
  return Json{{"eta", t.eta},
              {"lambda", t.lambda},
              {"mu1", t.mu1},
              {"mu2", t.mu2},
              {"epochs", t.epochs},
              {"max_lag", t.max_lag},
              {"standardize", t.standardize},
              {"hidden", t.hidden},
              {"grid", grid_to_json(t.grid)}};
}

inline TrainConfig train_from_json(const Json& j) {
  TrainConfig t;
  t.eta = j.value("eta", t.eta);
  t.lambda = j.value("lambda", t.lambda);
  t.mu1 = j.value("mu1", t.mu1);
  t.mu2 = j.value("mu2", t.mu2);
  t.epochs = j.value("epochs", t.epochs);
  t.max_lag = j.value("max_lag", t.max_lag);
  t.standardize = j.value("standardize", t.standardize);
  t.hidden = j.value("hidden", t.hidden);
  if (j.contains("grid")) t.grid = grid_from_json(j.at("grid"));
  return t;
}

/// Semantic config only: everything that affects the numbers in the results.
inline Json config_to_json(const RunConfig& c) {
  return Json{{"experiment", c.experiment},
              {"generator", generator_to_json(c.generator)},
              {"model", Json{{"kind", c.model_kind}}},
              {"train", train_to_json(c.train)},
              {"sweep", c.sweep},
              {"seeds", c.seeds},
              {"include_diagonal", c.include_diagonal},
              {"contribution_mode", c.contribution_mode},
              {"heatmap_sweep_index", c.heatmap_sweep_index}};
}

inline RunConfig config_from_json(const Json& j) {
  RunConfig c;
  c.experiment = j.value("experiment", c.experiment);
  if (j.contains("generator")) c.generator = generator_from_json(j.at("generator"));
  if (j.contains("model")) c.model_kind = j.at("model").value("kind", c.model_kind);
  if (j.contains("train")) c.train = train_from_json(j.at("train"));
  c.sweep = j.value("sweep", c.sweep);
  c.seeds = j.value("seeds", c.seeds);
  c.include_diagonal = j.value("include_diagonal", c.include_diagonal);
  c.contribution_mode = j.value("contribution_mode", c.contribution_mode);
  c.heatmap_sweep_index = j.value("heatmap_sweep_index", c.heatmap_sweep_index);
  c.save_models = j.value("save_models", c.save_models);
  c.save_training_logs = j.value("save_training_logs", c.save_training_logs);
  c.write_svg = j.value("write_svg", c.write_svg);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.workers = j.value("workers", c.workers);
  return c;
}

inline std::string config_hash(const RunConfig& c) {
  return hex64(fnv1a64(config_to_json(c).dump()));
}

/// Bundled presets: one per Table I/II cell. The training settings were
/// calibrated on this artifact's generators; see README for the rationale.
inline std::vector<std::string> preset_names() {
  return {"var1-t250",       "var1-t500",       "var1-t1000",     "var2-t250",
          "var2-t500",       "var2-t1000",      "lorenz-f10-t250", "lorenz-f10-t500",
          "lorenz-f10-t1000", "lorenz-f40-t250", "lorenz-f40-t500", "lorenz-f40-t1000"};
}

inline RunConfig make_preset(const std::string& name) {
  RunConfig c;
  c.experiment = name;
  c.sweep = {0.02, 0.04, 0.07, 0.10, 0.14, 0.19, 0.26, 0.35, 0.47, 0.63, 0.85, 1.2};
  c.train.eta = 0.02;
  c.train.epochs = 450;
  c.train.lambda = 0.01;
  c.train.max_lag = 5;
  c.generator.var.seed = 11;
  c.generator.lorenz.seed = 11;

  auto tail_number = [&](const std::string& s) {
    const auto pos = s.rfind("-t");
    if (pos == std::string::npos) throw ConfigError("unknown preset: " + s);
    return std::stoi(s.substr(pos + 2));
  };
  if (name.rfind("var1-", 0) == 0 || name.rfind("var2-", 0) == 0) {
    c.generator.kind = "var";
    c.generator.var.order = (name[3] == '2') ? 2 : 1;
    c.generator.var.T = tail_number(name);
    c.train.hidden = {1};
  } else if (name.rfind("lorenz-f", 0) == 0) {
    c.generator.kind = "lorenz96";
    c.generator.lorenz.forcing = std::stod(name.substr(8));
    c.generator.lorenz.T = tail_number(name);
    c.train.hidden = {10};
  } else {
    throw ConfigError("unknown preset: " + name + " (see --list-presets)");
  }
  return c;
}

/// cMLP runs reuse the same generator cells but need their own training
/// settings (ReLU net, h = 100, its own sweep scale).
inline void apply_model_kind(RunConfig& c, const std::string& kind) {
  c.model_kind = kind;
  if (kind == "cmlp") {
    c.train.hidden = {100};
    c.train.eta = 0.05;
    c.train.epochs = 800;
    c.train.lambda = 0.0;
    c.sweep = {0.002, 0.004, 0.007, 0.012, 0.02, 0.035, 0.06, 0.1, 0.17, 0.3, 0.5, 0.9};
  }
}

struct SweepPointResult {
  double lambda_prox = 0.0;
  IntMatrix adjacency;
  Matrix scores;
  std::optional<double> tpr, fpr;
  std::optional<double> score_auroc;
};

struct SeedRunResult {
  std::uint64_t seed = 0;
  std::vector<SweepPointResult> points;
  std::optional<RocCurve> roc;
};

struct RunResults {
  RunConfig config;
  std::string hash;
  TimeSeries series;
  std::optional<GroundTruth> truth;
  std::vector<SeedRunResult> seeds;
  std::optional<double> auroc_mean, auroc_stderr;
  std::vector<ContributionMap> heatmaps;  // seed 0 at the heatmap sweep point
  int heatmap_index = 0;
  double wall_time_sec = 0.0;
  bool generated = false;  // series came from a simulator (not external csv)
};

inline void parallel_for(int count, int workers, const std::function<void(int)>& body) {
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Trains seeds x sweep x targets, extracts causality, and evaluates the ROC
/// per seed. Deterministic for a fixed semantic config regardless of workers.
inline RunResults run_experiment(const RunConfig& config, std::ostream* progress = nullptr) {
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();
  RunResults res;
  res.config = config;
  res.hash = config_hash(config);

  if (config.generator.kind == "var") {
    VarSim sim = simulate_var(config.generator.var);
    res.series = std::move(sim.series);
    res.truth = std::move(sim.truth);
    res.generated = true;
  } else if (config.generator.kind == "lorenz96") {
    LorenzSim sim = simulate_lorenz96(config.generator.lorenz);
    res.series = std::move(sim.series);
    res.truth = std::move(sim.truth);
    res.generated = true;
  } else {
    res.series = read_panel_csv(config.generator.panel_path);
    if (!config.generator.truth_path.empty())
      res.truth = truth_from_json(load_json_file(config.generator.truth_path));
  }

  const int n = static_cast<int>(res.series.values.cols());
  const int p = config.train.max_lag;
  if (res.truth && res.truth->adjacency.rows() != n)
    throw ConfigError("truth matrix size does not match the panel");

  const LaggedDesign design = make_lagged_design(res.series.values, p);
  const PreparedDesign prep =
      prepare_design(design, config.train.grid, config.train.standardize);
  const ContributionMode mode = contribution_mode_from_string(config.contribution_mode);

  const int n_seeds = static_cast<int>(config.seeds.size());
  const int n_sweep = static_cast<int>(config.sweep.size());
  const int items = n_seeds * n_sweep * n;
  std::vector<ContributionMap> maps(static_cast<std::size_t>(items));
  std::vector<fs::path> model_paths;
  const fs::path outdir(config.output_dir);
  if (config.save_models) fs::create_directories(outdir / "models");
  if (config.save_training_logs) fs::create_directories(outdir / "logs");

  std::mutex io_mutex;
  std::atomic<int> done{0};
  parallel_for(items, config.workers, [&](int item) {
    const int target = item % n;
    const int sweep_idx = (item / n) % n_sweep;
    const int seed_idx = item / (n * n_sweep);
    TrainConfig tc = config.train;
    tc.lambda_prox = config.sweep[static_cast<std::size_t>(sweep_idx)];
    tc.seed = mix_seed(config.seeds[static_cast<std::size_t>(seed_idx)],
                       static_cast<std::uint64_t>(target));
    ContributionMap map;
    if (config.model_kind == "gckan") {
      FitResult fit_res = fit(target, prep, tc);
      map = contributions(fit_res.net, prep.xz, n, p, target, mode, &prep.cache0);
      if (config.save_models || config.save_training_logs) {
        std::lock_guard<std::mutex> lock(io_mutex);
        const std::string stem = "seed" + std::to_string(seed_idx) + "_lp" +
                                 std::to_string(sweep_idx) + "_t" + std::to_string(target);
        if (config.save_models)
          write_json_file(outdir / "models" / (stem + ".json"), network_to_json(fit_res.net));
        if (config.save_training_logs)
          write_training_log(outdir / "logs" / (stem + ".csv"), fit_res.report, res.hash);
      }
    } else {
      CmlpFitResult fit_res =
          fit_cmlp(target, prep.xz, prep.y, n, p, tc, config.train.standardize);
      map = cmlp_contributions(fit_res.net, target);
      if (config.save_models || config.save_training_logs) {
        std::lock_guard<std::mutex> lock(io_mutex);
        const std::string stem = "seed" + std::to_string(seed_idx) + "_lp" +
                                 std::to_string(sweep_idx) + "_t" + std::to_string(target);
        if (config.save_models)
          write_json_file(outdir / "models" / (stem + ".json"), mlp_to_json(fit_res.net));
        if (config.save_training_logs)
          write_training_log(outdir / "logs" / (stem + ".csv"), fit_res.report, res.hash);
      }
    }
    maps[static_cast<std::size_t>(item)] = std::move(map);
    const int k = ++done;
    if (progress != nullptr && (k % 50 == 0 || k == items)) {
      std::lock_guard<std::mutex> lock(io_mutex);
      (*progress) << "\r  fits " << k << "/" << items << std::flush;
    }
  });
  if (progress != nullptr && items > 0) (*progress) << "\n";

  std::vector<double> aurocs;
  for (int s = 0; s < n_seeds; ++s) {
    SeedRunResult seed_res;
    seed_res.seed = config.seeds[static_cast<std::size_t>(s)];
    std::vector<IntMatrix> adjacency_sweep;
    for (int q = 0; q < n_sweep; ++q) {
      std::vector<ContributionMap> per_target(
          maps.begin() + (static_cast<std::ptrdiff_t>(s) * n_sweep + q) * n,
          maps.begin() + (static_cast<std::ptrdiff_t>(s) * n_sweep + q + 1) * n);
      SweepPointResult point;
      point.lambda_prox = config.sweep[static_cast<std::size_t>(q)];
      point.scores = score_matrix(per_target);
      const CausalityMatrix cm = to_causality(per_target);
      point.adjacency = cm.adjacency;
      if (res.truth) {
        const auto [tpr, fpr] =
            confusion(point.adjacency, res.truth->adjacency, config.include_diagonal);
        point.tpr = tpr;
        point.fpr = fpr;
        point.score_auroc =
            auroc_from_scores(point.scores, res.truth->adjacency, config.include_diagonal);
        adjacency_sweep.push_back(point.adjacency);
      }
      seed_res.points.push_back(std::move(point));
    }
    if (res.truth && adjacency_sweep.size() >= 2) {
      seed_res.roc = roc_from_sweep(adjacency_sweep, res.truth->adjacency,
                                    config.include_diagonal);
      aurocs.push_back(seed_res.roc->auroc);
    }
    res.seeds.push_back(std::move(seed_res));
  }
  if (!aurocs.empty()) {
    const auto [mean, se] = aggregate(aurocs);
    res.auroc_mean = mean;
    res.auroc_stderr = se;
  }

  res.heatmap_index = config.heatmap_sweep_index >= 0 ? config.heatmap_sweep_index : n_sweep / 2;
  res.heatmaps.assign(maps.begin() + static_cast<std::ptrdiff_t>(res.heatmap_index) * n,
                      maps.begin() + static_cast<std::ptrdiff_t>(res.heatmap_index + 1) * n);

  res.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return res;
}

inline Json results_to_json(const RunResults& res) {
  Json seeds = Json::array();
  for (const SeedRunResult& sr : res.seeds) {
    Json points = Json::array();
    for (const SweepPointResult& pt : sr.points) {
      Json pj{{"lambda_prox", pt.lambda_prox},
              {"adjacency", int_matrix_to_json(pt.adjacency)}};
      if (pt.tpr) pj["tpr"] = *pt.tpr;
      if (pt.fpr) pj["fpr"] = *pt.fpr;
      if (pt.score_auroc) pj["score_auroc"] = *pt.score_auroc;
      points.push_back(std::move(pj));
    }
    Json sj{{"seed", sr.seed}, {"points", std::move(points)}};
    if (sr.roc) {
      Json curve = Json::array();
      for (const auto& [fpr, tpr] : sr.roc->points) curve.push_back(Json::array({fpr, tpr}));
      sj["roc"] = Json{{"points", std::move(curve)}, {"auroc", sr.roc->auroc}};
    }
    seeds.push_back(std::move(sj));
  }
  Json doc{{"schema_version", kSchemaVersion},
           {"tool_version", std::string(kToolVersion)},
           {"config_hash", res.hash},
           {"experiment", res.config.experiment},
           {"model_kind", res.config.model_kind},
           {"config", config_to_json(res.config)},
           {"seeds", std::move(seeds)},
           {"heatmap_sweep_index", res.heatmap_index}};
  if (res.truth) doc["truth_adjacency"] = int_matrix_to_json(res.truth->adjacency);
  if (res.auroc_mean) {
    doc["auroc_mean"] = *res.auroc_mean;
    doc["auroc_stderr"] = *res.auroc_stderr;
  }
  doc["execution"] = Json{{"output_dir", res.config.output_dir},
                          {"workers", res.config.workers},
                          {"wall_time_sec", res.wall_time_sec}};
  return doc;
}

inline std::string generator_label(const RunConfig& c) {
  if (c.generator.kind == "var") return "var" + std::to_string(c.generator.var.order);
  if (c.generator.kind == "lorenz96") {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "lorenz-f%g", c.generator.lorenz.forcing);
    return buf;
  }
  return "csv";
}

inline int generator_length(const RunConfig& c) {
  if (c.generator.kind == "var") return c.generator.var.T;
  if (c.generator.kind == "lorenz96") return c.generator.lorenz.T;
  return 0;
}

/// Writes every artifact of a run into its output directory.
inline void write_run_outputs(const RunResults& res) {
  const fs::path outdir(res.config.output_dir);
  fs::create_directories(outdir);

  Json resolved = config_to_json(res.config);
  resolved["config_hash"] = res.hash;
  resolved["tool_version"] = std::string(kToolVersion);
  resolved["schema_version"] = kSchemaVersion;
  resolved["execution"] =
      Json{{"output_dir", res.config.output_dir}, {"workers", res.config.workers}};
  write_json_file(outdir / "config.resolved.json", resolved);

  if (res.generated) {
    write_panel_csv(outdir / "data.csv", res.series, res.hash);
    if (res.truth) {
      Json truth_doc = truth_to_json(*res.truth, res.hash);
      write_json_file(outdir / "truth.json", truth_doc);
    }
  }

  write_json_file(outdir / "results.json", results_to_json(res));

  {
    std::ofstream out(outdir / "summary.csv");
    out << csv_banner("summary", res.hash) << "\n";
    out << "model,generator,T,auroc_mean,auroc_stderr,seeds\n";
    out << res.config.model_kind << ',' << generator_label(res.config) << ','
        << generator_length(res.config) << ','
        << (res.auroc_mean ? format_double(*res.auroc_mean) : "") << ','
        << (res.auroc_stderr ? format_double(*res.auroc_stderr) : "") << ','
        << res.config.seeds.size() << "\n";
  }

  for (const ContributionMap& map : res.heatmaps) {
    const std::string stem = "contributions_target" + std::to_string(map.target_index);
    std::ofstream out(outdir / (stem + ".csv"));
    out << csv_banner("contribution_map target=" + std::to_string(map.target_index) +
                          " sweep_index=" + std::to_string(res.heatmap_index),
                      res.hash)
        << "\n";
    out << "lag";
    for (int j = 0; j < map.values.rows(); ++j) out << ",x" << j;
    out << "\n";
    for (int k = 0; k < map.values.cols(); ++k) {
      out << (k + 1);
      for (int j = 0; j < map.values.rows(); ++j) out << ',' << format_double(map.values(j, k));
      out << "\n";
    }
    if (res.config.write_svg)
      write_heatmap_svg(outdir / (stem + ".svg"), map.values.transpose(),
                        res.config.experiment + " target " + std::to_string(map.target_index));
  }

  if (res.config.write_svg && !res.seeds.empty() && res.seeds.front().roc) {
    std::vector<std::vector<std::pair<double, double>>> curves;
    std::vector<std::string> labels;
    for (const SeedRunResult& sr : res.seeds)
      if (sr.roc) {
        curves.push_back(sr.roc->points);
        char buf[48];
        std::snprintf(buf, sizeof(buf), "seed %llu (%.3f)",
                      static_cast<unsigned long long>(sr.seed), sr.roc->auroc);
        labels.push_back(buf);
      }
    write_roc_svg(outdir / "roc.svg", curves, labels, res.config.experiment + " ROC");
  }
}

struct ReportRow {
  std::string experiment, model, generator;
  int T = 0;
  double auroc_mean = 0.0, auroc_stderr = 0.0;
  std::string hash;
};

/// Merges results.json files into a Table-I/II style comparison.
inline std::vector<ReportRow> collect_report_rows(const std::vector<fs::path>& files) {
  std::vector<ReportRow> rows;
  for (const fs::path& file : files) {
    const Json doc = load_json_file(file);
    try {
      ReportRow row;
      row.experiment = doc.at("experiment").get<std::string>();
      row.model = doc.at("model_kind").get<std::string>();
      const RunConfig cfg = config_from_json(doc.at("config"));
      row.generator = generator_label(cfg);
      row.T = generator_length(cfg);
      row.auroc_mean = doc.value("auroc_mean", 0.0);
      row.auroc_stderr = doc.value("auroc_stderr", 0.0);
      row.hash = doc.value("config_hash", "");
      rows.push_back(std::move(row));
    } catch (const Json::exception& e) {
      throw ConfigError("malformed results file " + file.string() + ": " + e.what());
    }
  }
  std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.generator, a.T, a.model) < std::tie(b.generator, b.T, b.model);
  });
  return rows;
}

inline std::vector<fs::path> find_results_files(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::exists(dir)) throw ConfigError("no such directory: " + dir.string());
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() == "results.json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

inline std::string report_markdown(const std::vector<ReportRow>& rows) {
  std::string md = "| experiment | model | generator | T | AUROC (mean +- stderr) |\n";
  md += "|---|---|---|---|---|\n";
  for (const ReportRow& r : rows) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f +- %.3f", r.auroc_mean, r.auroc_stderr);
    md += "| " + r.experiment + " | " + r.model + " | " + r.generator + " | " +
          std::to_string(r.T) + " | " + buf + " |\n";
  }
  return md;
}

inline void write_report(const std::vector<ReportRow>& rows, const fs::path& outdir,
                         bool with_svg = true) {
  fs::create_directories(outdir);
  {
    std::ofstream out(outdir / "report.md");
    out << report_markdown(rows);
  }
  {
    std::ofstream out(outdir / "report.csv");
    out << csv_banner("report", "merged") << "\n";
    out << "experiment,model,generator,T,auroc_mean,auroc_stderr,config_hash\n";
    for (const ReportRow& r : rows)
      out << r.experiment << ',' << r.model << ',' << r.generator << ',' << r.T << ','
          << format_double(r.auroc_mean) << ',' << format_double(r.auroc_stderr) << ',' << r.hash
          << "\n";
  }
  if (with_svg) {
    std::vector<std::string> labels;
    std::vector<double> values, errors;
    for (const ReportRow& r : rows) {
      labels.push_back(r.experiment + " / " + r.model);
      values.push_back(r.auroc_mean);
      errors.push_back(r.auroc_stderr);
    }
    write_bars_svg(outdir / "report.svg", labels, values, errors, "AUROC by experiment");
  }
}

}  // namespace gckan
