#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gckan/cmlp.hpp"
#include "gckan/common.hpp"
#include "gckan/kan.hpp"
#include "gckan/simulators.hpp"

namespace gckan {

using Json = nlohmann::json;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("matrix: expected array of rows");
  const int rows = static_cast<int>(j.size());
  if (rows == 0) return Matrix(0, 0);
  const int cols = static_cast<int>(j.at(0).size());
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j.at(i).size()) != cols) throw ConfigError("matrix: ragged rows");
    for (int c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  }
  return m;
}

inline Json int_matrix_to_json(const IntMatrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline IntMatrix int_matrix_from_json(const Json& j) {
  const Matrix m = matrix_from_json(j);
  return m.cast<int>();
}

inline Json grid_to_json(const SplineGrid& g) {
  return Json{{"degree", g.degree()},
              {"num_intervals", g.num_intervals()},
              {"range_lo", g.lo()},
              {"range_hi", g.hi()}};
}

inline SplineGrid grid_from_json(const Json& j) {
  return SplineGrid(j.at("degree").get<int>(), j.at("num_intervals").get<int>(),
                    j.at("range_lo").get<double>(), j.at("range_hi").get<double>());
}

/// Versioned model document. Spline coefficients serialize in logical
/// [output][input][coefficient] order, independent of the internal layout.
inline Json network_to_json(const KanNetwork& net) {
  Json layers = Json::array();
  for (const KanLayer& l : net.layers) {
    Json coeffs = Json::array();
    for (int i = 0; i < l.n_out; ++i) {
      Json per_in = Json::array();
      for (int j = 0; j < l.n_in; ++j) {
        Json c = Json::array();
        for (int cc = 0; cc < l.coeffs.cols(); ++cc) c.push_back(l.coeffs(l.coeff_row(i, j), cc));
        per_in.push_back(std::move(c));
      }
      coeffs.push_back(std::move(per_in));
    }
    layers.push_back(Json{{"n_in", l.n_in},
                          {"n_out", l.n_out},
                          {"grid", grid_to_json(l.grid)},
                          {"w_base", matrix_to_json(l.w_base)},
                          {"w_spline", matrix_to_json(l.w_spline)},
                          {"spline_coeffs", std::move(coeffs)}});
  }
  return Json{{"schema_version", kSchemaVersion},
              {"tool_version", std::string(kToolVersion)},
              {"model_kind", "gckan"},
              {"layers", std::move(layers)}};
}

inline KanNetwork network_from_json(const Json& doc) {
  if (doc.value("schema_version", 0) != kSchemaVersion)
    throw ConfigError("model: unsupported schema_version");
  if (doc.value("model_kind", "") != "gckan") throw ConfigError("model: not a gckan model");
  KanNetwork net;
  for (const Json& lj : doc.at("layers")) {
    KanLayer l;
    l.n_in = lj.at("n_in").get<int>();
    l.n_out = lj.at("n_out").get<int>();
    l.grid = grid_from_json(lj.at("grid"));
    l.w_base = matrix_from_json(lj.at("w_base"));
    l.w_spline = matrix_from_json(lj.at("w_spline"));
    const Json& coeffs = lj.at("spline_coeffs");
    l.coeffs.resize(l.n_in * l.n_out, l.grid.num_basis());
    if (static_cast<int>(coeffs.size()) != l.n_out)
      throw ConfigError("model: spline_coeffs outer size != n_out");
    for (int i = 0; i < l.n_out; ++i)
      for (int j = 0; j < l.n_in; ++j) {
        const Json& c = coeffs.at(i).at(j);
        if (static_cast<int>(c.size()) != l.grid.num_basis())
          throw ConfigError("model: coefficient vector length mismatch");
        for (int cc = 0; cc < l.grid.num_basis(); ++cc)
          l.coeffs(l.coeff_row(i, j), cc) = c.at(cc).get<double>();
      }
    net.layers.push_back(std::move(l));
  }
  net.check();
  return net;
}

inline Json mlp_to_json(const MlpNetwork& net) {
  Json w2 = Json::array();
  for (int i = 0; i < net.w2.size(); ++i) w2.push_back(net.w2[i]);
  Json b1 = Json::array();
  for (int i = 0; i < net.b1.size(); ++i) b1.push_back(net.b1[i]);
  return Json{{"schema_version", kSchemaVersion},
              {"tool_version", std::string(kToolVersion)},
              {"model_kind", "cmlp"},
              {"n", net.n},
              {"p", net.p},
              {"hidden", net.h},
              {"w1", matrix_to_json(net.w1)},
              {"b1", std::move(b1)},
              {"w2", std::move(w2)},
              {"b2", net.b2}};
}

inline MlpNetwork mlp_from_json(const Json& doc) {
  if (doc.value("model_kind", "") != "cmlp") throw ConfigError("model: not a cmlp model");
  MlpNetwork net;
  net.n = doc.at("n").get<int>();
  net.p = doc.at("p").get<int>();
  net.h = doc.at("hidden").get<int>();
  net.w1 = matrix_from_json(doc.at("w1"));
  net.b1 = Vector::Zero(net.h);
  for (int i = 0; i < net.h; ++i) net.b1[i] = doc.at("b1").at(i).get<double>();
  net.w2.resize(net.h);
  for (int i = 0; i < net.h; ++i) net.w2[i] = doc.at("w2").at(i).get<double>();
  net.b2 = doc.at("b2").get<double>();
  return net;
}

/// First line of every CSV we emit: '# gckan <version> <kind> config_hash=<hex>'.
inline std::string csv_banner(const std::string& kind, const std::string& config_hash) {
  return "# gckan " + std::string(kToolVersion) + " " + kind + " config_hash=" + config_hash;
}

/// Canonical panel CSV: banner, header row of series names, one row per step.
inline void write_panel_csv(const std::filesystem::path& path, const TimeSeries& series,
                            const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << csv_banner("panel", config_hash) << "\n";
  for (std::size_t j = 0; j < series.names.size(); ++j)
    out << (j ? "," : "") << series.names[j];
  out << "\n";
  for (int t = 0; t < series.values.rows(); ++t) {
    for (int j = 0; j < series.values.cols(); ++j)
      out << (j ? "," : "") << format_double(series.values(t, j));
    out << "\n";
  }
}

inline TimeSeries read_panel_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  TimeSeries series;
  std::string line;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    if (!have_header) {
      while (std::getline(ss, cell, ',')) series.names.push_back(cell);
      have_header = true;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("panel CSV " + path.string() + ": bad number '" + cell + "'");
      }
    }
    if (row.size() != series.names.size())
      throw ConfigError("panel CSV " + path.string() + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (!have_header || rows.empty()) throw ConfigError("panel CSV " + path.string() + ": empty");
  series.values.resize(static_cast<int>(rows.size()), static_cast<int>(series.names.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t j = 0; j < rows[t].size(); ++j)
      series.values(static_cast<int>(t), static_cast<int>(j)) = rows[t][j];
  return series;
}

inline Json truth_to_json(const GroundTruth& truth, const std::string& config_hash) {
  Json lags = Json::array();
  for (const IntMatrix& m : truth.lag_adjacency) lags.push_back(int_matrix_to_json(m));
  return Json{{"schema_version", kSchemaVersion},
              {"tool_version", std::string(kToolVersion)},
              {"config_hash", config_hash},
              {"kind", "ground_truth"},
              {"n", truth.adjacency.rows()},
              {"adjacency", int_matrix_to_json(truth.adjacency)},
              {"lag_adjacency", std::move(lags)}};
}

inline GroundTruth truth_from_json(const Json& doc) {
  GroundTruth truth;
  truth.adjacency = int_matrix_from_json(doc.at("adjacency"));
  for (const Json& m : doc.at("lag_adjacency")) truth.lag_adjacency.push_back(int_matrix_from_json(m));
  return truth;
}

inline Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("parse error in " + path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

/// Training-log CSV: one LossBreakdown row per epoch.
inline void write_training_log(const std::filesystem::path& path, const TrainReport& report,
                               const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << csv_banner("training_log", config_hash) << "\n";
  out << "epoch,mse,l1,entropy,total\n";
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    const LossBreakdown& l = report.epochs[e];
    out << e << ',' << format_double(l.mse) << ',' << format_double(l.l1) << ','
        << format_double(l.entropy) << ',' << format_double(l.total) << "\n";
  }
}

}  // namespace gckan
