#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gckan/common.hpp"
#include "gckan/kan.hpp"
#include "gckan/regularizers.hpp"

namespace gckan {

/// Soft threshold: sign(w) * max(|w| - threshold, 0). Exact 0 below threshold.
inline double prox(double w, double threshold) {
  if (threshold < 0.0) throw InputError("prox: negative threshold");
  const double m = std::abs(w) - threshold;
  return m > 0.0 ? sign(w) * m : 0.0;
}

struct TrainConfig {
  double eta = 1e-2;         // learning rate of the smooth step
  double lambda = 1e-3;      // regularization weight on (mu1 |Phi|_1 + mu2 S)
  double mu1 = 1.0;
  double mu2 = 1.0;
  double lambda_prox = 0.0;  // first-layer soft-threshold strength
  int epochs = 2000;
  std::uint64_t seed = 0;
  int max_lag = 5;
  bool standardize = true;
  std::vector<int> hidden{1};
  SplineGrid grid{};

  void validate() const {
    if (!(eta > 0.0)) throw ConfigError("TrainConfig: eta must be > 0");
    if (lambda < 0.0) throw ConfigError("TrainConfig: lambda must be >= 0");
    if (lambda_prox < 0.0) throw ConfigError("TrainConfig: lambda_prox must be >= 0");
    if (epochs < 0) throw ConfigError("TrainConfig: epochs must be >= 0");
    if (max_lag < 1) throw ConfigError("TrainConfig: max_lag must be >= 1");
    for (int h : hidden)
      if (h < 1) throw ConfigError("TrainConfig: hidden widths must be positive");
  }
};

struct TrainReport {
  std::vector<LossBreakdown> epochs;
  double first_layer_sparsity = 0.0;  // fraction of exactly-zero first-layer edges
  bool converged = false;
  double wall_time_sec = 0.0;
};

/// Design built from a T x n panel with max lag p. Row t (0-based) predicts
/// panel(p + t, :) from columns laid out as
///   [x_{t-1} (all series), x_{t-2} (all series), ..., x_{t-p} (all series)],
/// i.e. column (k-1)*n + j is series j at lag k. This layout is fixed;
/// contribution extraction depends on it.
struct LaggedDesign {
  Matrix x;  // (T-p) x (n*p)
  Matrix y;  // (T-p) x n
  int n = 0;
  int p = 0;
};

inline LaggedDesign make_lagged_design(const Matrix& panel, int p) {
  const int t_len = static_cast<int>(panel.rows());
  const int n = static_cast<int>(panel.cols());
  if (p < 1) throw ConfigError("make_lagged_design: max lag must be >= 1");
  if (t_len <= p)
    throw InputError("make_lagged_design: need more than max_lag rows, got " +
                     std::to_string(t_len));
  LaggedDesign d;
  d.n = n;
  d.p = p;
  const int rows = t_len - p;
  d.x.resize(rows, n * p);
  d.y.resize(rows, n);
  for (int t = 0; t < rows; ++t) {
    for (int k = 1; k <= p; ++k) d.x.block(t, (k - 1) * n, 1, n) = panel.row(p + t - k);
    d.y.row(t) = panel.row(p + t);
  }
  return d;
}

/// Z-scored inputs plus the shared first-layer cache. Built once per
/// (panel, grid) and reused read-only by every fit over that data.
struct PreparedDesign {
  Matrix xz;
  Vector x_mean, x_std;
  Matrix y;  // raw targets, one column per series
  LayerCache cache0;
  int n = 0, p = 0;
  bool standardized = true;
};

inline PreparedDesign prepare_design(const LaggedDesign& design, const SplineGrid& grid,
                                     bool standardize = true) {
  PreparedDesign prep;
  prep.n = design.n;
  prep.p = design.p;
  prep.y = design.y;
  prep.standardized = standardize;
  const int b = static_cast<int>(design.x.rows());
  prep.x_mean = design.x.colwise().mean();
  prep.x_std = ((design.x.rowwise() - prep.x_mean.transpose()).array().square().colwise().sum() /
                b).sqrt();
  for (int j = 0; j < prep.x_std.size(); ++j)
    if (prep.x_std[j] < 1e-12) prep.x_std[j] = 1.0;  // constant column
  if (standardize) {
    prep.xz = (design.x.rowwise() - prep.x_mean.transpose()).array().rowwise() /
              prep.x_std.transpose().array();
  } else {
    prep.xz = design.x;
  }
  prep.cache0 = make_layer_cache(grid, prep.xz, /*need_input_grad=*/false);
  return prep;
}

/// One optimization step: gradient descent on the full loss across all
/// layers, then soft-thresholding of first-layer w_base and w_spline with
/// threshold eta * lambda_prox (spline coefficients are not thresholded).
/// Returns the pre-update loss.
inline LossBreakdown train_step(KanNetwork& net, const Matrix& batch, const Vector& targets,
                                const TrainConfig& cfg, ForwardPass* workspace = nullptr,
                                const LayerCache* cache0 = nullptr) {
  ForwardPass local;
  ForwardPass& fp = workspace ? *workspace : local;
  forward(net, batch, fp, cache0);
  const std::vector<LayerRegState> reg = make_reg_states(fp);
  const LossBreakdown loss = total_loss(fp, targets, cfg.lambda, cfg.mu1, cfg.mu2, &reg);
  if (!std::isfinite(loss.total)) throw NumericError("train_step: non-finite total loss");
  const Gradients g = backward(net, fp, targets, cfg.lambda, cfg.mu1, cfg.mu2, cache0, &reg);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    net.layers[l].w_base.noalias() -= cfg.eta * g.layers[l].w_base;
    net.layers[l].w_spline.noalias() -= cfg.eta * g.layers[l].w_spline;
    net.layers[l].coeffs.noalias() -= cfg.eta * g.layers[l].coeffs;
  }
  const double threshold = cfg.eta * cfg.lambda_prox;
  if (threshold > 0.0) {
    KanLayer& first = net.layers.front();
    auto soft = [threshold](double w) {
      const double m = std::abs(w) - threshold;
      return m > 0.0 ? sign(w) * m : 0.0;
    };
    first.w_base = first.w_base.unaryExpr(soft);
    first.w_spline = first.w_spline.unaryExpr(soft);
  }
  return loss;
}

/// Fraction of first-layer edges with w_base and w_spline both exactly 0.
inline double first_layer_sparsity(const KanNetwork& net) {
  const KanLayer& first = net.layers.front();
  int zeros = 0;
  for (int j = 0; j < first.n_in; ++j)
    for (int i = 0; i < first.n_out; ++i)
      if (first.w_base(i, j) == 0.0 && first.w_spline(i, j) == 0.0) ++zeros;
  return static_cast<double>(zeros) / (first.n_in * first.n_out);
}

struct FitResult {
  KanNetwork net;
  TrainReport report;
  double y_mean = 0.0;
  double y_std = 1.0;
};

/// Full-batch training of one per-target network on a prepared design.
inline FitResult fit(int target_index, const PreparedDesign& prep, const TrainConfig& cfg) {
  cfg.validate();
  if (target_index < 0 || target_index >= prep.n)
    throw ConfigError("fit: target index out of range");
  const auto t0 = std::chrono::steady_clock::now();

  FitResult out;
  Vector y = prep.y.col(target_index);
  if (prep.standardized) {
    out.y_mean = y.mean();
    const double var = (y.array() - out.y_mean).square().mean();
    out.y_std = std::sqrt(var);
    if (out.y_std < 1e-12) out.y_std = 1.0;
    y = (y.array() - out.y_mean) / out.y_std;
  }

  std::vector<int> widths;
  widths.push_back(prep.n * prep.p);
  for (int h : cfg.hidden) widths.push_back(h);
  widths.push_back(1);
  out.net = KanNetwork::make(widths, cfg.grid, cfg.seed);

  ForwardPass workspace;
  double initial = 0.0;
  out.report.epochs.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    LossBreakdown loss;
    try {
      loss = train_step(out.net, prep.xz, y, cfg, &workspace, &prep.cache0);
    } catch (const NumericError& e) {
      throw NumericError("fit: diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (epoch == 0) initial = loss.total;
    if (loss.total > 1e6 * (initial + 1e-12))
      throw NumericError("fit: diverged at epoch " + std::to_string(epoch) +
                         " (loss exceeded 1e6 x initial)");
    out.report.epochs.push_back(loss);
  }

  out.report.first_layer_sparsity = first_layer_sparsity(out.net);
  const std::size_t m = out.report.epochs.size();
  if (m >= 11) {
    const double last = out.report.epochs[m - 1].total;
    const double prev = out.report.epochs[m - 11].total;
    out.report.converged = std::abs(prev - last) <= 1e-4 * (std::abs(prev) + 1e-12);
  }
  out.report.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// Convenience overload building the prepared design on the fly.
inline FitResult fit(int target_index, const LaggedDesign& design, const TrainConfig& cfg) {
  const PreparedDesign prep = prepare_design(design, cfg.grid, cfg.standardize);
  return fit(target_index, prep, cfg);
}

}  // namespace gckan
