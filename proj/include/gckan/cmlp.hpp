#pragma once

#include <chrono>
#include <cmath>
#include <random>
#include <vector>

#include "gckan/causality.hpp"
#include "gckan/common.hpp"
#include "gckan/prox.hpp"
#include "gckan/regularizers.hpp"

namespace gckan {

/// Baseline component-wise MLP: one ReLU hidden layer, group-structured
/// first layer in the fixed (series, lag) column layout.
struct MlpNetwork {
  int n = 0, p = 0, h = 0;
  Matrix w1;              // h x (n*p)
  Vector b1;              // h
  Eigen::RowVectorXd w2;  // 1 x h
  double b2 = 0.0;

  Vector predict(const Matrix& x) const {
    Matrix z1 = (x * w1.transpose()).rowwise() + b1.transpose();
    const Matrix a1 = z1.cwiseMax(0.0);
    return (a1 * w2.transpose()).array() + b2;
  }
};

/// Hierarchical Group Lasso: Omega_H(W1) = sum_j sum_k ||W1[:, (j, lags k..p)]||_F.
inline double hier_penalty(const Matrix& w1, int n, int p) {
  if (w1.cols() != n * p) throw ShapeError("hier_penalty: w1 columns != n*p layout");
  double total = 0.0;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < p; ++k) {
      double ss = 0.0;
      for (int kk = k; kk < p; ++kk) ss += w1.col(kk * n + j).squaredNorm();
      total += std::sqrt(ss);
    }
  return total;
}

/// Exact prox of threshold * Omega_H: nested group soft-thresholding from the
/// innermost group (lag p alone) out to the full lag range of each series.
/// A group with zero norm stays exactly 0; the result always satisfies the
/// lag hierarchy (zero at lag k forces zero at every lag > k).
inline void hier_prox_inplace(Matrix& w1, double threshold, int n, int p) {
  if (threshold < 0.0) throw InputError("hier_prox: negative threshold");
  if (w1.cols() != n * p) throw ShapeError("hier_prox: w1 columns != n*p layout");
  if (threshold == 0.0) return;
  for (int j = 0; j < n; ++j)
    for (int k = p - 1; k >= 0; --k) {
      double ss = 0.0;
      for (int kk = k; kk < p; ++kk) ss += w1.col(kk * n + j).squaredNorm();
      const double norm = std::sqrt(ss);
      const double factor = norm > threshold ? 1.0 - threshold / norm : 0.0;
      for (int kk = k; kk < p; ++kk) w1.col(kk * n + j) *= factor;
    }
}

inline Matrix hier_prox(Matrix w1, double threshold, int n, int p) {
  hier_prox_inplace(w1, threshold, n, p);
  return w1;
}

/// True iff no series has a zero lag below a nonzero one.
inline bool satisfies_lag_hierarchy(const Matrix& w1, int n, int p) {
  for (int j = 0; j < n; ++j) {
    bool seen_zero = false;
    for (int k = 0; k < p; ++k) {
      const bool zero = (w1.col(k * n + j).array() == 0.0).all();
      if (seen_zero && !zero) return false;
      seen_zero = seen_zero || zero;
    }
  }
  return true;
}

struct CmlpFitResult {
  MlpNetwork net;
  TrainReport report;
  double y_mean = 0.0;
  double y_std = 1.0;
};

/// Proximal gradient training: full-batch gradient step on the MSE alone,
/// then hier_prox on w1 with threshold eta * lambda_prox (the penalty term is
/// handled entirely by the prox, standard forward-backward splitting).
inline CmlpFitResult fit_cmlp(int target_index, const Matrix& xz, const Matrix& y_all, int n,
                              int p, const TrainConfig& cfg, bool standardized = true) {
  cfg.validate();
  if (target_index < 0 || target_index >= n) throw ConfigError("fit_cmlp: target out of range");
  if (xz.cols() != n * p) throw ShapeError("fit_cmlp: design width != n*p");
  const auto t0 = std::chrono::steady_clock::now();
  const int b = static_cast<int>(xz.rows());
  const int h = cfg.hidden.empty() ? 100 : cfg.hidden.front();

  CmlpFitResult out;
  Vector y = y_all.col(target_index);
  if (standardized) {
    out.y_mean = y.mean();
    out.y_std = std::sqrt((y.array() - out.y_mean).square().mean());
    if (out.y_std < 1e-12) out.y_std = 1.0;
    y = (y.array() - out.y_mean) / out.y_std;
  }

  MlpNetwork& net = out.net;
  net.n = n;
  net.p = p;
  net.h = h;
  std::mt19937_64 rng(splitmix64(cfg.seed));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(n * p));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  net.w1 = Matrix::NullaryExpr(h, n * p, [&]() { return s1 * unit(rng); });
  net.b1 = Vector::Zero(h);
  net.w2 = Eigen::RowVectorXd::NullaryExpr(h, [&]() { return s2 * unit(rng); });
  net.b2 = 0.0;

  const double threshold = cfg.eta * cfg.lambda_prox;
  double initial = 0.0;
  out.report.epochs.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Matrix z1 = (xz * net.w1.transpose()).rowwise() + net.b1.transpose();
    Matrix a1 = z1.cwiseMax(0.0);
    Vector pred = (a1 * net.w2.transpose()).array() + net.b2;

    LossBreakdown loss;
    loss.mse = (pred - y).squaredNorm() / b;
    loss.l1 = hier_penalty(net.w1, n, p);
    loss.lambda = cfg.lambda_prox;
    loss.mu1 = 1.0;
    loss.mu2 = 0.0;
    loss.total = loss.mse + cfg.lambda_prox * loss.l1;
    if (!std::isfinite(loss.total))
      throw NumericError("fit_cmlp: diverged at epoch " + std::to_string(epoch));
    if (epoch == 0) initial = loss.total;
    if (loss.total > 1e6 * (initial + 1e-12))
      throw NumericError("fit_cmlp: diverged at epoch " + std::to_string(epoch) +
                         " (loss exceeded 1e6 x initial)");
    out.report.epochs.push_back(loss);

    Vector d = (2.0 / b) * (pred - y);
    Eigen::RowVectorXd gw2 = d.transpose() * a1;
    const double gb2 = d.sum();
    Matrix dz1 = (d * net.w2).cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
    Matrix gw1 = dz1.transpose() * xz;
    Vector gb1 = dz1.colwise().sum().transpose();

    net.w1.noalias() -= cfg.eta * gw1;
    net.b1.noalias() -= cfg.eta * gb1;
    net.w2.noalias() -= cfg.eta * gw2;
    net.b2 -= cfg.eta * gb2;
    hier_prox_inplace(net.w1, threshold, n, p);
  }

  int zeros = 0;
  for (int c = 0; c < net.w1.cols(); ++c)
    for (int r = 0; r < net.w1.rows(); ++r)
      if (net.w1(r, c) == 0.0) ++zeros;
  out.report.first_layer_sparsity =
      static_cast<double>(zeros) / static_cast<double>(net.w1.size());
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

inline CmlpFitResult fit_cmlp(int target_index, const LaggedDesign& design,
                              const TrainConfig& cfg) {
  if (cfg.standardize) {
    const PreparedDesign prep = prepare_design(design, cfg.grid, true);
    return fit_cmlp(target_index, prep.xz, prep.y, design.n, design.p, cfg, true);
  }
  return fit_cmlp(target_index, design.x, design.y, design.n, design.p, cfg, false);
}

/// Contribution of (series, lag) for causality extraction: the Euclidean norm
/// of the corresponding first-layer column.
inline ContributionMap cmlp_contributions(const MlpNetwork& net, int target_index) {
  ContributionMap map;
  map.target_index = target_index;
  map.values = Matrix::Zero(net.n, net.p);
  for (int k = 0; k < net.p; ++k)
    for (int j = 0; j < net.n; ++j) map.values(j, k) = net.w1.col(k * net.n + j).norm();
  map.normalization = "column-l2";
  return map;
}

}  // namespace gckan
