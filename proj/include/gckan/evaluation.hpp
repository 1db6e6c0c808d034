#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "gckan/common.hpp"

namespace gckan {

/// Ordered (FPR, TPR) points from (0,0) to (1,1) with trapezoidal AUROC.
struct RocCurve {
  std::vector<std::pair<double, double>> points;
  double auroc = 0.0;
};

/// (TPR, FPR) of a binary estimate against the truth. Self-dependencies are
/// universal in both simulators, so the diagonal is excluded by default.
inline std::pair<double, double> confusion(const IntMatrix& estimated, const IntMatrix& truth,
                                           bool include_diagonal = false) {
  if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols())
    throw ShapeError("confusion: estimate/truth shape mismatch");
  long tp = 0, fp = 0, fn = 0, tn = 0;
  for (int i = 0; i < truth.rows(); ++i)
    for (int j = 0; j < truth.cols(); ++j) {
      if (!include_diagonal && i == j) continue;
      const bool e = estimated(i, j) != 0;
      const bool t = truth(i, j) != 0;
      if (t)
        (e ? tp : fn)++;
      else
        (e ? fp : tn)++;
    }
  if (tp + fn == 0) throw NumericError("confusion: no positive entries, TPR undefined");
  if (fp + tn == 0) throw NumericError("confusion: no negative entries, FPR undefined");
  return {static_cast<double>(tp) / (tp + fn), static_cast<double>(fp) / (fp + tn)};
}

inline double trapezoid(const std::vector<std::pair<double, double>>& pts) {
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    area += (pts[i + 1].first - pts[i].first) * (pts[i].second + pts[i + 1].second) * 0.5;
  return area;
}

/// ROC from a proximal-strength sweep: one binary estimate per sweep point,
/// sorted by FPR (ties by TPR), anchored at (0,0) and (1,1).
inline RocCurve roc_from_sweep(const std::vector<IntMatrix>& estimates, const IntMatrix& truth,
                               bool include_diagonal = false) {
  if (estimates.size() < 2) throw InputError("roc_from_sweep: need at least 2 sweep points");
  RocCurve roc;
  for (const IntMatrix& est : estimates) {
    const auto [tpr, fpr] = confusion(est, truth, include_diagonal);
    roc.points.emplace_back(fpr, tpr);
  }
  std::sort(roc.points.begin(), roc.points.end());
  roc.points.insert(roc.points.begin(), {0.0, 0.0});
  roc.points.emplace_back(1.0, 1.0);
  roc.auroc = trapezoid(roc.points);
  return roc;
}

/// Threshold-free AUROC of a continuous score matrix (rank statistic with
/// midranks for ties); diagnostic companion to the sweep route.
inline double auroc_from_scores(const Matrix& scores, const IntMatrix& truth,
                                bool include_diagonal = false) {
  if (scores.rows() != truth.rows() || scores.cols() != truth.cols())
    throw ShapeError("auroc_from_scores: shape mismatch");
  std::vector<std::pair<double, int>> items;
  for (int i = 0; i < truth.rows(); ++i)
    for (int j = 0; j < truth.cols(); ++j) {
      if (!include_diagonal && i == j) continue;
      items.emplace_back(scores(i, j), truth(i, j) != 0 ? 1 : 0);
    }
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  const long n_pos = static_cast<long>(std::count_if(
      items.begin(), items.end(), [](const auto& it) { return it.second == 1; }));
  const long n_neg = static_cast<long>(items.size()) - n_pos;
  if (n_pos == 0) throw NumericError("auroc_from_scores: no positive entries");
  if (n_neg == 0) throw NumericError("auroc_from_scores: no negative entries");
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    while (j < items.size() && items[j].first == items[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (items[t].second == 1) rank_sum_pos += midrank;
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

/// Mean and standard error of the mean over repeated runs.
inline std::pair<double, double> aggregate(const std::vector<double>& values) {
  if (values.empty()) throw InputError("aggregate: need at least one run");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return {mean, sd / std::sqrt(n)};
}

}  // namespace gckan
