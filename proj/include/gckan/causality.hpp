#pragma once

#include <string>
#include <vector>

#include "gckan/common.hpp"
#include "gckan/kan.hpp"
#include "gckan/prox.hpp"

namespace gckan {

/// How first-layer contributions C_{j,k} are measured.
///   kActivation: per-edge activation L1 norm on the training batch (primary).
///   kWeight: |w_base| + |w_spline| summed into each hidden neuron (for comparison).
enum class ContributionMode { kActivation, kWeight };

inline ContributionMode contribution_mode_from_string(const std::string& s) {
  if (s == "activation") return ContributionMode::kActivation;
  if (s == "weight") return ContributionMode::kWeight;
  throw ConfigError("contribution_mode must be 'activation' or 'weight', got '" + s + "'");
}

/// Per-(series, lag) contribution of the first layer of one trained network.
/// values(j, k) >= 0 is the contribution of series j at lag k+1.
struct ContributionMap {
  Matrix values;  // n x p
  int target_index = -1;
  std::string normalization;
};

/// Estimated causal structure. adjacency(i, j) = 1 iff series j is detected
/// to Granger-cause series i; the diagonal may legitimately be 1.
struct CausalityMatrix {
  IntMatrix adjacency;
  std::vector<IntMatrix> lag_adjacency;  // one n x n matrix per model lag
};

/// C_{j,k} for one trained per-target network. The batch must be the
/// (standardized) training design with the fixed (series, lag) column layout.
/// Edges with w_base and w_spline both exactly 0 contribute exactly 0.
inline ContributionMap contributions(const KanNetwork& net, const Matrix& training_batch, int n,
                                     int p, int target_index,
                                     ContributionMode mode = ContributionMode::kActivation,
                                     const LayerCache* cache0 = nullptr) {
  if (net.input_width() != n * p)
    throw ShapeError("contributions: network input width != n*p column layout");
  ContributionMap map;
  map.target_index = target_index;
  map.values = Matrix::Zero(n, p);
  const KanLayer& first = net.layers.front();
  if (mode == ContributionMode::kActivation) {
    ForwardPass fp;
    forward(net, training_batch, fp, cache0);
    const LayerRegState st = make_reg_state(fp.layers.front());
    for (int k = 0; k < p; ++k)
      for (int j = 0; j < n; ++j) map.values(j, k) = st.a.col(k * n + j).sum();
    map.normalization = "activation-l1/train-batch";
  } else {
    for (int k = 0; k < p; ++k)
      for (int j = 0; j < n; ++j) {
        const int col = k * n + j;
        map.values(j, k) =
            first.w_base.col(col).cwiseAbs().sum() + first.w_spline.col(col).cwiseAbs().sum();
      }
    map.normalization = "weight-magnitude";
  }
  return map;
}

inline void check_maps(const std::vector<ContributionMap>& maps) {
  if (maps.empty()) throw ShapeError("to_causality: no contribution maps");
  const int n = static_cast<int>(maps.size());
  for (int i = 0; i < n; ++i) {
    const ContributionMap& m = maps[static_cast<std::size_t>(i)];
    if (m.values.rows() != n)
      throw ShapeError("to_causality: map for target " + std::to_string(i) +
                       " has inconsistent series count");
    if (m.values.cols() != maps.front().values.cols())
      throw ShapeError("to_causality: inconsistent lag counts across maps");
  }
}

/// Continuous score matrix: entry (i, j) = max_k C^{(i)}_{j,k}.
inline Matrix score_matrix(const std::vector<ContributionMap>& maps) {
  check_maps(maps);
  const int n = static_cast<int>(maps.size());
  Matrix scores = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    scores.row(i) = maps[static_cast<std::size_t>(i)].values.rowwise().maxCoeff().transpose();
  return scores;
}

/// Binary Granger-causality estimate by the exact-zero test: an edge exists
/// iff its contribution is nonzero at any lag. No manual threshold.
inline CausalityMatrix to_causality(const std::vector<ContributionMap>& maps) {
  check_maps(maps);
  const int n = static_cast<int>(maps.size());
  const int p = static_cast<int>(maps.front().values.cols());
  CausalityMatrix cm;
  cm.adjacency = IntMatrix::Zero(n, n);
  cm.lag_adjacency.assign(static_cast<std::size_t>(p), IntMatrix::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < p; ++k)
        if (maps[static_cast<std::size_t>(i)].values(j, k) > 0.0) {
          cm.adjacency(i, j) = 1;
          cm.lag_adjacency[static_cast<std::size_t>(k)](i, j) = 1;
        }
  return cm;
}

}  // namespace gckan
