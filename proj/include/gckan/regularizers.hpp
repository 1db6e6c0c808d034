#pragma once

#include <cmath>

#include "gckan/common.hpp"
#include "gckan/kan.hpp"

namespace gckan {

/// One evaluation of the training objective, split into its terms.
/// total = mse + lambda * (mu1 * l1 + mu2 * entropy), exactly as computed.
struct LossBreakdown {
  double mse = 0.0;
  double l1 = 0.0;
  double entropy = 0.0;
  double lambda = 0.0;
  double mu1 = 1.0;
  double mu2 = 1.0;
  double total = 0.0;
};

/// |phi|_1 of a single edge: mean |activation| over the batch.
inline double phi_l1(const Eigen::Ref<const Vector>& activations) {
  if (activations.size() == 0) throw InputError("phi_l1: empty batch");
  return activations.cwiseAbs().mean();
}

/// |Phi|_1 of a layer: sum of phi_l1 over all edges.
inline double layer_l1(const LayerRecord& rec) { return make_reg_state(rec).l1; }

/// S(Phi) = -sum p_ij log p_ij with p_ij = |phi_ij|_1 / |Phi|_1 (natural log);
/// 0 log 0 := 0 and S := 0 when |Phi|_1 = 0.
inline double layer_entropy(const LayerRecord& rec) { return make_reg_state(rec).entropy; }

inline LossBreakdown total_loss(const ForwardPass& fp, const Vector& targets, double lambda,
                                double mu1, double mu2,
                                const std::vector<LayerRegState>* reg = nullptr) {
  if (fp.predictions.size() != targets.size())
    throw ShapeError("total_loss: prediction/target length mismatch");
  if (targets.size() == 0) throw InputError("total_loss: empty batch");
  LossBreakdown out;
  out.lambda = lambda;
  out.mu1 = mu1;
  out.mu2 = mu2;
  out.mse = (fp.predictions - targets).squaredNorm() / static_cast<double>(targets.size());
  std::vector<LayerRegState> local;
  if (reg == nullptr) {
    local = make_reg_states(fp);
    reg = &local;
  }
  for (const LayerRegState& st : *reg) {
    out.l1 += st.l1;
    out.entropy += st.entropy;
  }
  out.total = out.mse + lambda * (mu1 * out.l1 + mu2 * out.entropy);
  return out;
}

}  // namespace gckan
