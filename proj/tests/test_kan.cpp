#include "gckan/kan.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "gckan/regularizers.hpp"
#include "gckan/serialize.hpp"
#include "oracles.hpp"

using namespace gckan;

namespace {

Matrix random_batch(int rows, int cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  return Matrix::NullaryExpr(rows, cols, [&]() { return gauss(rng); });
}

void zero_params(KanNetwork& net) {
  for (KanLayer& l : net.layers) {
    l.w_base.setZero();
    l.w_spline.setZero();
    l.coeffs.setZero();
  }
}

// Collects the sign pattern of every edge activation; used to detect when a
// finite-difference interval crosses an |.| kink.
std::vector<int> sign_pattern(const ForwardPass& fp) {
  std::vector<int> signs;
  for (const LayerRecord& rec : fp.layers)
    for (const Matrix& phi : rec.phi)
      for (int i = 0; i < phi.cols(); ++i)
        for (int s = 0; s < phi.rows(); ++s)
          signs.push_back(phi(s, i) > 0.0 ? 1 : (phi(s, i) < 0.0 ? -1 : 0));
  return signs;
}

double loss_value(const KanNetwork& net, const Matrix& x, const Vector& y, double lambda,
                  double mu1, double mu2, std::vector<int>* signs = nullptr) {
  const ForwardPass fp = forward(net, x);
  if (signs != nullptr) *signs = sign_pattern(fp);
  return total_loss(fp, y, lambda, mu1, mu2).total;
}

struct FdStats {
  int checked = 0;
  int skipped = 0;
};

// Central finite differences over every parameter of every layer. Entries
// whose +-h interval flips any activation sign are skipped (|.| kink).
FdStats check_gradients(KanNetwork net, const Matrix& x, const Vector& y, double lambda,
                        double mu1, double mu2, double rel_tol) {
  const double h = 1e-5;
  const ForwardPass fp = forward(net, x);
  const Gradients g = backward(net, fp, y, lambda, mu1, mu2);
  FdStats stats;
  auto check_entry = [&](double* param, double analytic) {
    const double saved = *param;
    std::vector<int> s_plus, s_minus;
    *param = saved + h;
    const double f_plus = loss_value(net, x, y, lambda, mu1, mu2, &s_plus);
    *param = saved - h;
    const double f_minus = loss_value(net, x, y, lambda, mu1, mu2, &s_minus);
    *param = saved;
    if (s_plus != s_minus) {
      ++stats.skipped;
      return;
    }
    ++stats.checked;
    const double fd = (f_plus - f_minus) / (2.0 * h);
    const double scale = std::max(std::abs(fd), std::abs(analytic));
    if (scale < 1e-4) {
      // below the FD noise floor a relative test is meaningless; 1e-9
      // absolute is at least as strict as rel 1e-5 at the crossover
      EXPECT_LT(std::abs(fd - analytic), 1e-9);
    } else {
      EXPECT_LT(std::abs(fd - analytic) / scale, rel_tol)
          << "analytic=" << analytic << " fd=" << fd;
    }
  };
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    KanLayer& layer = net.layers[l];
    for (int j = 0; j < layer.n_in; ++j)
      for (int i = 0; i < layer.n_out; ++i) {
        check_entry(&layer.w_base(i, j), g.layers[l].w_base(i, j));
        check_entry(&layer.w_spline(i, j), g.layers[l].w_spline(i, j));
        for (int c = 0; c < layer.coeffs.cols(); ++c)
          check_entry(&layer.coeffs(layer.coeff_row(i, j), c),
                      g.layers[l].coeffs(layer.coeff_row(i, j), c));
      }
  }
  return stats;
}

}  // namespace

TEST(KanForward, ZeroParametersPredictZero) {
  KanNetwork net = KanNetwork::make({3, 2, 1}, SplineGrid(), 1);
  zero_params(net);
  const ForwardPass fp = forward(net, random_batch(8, 3, 2));
  for (int s = 0; s < fp.predictions.size(); ++s) EXPECT_EQ(fp.predictions[s], 0.0);
}

TEST(KanForward, BasePathIsSilu) {
  KanNetwork net = KanNetwork::make({1, 1}, SplineGrid(), 1);
  zero_params(net);
  net.layers[0].w_base(0, 0) = 1.0;
  const double xs[] = {-2.0, -0.3, 0.0, 0.7, 2.5};
  for (double x : xs) {
    Matrix batch(1, 1);
    batch(0, 0) = x;
    const ForwardPass fp = forward(net, batch);
    EXPECT_NEAR(fp.predictions[0], silu(x), 1e-15) << "x=" << x;
  }
}

TEST(KanForward, MatchesNaiveReimplementation) {
  const KanNetwork net = KanNetwork::make({3, 2, 1}, SplineGrid(), 42);
  const Matrix batch = random_batch(32, 3, 43, 1.2);
  const ForwardPass fp = forward(net, batch);
  for (int s = 0; s < batch.rows(); ++s) {
    const double expect = oracles::naive_forward(net, batch.row(s).transpose());
    EXPECT_NEAR(fp.predictions[s], expect, 1e-12);
  }
}

TEST(KanForward, CompositionOfLayerForwards) {
  const KanNetwork net = KanNetwork::make({4, 3, 2, 1}, SplineGrid(), 5);
  const Matrix batch = random_batch(16, 4, 6);
  const ForwardPass fp = forward(net, batch);
  Matrix x = batch;
  for (const KanLayer& layer : net.layers) x = layer_output(layer, x);
  for (int s = 0; s < batch.rows(); ++s) EXPECT_EQ(fp.predictions[s], x(s, 0));
}

TEST(KanForward, DeterministicBitwise) {
  const KanNetwork a = KanNetwork::make({5, 2, 1}, SplineGrid(), 77);
  const KanNetwork b = KanNetwork::make({5, 2, 1}, SplineGrid(), 77);
  const Matrix batch = random_batch(20, 5, 78);
  const ForwardPass fa = forward(a, batch);
  const ForwardPass fb = forward(b, batch);
  for (int s = 0; s < batch.rows(); ++s) EXPECT_EQ(fa.predictions[s], fb.predictions[s]);
}

TEST(KanForward, ShapeMismatchRejected) {
  const KanNetwork net = KanNetwork::make({3, 1}, SplineGrid(), 1);
  EXPECT_THROW(forward(net, random_batch(4, 2, 9)), ShapeError);
}

TEST(KanForward, ActivationRecordShapes) {
  const KanNetwork net = KanNetwork::make({3, 2, 1}, SplineGrid(), 11);
  const Matrix batch = random_batch(10, 3, 12);
  const ForwardPass fp = forward(net, batch);
  ASSERT_EQ(fp.layers.size(), 2u);
  ASSERT_EQ(fp.layers[0].phi.size(), 3u);
  EXPECT_EQ(fp.layers[0].phi[0].rows(), 10);
  EXPECT_EQ(fp.layers[0].phi[0].cols(), 2);
  ASSERT_EQ(fp.layers[1].phi.size(), 2u);
  EXPECT_EQ(fp.layers[1].phi[0].cols(), 1);
}

TEST(KanBackward, AllZeroStationaryPoint) {
  KanNetwork net = KanNetwork::make({3, 2, 1}, SplineGrid(), 1);
  zero_params(net);
  const Matrix batch = random_batch(8, 3, 2);
  const Vector targets = Vector::Zero(8);
  const ForwardPass fp = forward(net, batch);
  const Gradients g = backward(net, fp, targets, 0.0, 1.0, 1.0);
  for (const auto& l : g.layers) {
    EXPECT_EQ(l.w_base.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(l.coeffs.cwiseAbs().maxCoeff(), 0.0);
    // w_spline gradient is sum of gphi * spline-part; spline part is 0 here
    EXPECT_EQ(l.w_spline.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(KanBackward, MseGradientMatchesFiniteDifference) {
  const std::vector<std::vector<int>> archs = {{4, 1, 1}, {6, 3, 1}, {10, 2, 2, 1}};
  for (const auto& widths : archs)
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const KanNetwork net = KanNetwork::make(widths, SplineGrid(), seed);
      const Matrix x = random_batch(16, widths.front(), seed + 100);
      const Vector y = random_batch(16, 1, seed + 200).col(0);
      const FdStats stats = check_gradients(net, x, y, 0.0, 1.0, 1.0, 1e-5);
      EXPECT_GT(stats.checked, 0) << "arch n_in=" << widths.front() << " seed=" << seed;
      EXPECT_EQ(stats.skipped, 0);  // smooth loss: no kinks to skip
    }
}

TEST(KanBackward, L1GradientMatchesFiniteDifference) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const KanNetwork net = KanNetwork::make({4, 2, 1}, SplineGrid(), seed);
    const Matrix x = random_batch(12, 4, seed + 300);
    const Vector y = random_batch(12, 1, seed + 400).col(0);
    const FdStats stats = check_gradients(net, x, y, 1.0, 1.0, 0.0, 1e-4);
    EXPECT_GT(stats.checked, 10 * stats.skipped) << "too many kink skips to be meaningful";
  }
}

TEST(KanBackward, EntropyGradientMatchesFiniteDifference) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const KanNetwork net = KanNetwork::make({3, 2, 1}, SplineGrid(), seed + 50);
    const Matrix x = random_batch(12, 3, seed + 500);
    const Vector y = random_batch(12, 1, seed + 600).col(0);
    const FdStats stats = check_gradients(net, x, y, 0.5, 0.0, 1.0, 1e-4);
    EXPECT_GT(stats.checked, 10 * stats.skipped);
  }
}

TEST(KanBackward, MissingRecordsRejected) {
  const KanNetwork net = KanNetwork::make({3, 2, 1}, SplineGrid(), 1);
  const KanNetwork other = KanNetwork::make({3, 1}, SplineGrid(), 1);
  const Matrix batch = random_batch(4, 3, 2);
  const ForwardPass fp = forward(other, batch);
  EXPECT_THROW(backward(net, fp, Vector::Zero(4), 0.0, 1.0, 1.0), ShapeError);
}

TEST(KanNetworkStructure, InvariantsEnforced) {
  EXPECT_THROW(KanNetwork::make({3, 2, 2}, SplineGrid(), 1), ShapeError);  // final width != 1
  KanNetwork net = KanNetwork::make({3, 2, 1}, SplineGrid(), 1);
  net.layers[0].w_base(0, 0) = std::nan("");
  EXPECT_THROW(net.check(), NumericError);
}

TEST(KanSerialization, JsonRoundTripIsExact) {
  const KanNetwork net = KanNetwork::make({4, 2, 1}, SplineGrid(3, 5, -2.5, 2.5), 99);
  const Json doc = network_to_json(net);
  const KanNetwork back = network_from_json(Json::parse(doc.dump()));
  ASSERT_EQ(back.layers.size(), net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    EXPECT_TRUE((back.layers[l].w_base.array() == net.layers[l].w_base.array()).all());
    EXPECT_TRUE((back.layers[l].w_spline.array() == net.layers[l].w_spline.array()).all());
    EXPECT_TRUE((back.layers[l].coeffs.array() == net.layers[l].coeffs.array()).all());
    EXPECT_EQ(back.layers[l].grid.num_basis(), net.layers[l].grid.num_basis());
  }
  const Matrix batch = random_batch(6, 4, 1);
  const ForwardPass fa = forward(net, batch);
  const ForwardPass fb = forward(back, batch);
  for (int s = 0; s < batch.rows(); ++s) EXPECT_EQ(fa.predictions[s], fb.predictions[s]);
}
