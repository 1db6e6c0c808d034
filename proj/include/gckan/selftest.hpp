#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gckan/cmlp.hpp"
#include "gckan/evaluation.hpp"
#include "gckan/kan.hpp"
#include "gckan/prox.hpp"
#include "gckan/regularizers.hpp"
#include "gckan/simulators.hpp"
#include "gckan/spline.hpp"

namespace gckan {

struct PropertyResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace selftest_detail {

inline PropertyResult spline_partition_of_unity() {
  PropertyResult res{"spline_partition_of_unity"};
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst = 0.0;
  const struct {
    int k, g;
    double lo, hi;
  } grids[] = {{1, 2, 0.0, 1.0}, {2, 4, -2.0, 2.0}, {3, 5, -3.0, 3.0}, {4, 6, -1.0, 5.0}};
  for (const auto& spec : grids) {
    const SplineGrid grid(spec.k, spec.g, spec.lo, spec.hi);
    for (int t = 0; t < 100; ++t) {
      const double x = spec.lo + (spec.hi - spec.lo) * unif(rng);
      worst = std::max(worst, std::abs(basis_eval(grid, x).sum() - 1.0));
      const Vector b = basis_eval(grid, x);
      int nonzero = 0;
      for (int i = 0; i < b.size(); ++i) {
        if (b[i] < 0.0) worst = 1.0;
        if (b[i] != 0.0) ++nonzero;
      }
      if (nonzero > spec.k + 1) worst = 1.0;
    }
  }
  res.pass = worst <= 1e-12;
  std::ostringstream os;
  os << "max |sum - 1| = " << worst << " (<= 1e-12)";
  res.detail = os.str();
  return res;
}

inline PropertyResult gradient_finite_difference() {
  PropertyResult res{"gradient_finite_difference"};
  const std::vector<std::vector<int>> archs = {{4, 1, 1}, {6, 3, 1}, {10, 2, 2, 1}};
  const double h = 1e-5;
  double worst = 0.0;
  int checked = 0;
  for (const auto& widths : archs)
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const KanNetwork net = KanNetwork::make(widths, SplineGrid(), seed);
      std::mt19937_64 rng(seed + 7);
      std::normal_distribution<double> gauss(0.0, 1.0);
      const Matrix x =
          Matrix::NullaryExpr(12, widths.front(), [&]() { return gauss(rng); });
      const Vector y = Vector::NullaryExpr(12, [&]() { return gauss(rng); });
      const ForwardPass fp = forward(net, x);
      const Gradients g = backward(net, fp, y, 0.0, 1.0, 1.0);
      auto loss_at = [&](const KanNetwork& m) {
        return total_loss(forward(m, x), y, 0.0, 1.0, 1.0).total;
      };
      KanNetwork probe = net;
      for (std::size_t l = 0; l < probe.layers.size(); ++l) {
        // sample a handful of parameters per tensor: full sweeps live in the
        // unit suite, this is the fast re-check
        auto probe_entry = [&](double* param, double analytic) {
          const double saved = *param;
          *param = saved + h;
          const double fp_ = loss_at(probe);
          *param = saved - h;
          const double fm = loss_at(probe);
          *param = saved;
          const double fd = (fp_ - fm) / (2.0 * h);
          const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-4});
          worst = std::max(worst, std::abs(fd - analytic) / scale);
          ++checked;
        };
        KanLayer& layer = probe.layers[l];
        probe_entry(&layer.w_base(0, 0), g.layers[l].w_base(0, 0));
        probe_entry(&layer.w_spline(layer.n_out - 1, layer.n_in - 1),
                    g.layers[l].w_spline(layer.n_out - 1, layer.n_in - 1));
        probe_entry(&layer.coeffs(0, 2), g.layers[l].coeffs(0, 2));
      }
    }
  res.pass = worst < 1e-5;
  std::ostringstream os;
  os << checked << " entries, max rel err = " << worst << " (< 1e-5)";
  res.detail = os.str();
  return res;
}

inline PropertyResult prox_nonexpansive_fixpoint() {
  PropertyResult res{"prox_nonexpansive_fixpoint"};
  std::mt19937_64 rng(33);
  std::normal_distribution<double> gauss(0.0, 2.0);
  std::uniform_real_distribution<double> unif(0.0, 1.5);
  bool ok = true;
  for (int t = 0; t < 2000; ++t) {
    const double a = gauss(rng), b = gauss(rng), thr = unif(rng);
    if (std::abs(prox(a, thr) - prox(b, thr)) > std::abs(a - b) + 1e-15) ok = false;
    if (prox(0.0, thr) != 0.0) ok = false;
    if (std::abs(a) <= thr && prox(a, thr) != 0.0) ok = false;
  }
  // training fixpoint: zero first-layer weight with zero gradient stays zero
  KanNetwork net = KanNetwork::make({2, 1, 1}, SplineGrid(), 3);
  for (KanLayer& l : net.layers) {
    l.w_base.setZero();
    l.w_spline.setZero();
    l.coeffs.setZero();
  }
  Matrix x(8, 2);
  std::normal_distribution<double> g2(0.0, 1.0);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = g2(rng);
  TrainConfig cfg;
  cfg.eta = 0.05;
  cfg.lambda = 0.0;
  cfg.lambda_prox = 0.2;
  cfg.epochs = 5;
  for (int e = 0; e < 5; ++e) train_step(net, x, Vector::Zero(8), cfg);
  if (net.layers[0].w_base.cwiseAbs().maxCoeff() != 0.0) ok = false;
  if (net.layers[0].w_spline.cwiseAbs().maxCoeff() != 0.0) ok = false;
  res.pass = ok;
  res.detail = ok ? "2000 random pairs + 5-step zero-weight fixpoint" : "violated";
  return res;
}

inline PropertyResult entropy_bounds_scale_invariance() {
  PropertyResult res{"entropy_bounds_scale_invariance"};
  std::mt19937_64 rng(55);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 5);
  bool ok = true;
  for (int t = 0; t < 50; ++t) {
    const int n_in = dim(rng), n_out = dim(rng), b = 1 + dim(rng);
    LayerRecord rec;
    rec.phi.assign(static_cast<std::size_t>(n_in), Matrix(b, n_out));
    for (Matrix& m : rec.phi)
      for (int i = 0; i < m.size(); ++i) m.data()[i] = gauss(rng);
    const double s = layer_entropy(rec);
    if (s < 0.0 || s > std::log(static_cast<double>(n_in) * n_out) + 1e-12) ok = false;
    LayerRecord scaled = rec;
    for (Matrix& m : scaled.phi) m *= 7.3;
    if (std::abs(layer_entropy(scaled) - s) > 1e-10) ok = false;
  }
  res.pass = ok;
  res.detail = ok ? "bounds + invariance on 50 random records" : "violated";
  return res;
}

inline PropertyResult hier_prox_properties() {
  PropertyResult res{"hier_prox_hierarchy_and_oracle"};
  std::mt19937_64 rng(77);
  std::normal_distribution<double> gauss(0.0, 1.0);
  bool ok = true;
  // hierarchy predicate + penalty decrease on random matrices
  for (int t = 0; t < 20; ++t) {
    const int n = 3, p = 4, h = 5;
    Matrix w1(h, n * p);
    for (int i = 0; i < w1.size(); ++i) w1.data()[i] = gauss(rng);
    const double before = hier_penalty(w1, n, p);
    Matrix shrunk = hier_prox(w1, 0.4, n, p);
    if (!satisfies_lag_hierarchy(shrunk, n, p)) ok = false;
    if (hier_penalty(shrunk, n, p) > before + 1e-12) ok = false;
  }
  // 2-group numerical prox oracle: minimize 0.5||w - v||^2 + thr * Omega_H
  const int h = 3;
  Matrix v(h, 2);
  for (int i = 0; i < v.size(); ++i) v.data()[i] = gauss(rng);
  const double thr = 0.3;
  const Matrix exact = hier_prox(v, thr, 1, 2);
  Matrix w = v;
  for (int it = 1; it <= 60000; ++it) {
    const double step = 0.5 / std::sqrt(static_cast<double>(it));
    Matrix grad = w - v;
    const double n2 = w.col(1).norm();
    Matrix sub = Matrix::Zero(h, 2);
    const double nf = w.norm();
    if (nf > 0) sub += thr * w / nf;
    if (n2 > 0) sub.col(1) += thr * w.col(1) / n2;
    w -= step * (grad + sub);
  }
  const double gap = (w - exact).cwiseAbs().maxCoeff();
  if (gap > 1e-4) ok = false;
  res.pass = ok;
  std::ostringstream os;
  os << "hierarchy holds; oracle gap = " << gap << " (<= 1e-4)";
  res.detail = os.str();
  return res;
}

inline PropertyResult var_stationarity() {
  PropertyResult res{"var_companion_spectral_radius"};
  bool ok = true;
  double worst = 0.0;
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    for (int order : {1, 2, 3}) {
      VarSpec spec;
      spec.n = 10;
      spec.order = order;
      spec.T = 50;
      spec.seed = seed;
      const VarSim sim = simulate_var(spec);
      const double rho = companion_spectral_radius(sim.coeffs);
      worst = std::max(worst, rho);
      if (rho >= 1.0) ok = false;
    }
  }
  res.pass = ok;
  std::ostringstream os;
  os << "max radius = " << worst << " (< 1)";
  res.detail = os.str();
  return res;
}

inline PropertyResult lorenz_rk4_order() {
  PropertyResult res{"lorenz_rk4_step_halving_order"};
  Vector x0(8);
  x0 << 1.1, 7.9, 8.2, 8.0, 7.7, 8.3, 8.1, 7.8;  // off the fixed point
  const double forcing = 10.0, horizon = 1.0;
  auto integrate = [&](double dt) {
    Vector x = x0;
    const int steps = static_cast<int>(std::llround(horizon / dt));
    for (int s = 0; s < steps; ++s) x = rk4_step(x, forcing, dt);
    return x;
  };
  const Vector a = integrate(0.01), b = integrate(0.005), c = integrate(0.0025);
  // successive-difference ratio: |x_dt - x_dt/2| / |x_dt/2 - x_dt/4| ~ 2^order
  const double order = std::log2((a - b).norm() / (b - c).norm());
  res.pass = order >= 3.5;
  std::ostringstream os;
  os << "observed order = " << order << " (>= 3.5)";
  res.detail = os.str();
  return res;
}

inline PropertyResult auroc_trapezoid() {
  PropertyResult res{"auroc_trapezoid_vs_hand_integral"};
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  bool ok = true;
  for (int t = 0; t < 200; ++t) {
    std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
    for (int i = 0; i < 6; ++i) pts.emplace_back(unif(rng), unif(rng));
    pts.emplace_back(1.0, 1.0);
    std::sort(pts.begin(), pts.end());
    double hand = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double dx = pts[i].first - pts[i - 1].first;
      hand += dx * pts[i - 1].second + 0.5 * dx * (pts[i].second - pts[i - 1].second);
    }
    if (std::abs(trapezoid(pts) - hand) > 1e-12) ok = false;
  }
  res.pass = ok;
  res.detail = ok ? "200 random staircases" : "mismatch";
  return res;
}

}  // namespace selftest_detail

/// The property suites behind the `selftest` subcommand.
inline std::vector<PropertyResult> run_property_suite() {
  using namespace selftest_detail;
  return {spline_partition_of_unity(),
          gradient_finite_difference(),
          prox_nonexpansive_fixpoint(),
          entropy_bounds_scale_invariance(),
          hier_prox_properties(),
          var_stationarity(),
          lorenz_rk4_order(),
          auroc_trapezoid()};
}

}  // namespace gckan
