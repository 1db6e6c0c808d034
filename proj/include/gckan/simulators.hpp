#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "gckan/common.hpp"

namespace gckan {

struct TimeSeries {
  Matrix values;  // T x n
  double sample_rate = 1.0;
  std::vector<std::string> names;
};

/// adjacency(i, j) = 1 iff series j Granger-causes series i.
struct GroundTruth {
  IntMatrix adjacency;
  std::vector<IntMatrix> lag_adjacency;  // one n x n matrix per true lag
};

struct VarSpec {
  int n = 20;
  int order = 1;
  int parents_per_series = 3;
  double coeff_magnitude = 0.4;
  double noise_std = 1.0;
  int T = 1000;
  std::uint64_t seed = 0;
  int burn_in = 200;

  void validate() const {
    if (n < 1) throw ConfigError("VarSpec: n must be >= 1");
    if (order < 1) throw ConfigError("VarSpec: order must be >= 1");
    if (parents_per_series < 0 || parents_per_series > n - 1)
      throw ConfigError("VarSpec: parents_per_series must be in [0, n-1]");
    if (!(coeff_magnitude > 0.0)) throw ConfigError("VarSpec: coeff_magnitude must be > 0");
    if (noise_std < 0.0) throw ConfigError("VarSpec: noise_std must be >= 0");
    if (T < 1) throw ConfigError("VarSpec: T must be >= 1");
    if (burn_in < 0) throw ConfigError("VarSpec: burn_in must be >= 0");
  }
};

struct LorenzSpec {
  int n = 20;
  double forcing = 10.0;
  double dt_integrate = 0.005;
  double sample_rate = 0.05;
  int T = 1000;
  int burn_in = 1000;  // discarded samples (not integrator steps)
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 4) throw ConfigError("LorenzSpec: n must be >= 4 (i-2 neighbor must be distinct)");
    if (!(dt_integrate > 0.0)) throw ConfigError("LorenzSpec: dt_integrate must be > 0");
    if (dt_integrate > sample_rate)
      throw ConfigError("LorenzSpec: dt_integrate must be <= sample_rate");
    const double ratio = sample_rate / dt_integrate;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
      throw ConfigError("LorenzSpec: sample_rate must be an integer multiple of dt_integrate");
    if (T < 1) throw ConfigError("LorenzSpec: T must be >= 1");
    if (burn_in < 0) throw ConfigError("LorenzSpec: burn_in must be >= 0");
    if (noise_std < 0.0) throw ConfigError("LorenzSpec: noise_std must be >= 0");
    if (!std::isfinite(forcing)) throw ConfigError("LorenzSpec: forcing must be finite");
  }
};

inline std::vector<std::string> default_names(int n) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

/// Spectral radius of the VAR companion matrix for coefficient set A_1..A_p.
inline double companion_spectral_radius(const std::vector<Matrix>& coeffs) {
  const int p = static_cast<int>(coeffs.size());
  const int n = static_cast<int>(coeffs.front().rows());
  Matrix companion = Matrix::Zero(n * p, n * p);
  for (int k = 0; k < p; ++k) companion.block(0, k * n, n, n) = coeffs[static_cast<std::size_t>(k)];
  for (int k = 1; k < p; ++k)
    companion.block(k * n, (k - 1) * n, n, n) = Matrix::Identity(n, n);
  Eigen::EigenSolver<Matrix> solver(companion, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

struct VarSim {
  TimeSeries series;
  GroundTruth truth;
  std::vector<Matrix> coeffs;  // realized A_1..A_p after stationarity rescaling
};

/// Sparse stationary VAR(p): self dependencies plus parents_per_series random
/// parents per row, all nonzero entries +-coeff_magnitude, rescaled until the
/// companion spectral radius is < 0.95, driven by i.i.d. Gaussian noise.
inline VarSim simulate_var(const VarSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(splitmix64(spec.seed));
  std::uniform_int_distribution<int> coin(0, 1);

  // sparsity pattern: same parent set at every true lag
  IntMatrix pattern = IntMatrix::Zero(spec.n, spec.n);
  for (int i = 0; i < spec.n; ++i) {
    pattern(i, i) = 1;
    std::vector<int> others;
    others.reserve(static_cast<std::size_t>(spec.n) - 1);
    for (int j = 0; j < spec.n; ++j)
      if (j != i) others.push_back(j);
    for (int pick = 0; pick < spec.parents_per_series; ++pick) {
      std::uniform_int_distribution<int> idx(pick, static_cast<int>(others.size()) - 1);
      std::swap(others[static_cast<std::size_t>(pick)], others[static_cast<std::size_t>(idx(rng))]);
      pattern(i, others[static_cast<std::size_t>(pick)]) = 1;
    }
  }

  std::vector<Matrix> coeffs(static_cast<std::size_t>(spec.order),
                             Matrix::Zero(spec.n, spec.n));
  for (int k = 0; k < spec.order; ++k)
    for (int i = 0; i < spec.n; ++i)
      for (int j = 0; j < spec.n; ++j)
        if (pattern(i, j) != 0)
          coeffs[static_cast<std::size_t>(k)](i, j) =
              (coin(rng) != 0 ? 1.0 : -1.0) * spec.coeff_magnitude;

  double radius = companion_spectral_radius(coeffs);
  for (int iter = 0; radius >= 0.95; ++iter) {
    if (iter >= 50)
      throw NumericError("simulate_var: failed to reach stationarity in 50 rescalings");
    const double factor = std::max(0.5, std::min(0.9, 0.94 / radius));
    for (Matrix& a : coeffs) a *= factor;
    radius = companion_spectral_radius(coeffs);
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  const int total = spec.order + spec.burn_in + spec.T;
  Matrix x(total, spec.n);
  for (int t = 0; t < spec.order; ++t)
    for (int j = 0; j < spec.n; ++j) x(t, j) = gauss(rng);
  for (int t = spec.order; t < total; ++t) {
    Vector next = Vector::Zero(spec.n);
    for (int k = 0; k < spec.order; ++k)
      next.noalias() += coeffs[static_cast<std::size_t>(k)] * x.row(t - k - 1).transpose();
    if (spec.noise_std > 0.0)
      for (int j = 0; j < spec.n; ++j) next[j] += spec.noise_std * gauss(rng);
    x.row(t) = next.transpose();
  }

  VarSim out;
  out.series.values = x.bottomRows(spec.T);
  out.series.sample_rate = 1.0;
  out.series.names = default_names(spec.n);
  out.truth.adjacency = pattern;
  out.truth.lag_adjacency.assign(static_cast<std::size_t>(spec.order), pattern);
  out.coeffs = std::move(coeffs);
  return out;
}

/// dx_i/dt = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F with circular indices.
inline Vector lorenz96_rhs(const Eigen::Ref<const Vector>& x, double forcing) {
  const int n = static_cast<int>(x.size());
  Vector d(n);
  for (int i = 0; i < n; ++i) {
    const int ip1 = (i + 1) % n;
    const int im1 = (i - 1 + n) % n;
    const int im2 = (i - 2 + n) % n;
    d[i] = (x[ip1] - x[im2]) * x[im1] - x[i] + forcing;
  }
  return d;
}

/// One classical Runge-Kutta 4 step.
inline Vector rk4_step(const Eigen::Ref<const Vector>& x, double forcing, double dt) {
  const Vector k1 = lorenz96_rhs(x, forcing);
  const Vector k2 = lorenz96_rhs(x + 0.5 * dt * k1, forcing);
  const Vector k3 = lorenz96_rhs(x + 0.5 * dt * k2, forcing);
  const Vector k4 = lorenz96_rhs(x + dt * k3, forcing);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct LorenzSim {
  TimeSeries series;
  GroundTruth truth;
};

inline LorenzSim simulate_lorenz96(const LorenzSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(splitmix64(spec.seed));
  std::normal_distribution<double> gauss(0.0, 1.0);

  Vector x(spec.n);
  for (int j = 0; j < spec.n; ++j) x[j] = spec.forcing + 0.01 * gauss(rng);

  const int steps_per_sample =
      static_cast<int>(std::llround(spec.sample_rate / spec.dt_integrate));
  const int total_samples = spec.burn_in + spec.T;
  Matrix out(spec.T, spec.n);
  long long step = 0;
  for (int s = 0; s < total_samples; ++s) {
    for (int sub = 0; sub < steps_per_sample; ++sub) {
      x = rk4_step(x, spec.forcing, spec.dt_integrate);
      ++step;
      if (!x.allFinite())
        throw NumericError("simulate_lorenz96: state blew up at integrator step " +
                           std::to_string(step));
    }
    if (s >= spec.burn_in) out.row(s - spec.burn_in) = x.transpose();
  }
  if (spec.noise_std > 0.0)
    for (int t = 0; t < spec.T; ++t)
      for (int j = 0; j < spec.n; ++j) out(t, j) += spec.noise_std * gauss(rng);

  LorenzSim sim;
  sim.series.values = std::move(out);
  sim.series.sample_rate = spec.sample_rate;
  sim.series.names = default_names(spec.n);
  sim.truth.adjacency = IntMatrix::Zero(spec.n, spec.n);
  for (int i = 0; i < spec.n; ++i) {
    sim.truth.adjacency(i, (i + 1) % spec.n) = 1;
    sim.truth.adjacency(i, (i - 2 + spec.n) % spec.n) = 1;
    sim.truth.adjacency(i, (i - 1 + spec.n) % spec.n) = 1;
    sim.truth.adjacency(i, i) = 1;
  }
  sim.truth.lag_adjacency.assign(1, sim.truth.adjacency);
  return sim;
}

}  // namespace gckan
