#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gckan/common.hpp"

namespace gckan {

/// Uniform B-spline knot grid shared by every edge of a KAN layer.
///
/// degree k splines over num_intervals G uniform interior intervals on
/// [lo, hi], with k uniformly extrapolated exterior knots on each side
/// (same spacing as the interior). Extended knot vector length G + 2k + 1,
/// number of basis functions G + k.
class SplineGrid {
 public:
  SplineGrid() : SplineGrid(3, 5, -3.0, 3.0) {}

  SplineGrid(int degree, int num_intervals, double lo, double hi)
      : degree_(degree), num_intervals_(num_intervals), lo_(lo), hi_(hi) {
    if (degree < 1 || degree > 15) throw ConfigError("SplineGrid: degree must be in [1, 15]");
    if (num_intervals < 1) throw ConfigError("SplineGrid: num_intervals must be >= 1");
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
      throw ConfigError("SplineGrid: range_lo must be finite and < range_hi");
    const int m = num_intervals + 2 * degree;
    knots_.resize(static_cast<std::size_t>(m) + 1);
    const double h = (hi - lo) / num_intervals;
    for (int i = 0; i <= m; ++i) knots_[static_cast<std::size_t>(i)] = lo + (i - degree) * h;
  }

  int degree() const { return degree_; }
  int num_intervals() const { return num_intervals_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double spacing() const { return (hi_ - lo_) / num_intervals_; }
  int num_basis() const { return num_intervals_ + degree_; }
  const std::vector<double>& knots() const { return knots_; }

  double clamp(double x) const { return std::min(std::max(x, lo_), hi_); }
  bool in_range(double x) const { return x >= lo_ && x <= hi_; }

  /// Knot span index m with knots[m] <= x < knots[m+1], restricted to the
  /// interior spans [degree, degree + G - 1]. x == hi lands in the last span.
  int span_of(double x) const {
    const double xc = clamp(x);
    int m = degree_ + static_cast<int>(std::floor((xc - lo_) / spacing()));
    return std::min(std::max(m, degree_), degree_ + num_intervals_ - 1);
  }

 private:
  int degree_;
  int num_intervals_;
  double lo_, hi_;
  std::vector<double> knots_;
};

/// Evaluates the k+1 basis functions that are nonzero at x (clamped to the
/// grid range) via the de Boor triangular scheme. vals must hold degree+1
/// entries; if dvals is non-null it receives dB_i/dx at the clamped point.
/// Returns the index of the first nonzero basis function.
inline int basis_nonzero(const SplineGrid& grid, double x, double* vals, double* dvals = nullptr) {
  if (!std::isfinite(x)) throw InputError("basis_eval: non-finite input");
  const int k = grid.degree();
  const double xc = grid.clamp(x);
  const int m = grid.span_of(xc);
  const std::vector<double>& t = grid.knots();

  double dl[16], dr[16];  // degree capped well below 16 in practice
  vals[0] = 1.0;
  for (int j = 1; j <= k; ++j) {
    if (dvals != nullptr && j == k) {
      // vals currently holds the degree k-1 triangle row; apply the
      // derivative identity before finishing the value row.
      for (int r = k; r >= 0; --r) {
        const int i = m - k + r;
        double d = 0.0;
        if (r >= 1) d += vals[r - 1] / (t[static_cast<std::size_t>(i + k)] - t[static_cast<std::size_t>(i)]);
        if (r <= k - 1) d -= vals[r] / (t[static_cast<std::size_t>(i + k + 1)] - t[static_cast<std::size_t>(i + 1)]);
        dvals[r] = k * d;
      }
    }
    dl[j - 1] = xc - t[static_cast<std::size_t>(m + 1 - j)];
    dr[j - 1] = t[static_cast<std::size_t>(m + j)] - xc;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double term = vals[r] / (dr[r] + dl[j - 1 - r]);
      vals[r] = saved + dr[r] * term;
      saved = dl[j - 1 - r] * term;
    }
    vals[j] = saved;
  }
  return m - k;
}

/// B_i(x) for i = 0..G+k-1; x outside [lo, hi] is clamped first.
inline Vector basis_eval(const SplineGrid& grid, double x) {
  Vector out = Vector::Zero(grid.num_basis());
  double vals[16];
  const int first = basis_nonzero(grid, x, vals);
  for (int r = 0; r <= grid.degree(); ++r) out[first + r] = vals[r];
  return out;
}

/// dB_i/dx for i = 0..G+k-1, evaluated at the clamped point.
inline Vector basis_derivative(const SplineGrid& grid, double x) {
  Vector out = Vector::Zero(grid.num_basis());
  double vals[16], dvals[16];
  const int first = basis_nonzero(grid, x, vals, dvals);
  for (int r = 0; r <= grid.degree(); ++r) out[first + r] = dvals[r];
  return out;
}

/// spline(x) = sum_i coeffs[i] * B_i(x).
inline double spline_eval(const SplineGrid& grid, const Eigen::Ref<const Vector>& coeffs, double x) {
  if (coeffs.size() != grid.num_basis())
    throw ShapeError("spline_eval: expected " + std::to_string(grid.num_basis()) +
                     " coefficients, got " + std::to_string(coeffs.size()));
  double vals[16];
  const int first = basis_nonzero(grid, x, vals);
  double acc = 0.0;
  for (int r = 0; r <= grid.degree(); ++r) acc += coeffs[first + r] * vals[r];
  return acc;
}

}  // namespace gckan
