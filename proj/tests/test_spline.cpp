#include "gckan/spline.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using gckan::basis_derivative;
using gckan::basis_eval;
using gckan::spline_eval;
using gckan::SplineGrid;
using gckan::Vector;

namespace {

// Independent oracle: direct two-branch Cox-de Boor recursion, term by term,
// with the 0/0 := 0 convention. Deliberately naive.
double naive_basis(const std::vector<double>& t, int i, int k, double x) {
  if (k == 0) return (t[i] <= x && x < t[i + 1]) ? 1.0 : 0.0;
  double acc = 0.0;
  const double dl = t[i + k] - t[i];
  if (dl > 0.0) acc += (x - t[i]) / dl * naive_basis(t, i, k - 1, x);
  const double dr = t[i + k + 1] - t[i + 1];
  if (dr > 0.0) acc += (t[i + k + 1] - x) / dr * naive_basis(t, i + 1, k - 1, x);
  return acc;
}

Vector naive_basis_all(const SplineGrid& g, double x) {
  Vector out(g.num_basis());
  for (int i = 0; i < g.num_basis(); ++i) out[i] = naive_basis(g.knots(), i, g.degree(), x);
  return out;
}

}  // namespace

TEST(SplineGrid, KnotLayout) {
  const SplineGrid g(3, 5, -1.0, 1.0);
  EXPECT_EQ(static_cast<int>(g.knots().size()), 5 + 2 * 3 + 1);
  EXPECT_EQ(g.num_basis(), 8);
  for (std::size_t i = 1; i < g.knots().size(); ++i) {
    EXPECT_LT(g.knots()[i - 1], g.knots()[i]);
    EXPECT_NEAR(g.knots()[i] - g.knots()[i - 1], g.spacing(), 1e-14);
  }
}

TEST(SplineGrid, RejectsBadParameters) {
  EXPECT_THROW(SplineGrid(0, 5, -1.0, 1.0), gckan::ConfigError);
  EXPECT_THROW(SplineGrid(3, 0, -1.0, 1.0), gckan::ConfigError);
  EXPECT_THROW(SplineGrid(3, 5, 1.0, 1.0), gckan::ConfigError);
}

TEST(BasisEval, PartitionOfUnityLinear) {
  const SplineGrid g(1, 2, 0.0, 1.0);
  EXPECT_NEAR(basis_eval(g, 0.5).sum(), 1.0, 1e-12);
}

TEST(BasisEval, LocalSupportCubicAtInteriorKnot) {
  const SplineGrid g(3, 5, -1.0, 1.0);
  const double x = g.knots()[5];  // interior knot
  const Vector b = basis_eval(g, x);
  int nonzero = 0;
  for (int i = 0; i < b.size(); ++i)
    if (b[i] != 0.0) ++nonzero;
  EXPECT_LE(nonzero, 4);
}

TEST(BasisEval, MatchesNaiveRecursion) {
  const SplineGrid g(3, 5, -1.0, 1.0);
  const Vector fast = basis_eval(g, 0.3);
  const Vector naive = naive_basis_all(g, 0.3);
  for (int i = 0; i < fast.size(); ++i) EXPECT_NEAR(fast[i], naive[i], 1e-12);
}

TEST(BasisEval, NonFiniteInputRejected) {
  const SplineGrid g;
  EXPECT_THROW(basis_eval(g, std::nan("")), gckan::InputError);
  EXPECT_THROW(basis_eval(g, INFINITY), gckan::InputError);
}

TEST(BasisDerivative, FlatSumLinear) {
  const SplineGrid g(1, 4, 0.0, 1.0);
  EXPECT_NEAR(basis_derivative(g, 0.37).sum(), 0.0, 1e-12);
}

TEST(BasisDerivative, MatchesFiniteDifference) {
  const SplineGrid g(3, 5, -1.0, 1.0);
  const double x = 0.3, h = 1e-6;
  const Vector fd = (basis_eval(g, x + h) - basis_eval(g, x - h)) / (2.0 * h);
  const Vector an = basis_derivative(g, x);
  for (int i = 0; i < an.size(); ++i) {
    const double denom = std::max(std::abs(an[i]), 1.0);
    EXPECT_NEAR(an[i], fd[i], 1e-6 * denom);
  }
}

TEST(BasisDerivative, ClampContract) {
  const SplineGrid g(3, 5, -1.0, 1.0);
  const Vector at_hi = basis_derivative(g, g.hi());
  const Vector beyond = basis_derivative(g, g.hi() + 5.0);
  for (int i = 0; i < at_hi.size(); ++i) EXPECT_EQ(at_hi[i], beyond[i]);
}

TEST(SplineEval, ZeroCoefficients) {
  const SplineGrid g(3, 5, -1.0, 1.0);
  const Vector c = Vector::Zero(g.num_basis());
  EXPECT_EQ(spline_eval(g, c, 0.1), 0.0);
  EXPECT_EQ(spline_eval(g, c, 17.0), 0.0);
}

TEST(SplineEval, PartitionOfUnityCoefficients) {
  const SplineGrid g(3, 5, -1.0, 1.0);
  const Vector c = Vector::Ones(g.num_basis());
  EXPECT_NEAR(spline_eval(g, c, 0.42), 1.0, 1e-12);
}

TEST(SplineEval, MatchesNaiveDotProduct) {
  const SplineGrid g(3, 5, -1.0, 1.0);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector c(g.num_basis());
  for (int i = 0; i < c.size(); ++i) c[i] = gauss(rng);
  const double x = 0.42;
  EXPECT_NEAR(spline_eval(g, c, x), c.dot(naive_basis_all(g, x)), 1e-12);
}

TEST(SplineEval, CoefficientLengthMismatch) {
  const SplineGrid g(3, 5, -1.0, 1.0);
  EXPECT_THROW(spline_eval(g, Vector::Zero(g.num_basis() + 1), 0.1), gckan::ShapeError);
}

// Property sweep over assorted grids.
TEST(SplineProperties, RandomGrids) {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const struct {
    int k, g;
    double lo, hi;
  } grids[] = {{1, 2, 0.0, 1.0}, {2, 3, -2.0, 2.0}, {3, 5, -3.0, 3.0},
               {3, 1, -1.0, 1.0}, {4, 7, -0.5, 4.5}, {5, 4, -10.0, 10.0}};
  for (const auto& spec : grids) {
    const SplineGrid g(spec.k, spec.g, spec.lo, spec.hi);
    for (int trial = 0; trial < 100; ++trial) {
      const double x = spec.lo + (spec.hi - spec.lo) * unif(rng);
      const Vector b = basis_eval(g, x);
      EXPECT_NEAR(b.sum(), 1.0, 1e-12);
      int nonzero = 0;
      for (int i = 0; i < b.size(); ++i) {
        EXPECT_GE(b[i], 0.0);
        if (b[i] != 0.0) ++nonzero;
      }
      EXPECT_LE(nonzero, spec.k + 1);
      const Vector naive = naive_basis_all(g, x);
      for (int i = 0; i < b.size(); ++i)
        EXPECT_NEAR(b[i], naive[i], 1e-12) << "grid k=" << spec.k << " x=" << x;
    }
  }
}

TEST(SplineProperties, DerivativeConsistencyRandom) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const struct {
    int k, g;
    double lo, hi;
  } grids[] = {{2, 3, -2.0, 2.0}, {3, 5, -3.0, 3.0}, {4, 6, -1.0, 1.0}};
  for (const auto& spec : grids) {
    const SplineGrid g(spec.k, spec.g, spec.lo, spec.hi);
    const double h = 1e-6 * (spec.hi - spec.lo);
    int checked = 0;
    while (checked < 100) {
      const double margin = 2.0 * h;
      const double x = spec.lo + (spec.hi - spec.lo) * unif(rng);
      if (x - margin < spec.lo || x + margin > spec.hi) continue;
      // stay away from knots where low-degree derivatives are only one-sided
      bool near_knot = false;
      for (double t : g.knots())
        if (std::abs(x - t) < 1e-4 * (spec.hi - spec.lo)) near_knot = true;
      if (near_knot) continue;
      ++checked;
      const Vector fd = (basis_eval(g, x + h) - basis_eval(g, x - h)) / (2.0 * h);
      const Vector an = basis_derivative(g, x);
      for (int i = 0; i < an.size(); ++i) {
        const double scale = std::max({std::abs(an[i]), std::abs(fd[i]), 1e-6});
        EXPECT_LT(std::abs(an[i] - fd[i]) / scale, 1e-5)
            << "k=" << spec.k << " x=" << x << " i=" << i;
      }
    }
  }
}
