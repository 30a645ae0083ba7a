#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hvfwi {

/// Uniform 1D grid on [a, b] with n nodes.
struct Grid1D {
  int n = 0;
  double a = 0.0;
  double b = 1.0;
  double h = 0.0;

  Grid1D() = default;
  Grid1D(int n_, double a_, double b_);

  double x(int i) const { return a + h * i; }
  bool operator==(const Grid1D&) const = default;
};

/// Nodal values of a scalar function on a Grid1D.
struct Signal {
  Grid1D grid;
  std::vector<double> values;

  Signal() = default;
  Signal(Grid1D g, std::vector<double> v);
  explicit Signal(Grid1D g) : grid(g), values(g.n, 0.0) {}

  int n() const { return grid.n; }
  double& operator[](int i) { return values[static_cast<size_t>(i)]; }
  double operator[](int i) const { return values[static_cast<size_t>(i)]; }
};

/// Tensor grid: spatial nodes on (0,1), geodesic pseudo-time nodes on [0,1].
struct SpaceTimeGrid {
  Grid1D space;
  Grid1D time;

  SpaceTimeGrid() = default;
  SpaceTimeGrid(Grid1D space_, Grid1D time_);
  bool operator==(const SpaceTimeGrid&) const = default;
};

/// Time-major field on a SpaceTimeGrid: values[it * nx + ix].
struct Field {
  SpaceTimeGrid grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(SpaceTimeGrid g)
      : grid(g), values(static_cast<size_t>(g.space.n) * g.time.n, 0.0) {}

  int nx() const { return grid.space.n; }
  int nt() const { return grid.time.n; }
  double& at(int ix, int it) { return values[static_cast<size_t>(it) * nx() + ix]; }
  double at(int ix, int it) const { return values[static_cast<size_t>(it) * nx() + ix]; }
  std::span<double> slice(int it) { return {values.data() + static_cast<size_t>(it) * nx(), static_cast<size_t>(nx())}; }
  std::span<const double> slice(int it) const { return {values.data() + static_cast<size_t>(it) * nx(), static_cast<size_t>(nx())}; }
  Signal slice_signal(int it) const;
};

/// Symmetric banded matrix in upper-diagonal storage:
/// bands[j][i] = A(i, i+j) for j = 0..bandwidth, i + j < n.
struct BandedSystem {
  int n = 0;
  int bandwidth = 0;
  std::vector<std::vector<double>> bands;

  BandedSystem() = default;
  BandedSystem(int n_, int bandwidth_);

  double& at(int i, int j);  // requires j >= i, j - i <= bandwidth
  double get(int i, int j) const;
  std::vector<double> apply(std::span<const double> x) const;
};

/// Finite-difference derivative of the given order (1, 2 or 4).
/// Orders 1-2 use central second-order stencils with one-sided
/// second-order boundary rows. Order 4 uses the 5-point stencil with
/// antisymmetric (hinged) ghost nodes at both ends.
Signal derivative(const Signal& s, int order);

/// Cholesky solve for a symmetric positive definite banded system.
/// One iterative-refinement pass keeps the relative residual near 1e-12.
/// Throws if a non-SPD pivot is encountered (reports the failing row).
std::vector<double> solve_banded_spd(const BandedSystem& sys, std::span<const double> rhs);

/// Trapezoidal rule on the signal's uniform grid.
double integrate(const Signal& s);

/// Piecewise-linear interpolation; x outside [a,b] clamps to the endpoint value.
double interp_linear(const Signal& s, double x);
double interp_linear(const Grid1D& grid, std::span<const double> values, double x);

double max_abs(std::span<const double> v);
double l2_norm_trapezoid(const Signal& s);

}  // namespace hvfwi
