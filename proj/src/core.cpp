#include "hvfwi/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hvfwi {

Grid1D::Grid1D(int n_, double a_, double b_) : n(n_), a(a_), b(b_) {
  if (n < 3) throw std::invalid_argument("Grid1D: need at least 3 points, got " + std::to_string(n));
  if (!(b > a)) throw std::invalid_argument("Grid1D: endpoints must satisfy a < b");
  h = (b - a) / (n - 1);
}

Signal::Signal(Grid1D g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (static_cast<int>(values.size()) != grid.n)
    throw std::invalid_argument("Signal: values length does not match grid");
  for (double x : values)
    if (!std::isfinite(x)) throw std::invalid_argument("Signal: non-finite entry");
}

SpaceTimeGrid::SpaceTimeGrid(Grid1D space_, Grid1D time_) : space(space_), time(time_) {
  if (time.a != 0.0 || time.b != 1.0)
    throw std::invalid_argument("SpaceTimeGrid: geodesic time axis must be [0,1]");
}

Signal Field::slice_signal(int it) const {
  auto sp = slice(it);
  return Signal(grid.space, std::vector<double>(sp.begin(), sp.end()));
}

BandedSystem::BandedSystem(int n_, int bandwidth_) : n(n_), bandwidth(bandwidth_) {
  if (n < 1 || bandwidth < 0) throw std::invalid_argument("BandedSystem: bad dimensions");
  bands.resize(bandwidth + 1);
  for (int j = 0; j <= bandwidth; ++j) bands[j].assign(std::max(0, n - j), 0.0);
}

double& BandedSystem::at(int i, int j) {
  if (j < i) std::swap(i, j);
  int d = j - i;
  if (d > bandwidth) throw std::out_of_range("BandedSystem::at outside band");
  return bands[d][i];
}

double BandedSystem::get(int i, int j) const {
  if (j < i) std::swap(i, j);
  int d = j - i;
  if (d > bandwidth || j >= n || i < 0) return 0.0;
  return bands[d][i];
}

std::vector<double> BandedSystem::apply(std::span<const double> x) const {
  // extended accumulation: stencil entries of size h^-4 cancel to O(1)
  std::vector<double> y(n, 0.0);
  for (int i = 0; i < n; ++i) {
    long double acc = static_cast<long double>(bands[0][i]) * x[i];
    for (int d = 1; d <= bandwidth; ++d) {
      if (i + d < n) acc += static_cast<long double>(bands[d][i]) * x[i + d];
      if (i - d >= 0) acc += static_cast<long double>(bands[d][i - d]) * x[i - d];
    }
    y[i] = static_cast<double>(acc);
  }
  return y;
}

namespace {

void derivative1(const Signal& s, Signal& out) {
  const int n = s.n();
  const double h = s.grid.h;
  out[0] = (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * h);
  for (int i = 1; i < n - 1; ++i) out[i] = (s[i + 1] - s[i - 1]) / (2.0 * h);
  out[n - 1] = (3.0 * s[n - 1] - 4.0 * s[n - 2] + s[n - 3]) / (2.0 * h);
}

void derivative2(const Signal& s, Signal& out) {
  const int n = s.n();
  const double h2 = s.grid.h * s.grid.h;
  for (int i = 1; i < n - 1; ++i) out[i] = (s[i + 1] - 2.0 * s[i] + s[i - 1]) / h2;
  if (n >= 4) {
    out[0] = (2.0 * s[0] - 5.0 * s[1] + 4.0 * s[2] - s[3]) / h2;
    out[n - 1] = (2.0 * s[n - 1] - 5.0 * s[n - 2] + 4.0 * s[n - 3] - s[n - 4]) / h2;
  } else {
    out[0] = (s[0] - 2.0 * s[1] + s[2]) / h2;
    out[n - 1] = (s[n - 1] - 2.0 * s[n - 2] + s[n - 3]) / h2;
  }
}

// 5-point biharmonic stencil with hinged ghosts v(-h) = -v(h).
void derivative4(const Signal& s, Signal& out) {
  const int n = s.n();
  const double h4 = std::pow(s.grid.h, 4);
  auto v = [&](int i) -> double {
    if (i < 0) return -s[-i];
    if (i >= n) return -s[2 * (n - 1) - i];
    return s[i];
  };
  for (int i = 0; i < n; ++i)
    out[i] = (v(i - 2) - 4.0 * v(i - 1) + 6.0 * v(i) - 4.0 * v(i + 1) + v(i + 2)) / h4;
}

}  // namespace

Signal derivative(const Signal& s, int order) {
  if (order != 1 && order != 2 && order != 4)
    throw std::invalid_argument("derivative: order must be 1, 2 or 4");
  if (s.n() < order + 1)
    throw std::invalid_argument("derivative: grid too small for order " + std::to_string(order));
  Signal out(s.grid);
  switch (order) {
    case 1: derivative1(s, out); break;
    case 2: derivative2(s, out); break;
    case 4: derivative4(s, out); break;
  }
  return out;
}

std::vector<double> solve_banded_spd(const BandedSystem& sys, std::span<const double> rhs) {
  const int n = sys.n;
  const int kd = sys.bandwidth;
  if (static_cast<int>(rhs.size()) != n)
    throw std::invalid_argument("solve_banded_spd: rhs size mismatch");

  // Banded Cholesky A = L L^T, L stored by lower diagonals: low[d][i] = L(i, i-d).
  std::vector<std::vector<double>> low(kd + 1);
  for (int d = 0; d <= kd; ++d) low[d].assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double diag = sys.get(j, j);
    for (int d = 1; d <= std::min(kd, j); ++d) diag -= low[d][j] * low[d][j];
    if (!(diag > 0.0))
      throw std::runtime_error("solve_banded_spd: non-SPD pivot at row " + std::to_string(j));
    low[0][j] = std::sqrt(diag);
    for (int i = j + 1; i <= std::min(n - 1, j + kd); ++i) {
      double acc = sys.get(i, j);
      // overlap of row i and row j inside the band
      for (int k = std::max({0, i - kd, j - kd}); k < j; ++k)
        acc -= low[i - k][i] * low[j - k][j];
      low[i - j][i] = acc / low[0][j];
    }
  }

  auto forward_back = [&](std::span<const double> b) {
    std::vector<double> y(b.begin(), b.end());
    for (int i = 0; i < n; ++i) {
      double acc = y[i];
      for (int d = 1; d <= std::min(kd, i); ++d) acc -= low[d][i] * y[i - d];
      y[i] = acc / low[0][i];
    }
    for (int i = n - 1; i >= 0; --i) {
      double acc = y[i];
      for (int d = 1; d <= std::min(kd, n - 1 - i); ++d) acc -= low[d][i + d] * y[i + d];
      y[i] = acc / low[0][i];
    }
    return y;
  };

  // extended-precision residual keeps refinement effective on the stiff
  // fourth-order systems (condition ~ h^-4)
  auto residual = [&](const std::vector<double>& x) {
    std::vector<double> r(n);
    for (int i = 0; i < n; ++i) {
      long double acc = rhs[i];
      acc -= static_cast<long double>(sys.bands[0][i]) * x[i];
      for (int d = 1; d <= kd; ++d) {
        if (i + d < n) acc -= static_cast<long double>(sys.bands[d][i]) * x[i + d];
        if (i - d >= 0) acc -= static_cast<long double>(sys.bands[d][i - d]) * x[i - d];
      }
      r[i] = static_cast<double>(acc);
    }
    return r;
  };

  std::vector<double> x = forward_back(rhs);
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<double> dx = forward_back(residual(x));
    for (int i = 0; i < n; ++i) x[i] += dx[i];
  }
  return x;
}

double integrate(const Signal& s) {
  const int n = s.n();
  double acc = 0.5 * (s[0] + s[n - 1]);
  for (int i = 1; i < n - 1; ++i) acc += s[i];
  return acc * s.grid.h;
}

double interp_linear(const Grid1D& grid, std::span<const double> values, double x) {
  if (x <= grid.a) return values.front();
  if (x >= grid.b) return values.back();
  double u = (x - grid.a) / grid.h;
  int i = std::min(static_cast<int>(u), grid.n - 2);
  double w = u - i;
  return values[i] * (1.0 - w) + values[i + 1] * w;
}

double interp_linear(const Signal& s, double x) {
  return interp_linear(s.grid, s.values, x);
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

double l2_norm_trapezoid(const Signal& s) {
  Signal sq(s.grid);
  for (int i = 0; i < s.n(); ++i) sq[i] = s[i] * s[i];
  return std::sqrt(integrate(sq));
}

}  // namespace hvfwi
