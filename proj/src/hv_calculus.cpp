#include "hvfwi/hv_calculus.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hvfwi/misfit.hpp"

namespace hvfwi {

void HessianAnalysisParams::validate() const {
  p.validate();
  if (m_lower < 0.0 || M_upper < m_lower)
    throw std::invalid_argument("HessianAnalysisParams: need 0 <= m_lower <= M_upper");
}

Signal hv_gradient(const Signal& rho0, const Signal& rho1, const HVParams& p) {
  HVResult res = hv_distance(rho0, rho1, p);
  Signal g(rho0.grid);
  for (int i = 0; i < g.n(); ++i) g[i] = -res.path.z.at(i, 0);
  return g;
}

namespace {

// Interior pentadiagonal eps*D4 - lambda*D2 + diag(coef), hinged ends.
BandedSystem assemble_l_operator(const Grid1D& g, double epsilon, double lambda,
                                 std::span<const double> coef) {
  const int m = g.n - 2;
  const double h2 = g.h * g.h, h4 = h2 * h2;
  BandedSystem sys(m, 2);
  for (int j = 0; j < m; ++j) {
    double diag = (j == 0 || j == m - 1) ? 5.0 : 6.0;
    sys.at(j, j) = epsilon * diag / h4 + lambda * 2.0 / h2 + coef[j];
    if (j + 1 < m) sys.at(j, j + 1) = -4.0 * epsilon / h4 - lambda / h2;
    if (j + 2 < m) sys.at(j, j + 2) = epsilon / h4;
  }
  return sys;
}

}  // namespace

Signal hessian_apply(const Signal& rho, const Signal& theta, const HVParams& p) {
  p.validate();
  if (!(rho.grid == theta.grid))
    throw std::invalid_argument("hessian_apply: grid mismatch");
  const int n = rho.n();
  if (n < 4) throw std::invalid_argument("hessian_apply: grid too small");

  Signal rx = derivative(rho, 1);
  const int m = n - 2;
  std::vector<double> coef(m), rhs(m);
  for (int j = 0; j < m; ++j) {
    coef[j] = p.kappa + rx[j + 1] * rx[j + 1];
    rhs[j] = rx[j + 1] * theta[j + 1];
  }
  BandedSystem sys = assemble_l_operator(rho.grid, p.epsilon, p.lambda, coef);
  std::vector<double> w = solve_banded_spd(sys, rhs);

  Signal out = theta;
  for (int j = 0; j < m; ++j) out[j + 1] -= rx[j + 1] * w[j];
  return out;
}

namespace {

struct EigenDecomposition {
  std::vector<double> eigenvalues;   // ascending
  std::vector<double> eigenvectors;  // row-major, row k = vector k? (LAPACK layout below)
  int m = 0;
};

EigenDecomposition decompose_operator(const Grid1D& g, double kappa, double lambda,
                                      double epsilon, double M, bool vectors) {
  if (g.n > 2000)
    throw std::invalid_argument("sobolev_norm: dense eigendecomposition limited to n <= 2000");
  const int m = g.n - 2;
  std::vector<double> coef(m, kappa + M * M);
  BandedSystem banded = assemble_l_operator(g, epsilon, lambda, coef);

  EigenDecomposition dec;
  dec.m = m;
  dec.eigenvalues.resize(m);
  dec.eigenvectors.assign(static_cast<size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = i; j <= std::min(m - 1, i + 2); ++j) {
      dec.eigenvectors[static_cast<size_t>(i) * m + j] = banded.get(i, j);
      dec.eigenvectors[static_cast<size_t>(j) * m + i] = banded.get(i, j);
    }
  lapack_int info = LAPACKE_dsyev(LAPACK_ROW_MAJOR, vectors ? 'V' : 'N', 'U', m,
                                  dec.eigenvectors.data(), m, dec.eigenvalues.data());
  if (info != 0)
    throw std::runtime_error("sobolev_norm: eigendecomposition failed, info=" +
                             std::to_string(info));
  return dec;
}

}  // namespace

std::vector<double> operator_spectrum(const Grid1D& grid, double kappa, double lambda,
                                      double epsilon, double M) {
  return decompose_operator(grid, kappa, lambda, epsilon, M, false).eigenvalues;
}

double sobolev_norm(const Signal& theta, double s_order, double kappa, double lambda,
                    double epsilon, double M) {
  static const double allowed[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  bool ok = false;
  for (double a : allowed) ok = ok || std::abs(s_order - a) < 1e-12;
  if (!ok) throw std::invalid_argument("sobolev_norm: s_order must be in {-1,-1/2,0,1/2,1}");

  const Grid1D& g = theta.grid;
  EigenDecomposition dec = decompose_operator(g, kappa, lambda, epsilon, M, true);
  const int m = dec.m;

  // coefficients in the orthonormal eigenbasis of the interior operator
  double acc = 0.0;
  for (int k = 0; k < m; ++k) {
    double y = 0.0;
    for (int j = 0; j < m; ++j)
      y += dec.eigenvectors[static_cast<size_t>(j) * m + k] * theta[j + 1];
    acc += std::pow(dec.eigenvalues[k], s_order) * y * y;
  }
  acc *= g.h;
  // endpoint nodes sit outside the hinged operator; weight them by the
  // zeroth-order multiplier so s_order = 0 reproduces the trapezoid L2 norm
  double c0 = std::pow(kappa + M * M, s_order);
  acc += 0.5 * g.h * c0 * (theta[0] * theta[0] + theta[g.n - 1] * theta[g.n - 1]);
  return std::sqrt(acc);
}

Signal shift_signal(const Signal& f, double s) {
  Signal g(f.grid);
  for (int i = 0; i < f.n(); ++i) {
    double x = f.grid.x(i) - s;
    if (x < f.grid.a || x > f.grid.b)
      g[i] = 0.0;
    else
      g[i] = interp_linear(f, x);
  }
  return g;
}

LandscapeCurve shift_landscape(const Signal& f, const std::vector<double>& shifts,
                               const HVParams& p, const MisfitKind& kind) {
  LandscapeCurve curve;
  curve.shifts = shifts;
  curve.misfit_kind = kind.tag;
  curve.values.reserve(shifts.size());

  std::optional<Field> warm;
  for (double s : shifts) {
    Signal gs = shift_signal(f, s);
    double J = 0.0;
    switch (kind.tag) {
      case MisfitKindTag::L2: {
        Signal d(f.grid);
        for (int i = 0; i < f.n(); ++i) d[i] = gs[i] - f[i];
        J = 0.5 * l2_norm_trapezoid(d) * l2_norm_trapezoid(d);
        break;
      }
      case MisfitKindTag::W2:
        J = w2_squared_signal(gs, f, kind.normalization, kind.shift_constant);
        break;
      case MisfitKindTag::HV: {
        HVResult res = hv_distance_warm(gs, f, p, warm);
        warm = res.path.v;
        J = res.distance_sq;
        break;
      }
    }
    curve.values.push_back(J);
  }
  return curve;
}

namespace {

double curve_range(const std::vector<double>& v) {
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

}  // namespace

int count_local_minima(const LandscapeCurve& curve, double plateau_rel_tol) {
  const auto& v = curve.values;
  const int n = static_cast<int>(v.size());
  if (n < 2) return 0;
  double tau = plateau_rel_tol * curve_range(v);
  if (tau == 0.0) return 0;

  // hysteresis walk: an extremum counts once the curve moves away by >= tau
  int count = 0;
  double run_min = v[0], run_max = v[0];
  int state = 0;  // 0: undecided, 1: rising (last extremum was a min), -1: falling
  for (int i = 1; i < n; ++i) {
    run_min = std::min(run_min, v[i]);
    run_max = std::max(run_max, v[i]);
    if (state >= 0 && v[i] <= run_max - tau) {  // confirmed descent
      state = -1;
      run_min = v[i];
    } else if (state <= 0 && v[i] >= run_min + tau) {  // confirmed ascent
      ++count;  // the run minimum was a strict local minimum
      state = 1;
      run_max = v[i];
    }
  }
  return count;
}

int plateau_onset_index(const LandscapeCurve& curve, double plateau_rel_tol) {
  const auto& v = curve.values;
  const int n = static_cast<int>(v.size());
  if (n == 0) return -1;
  double tau = plateau_rel_tol * curve_range(v);
  double lo = v[n - 1], hi = v[n - 1];
  int onset = n - 1;
  for (int i = n - 1; i >= 0; --i) {
    lo = std::min(lo, v[i]);
    hi = std::max(hi, v[i]);
    if (hi - lo > tau) break;
    onset = i;
  }
  return onset;
}

}  // namespace hvfwi
