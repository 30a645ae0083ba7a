#pragma once

#include <vector>

#include "hvfwi/hv_metric.hpp"
#include "hvfwi/misfit_kind.hpp"

namespace hvfwi {

struct HessianAnalysisParams {
  HVParams p;
  double m_lower = 0.0;
  double M_upper = 0.0;

  void validate() const;
};

/// Misfit values J(s) sampled along a family of shifted signals.
struct LandscapeCurve {
  std::vector<double> shifts;
  std::vector<double> values;
  MisfitKindTag misfit_kind = MisfitKindTag::L2;
};

/// Frechet derivative of rho0 -> d_HV^2(rho0, rho1): minus the vertical
/// source of the minimizing geodesic at pseudo-time zero.
Signal hv_gradient(const Signal& rho0, const Signal& rho1, const HVParams& p);

/// Hessian operator at rho0 = rho1 = rho applied to a perturbation:
/// theta - rho_x L^{-1}(rho_x theta), L = eps D4 - lambda D2 + (kappa + rho_x^2) I
/// with hinged boundary rows.
Signal hessian_apply(const Signal& rho, const Signal& theta, const HVParams& p);

/// || (eps D4 - lambda D2 + (kappa + M^2) I)^{s/2} theta ||_L2 with fractional
/// powers from a dense symmetric eigendecomposition of the interior operator.
/// s_order in {-1, -1/2, 0, 1/2, 1}; grids above 2000 nodes are rejected.
double sobolev_norm(const Signal& theta, double s_order, double kappa, double lambda,
                    double epsilon, double M);

/// Eigenvalues (ascending) of the discretized operator used by sobolev_norm.
std::vector<double> operator_spectrum(const Grid1D& grid, double kappa, double lambda,
                                      double epsilon, double M);

/// Misfit landscape J(s) over shifted copies g_s(x) = f(x - s).
/// HV runs warm-start from the previous shift's geodesic velocity.
LandscapeCurve shift_landscape(const Signal& f, const std::vector<double>& shifts,
                               const HVParams& p, const MisfitKind& kind);

/// Shifted copy of a signal with zero padding outside the support.
Signal shift_signal(const Signal& f, double s);

/// Strict local minima of a sampled curve; variation below
/// `plateau_rel_tol` relative to the curve range is treated as flat.
int count_local_minima(const LandscapeCurve& curve, double plateau_rel_tol = 1e-3);

/// Index past which the curve stays within `plateau_rel_tol` relative
/// variation of its final value; -1 when no plateau exists.
int plateau_onset_index(const LandscapeCurve& curve, double plateau_rel_tol = 1e-3);

}  // namespace hvfwi
