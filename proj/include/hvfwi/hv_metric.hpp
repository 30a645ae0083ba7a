#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "hvfwi/core.hpp"

namespace hvfwi {

/// Velocity initialization for the alternating geodesic solver.
struct InitStrategy {
  enum class Kind { Zero, PeakMatch };
  Kind kind = Kind::Zero;
  int max_peaks = 0;

  static InitStrategy zero() { return {Kind::Zero, 0}; }
  static InitStrategy peak_match(int max_peaks) { return {Kind::PeakMatch, max_peaks}; }
};

/// Hyperparameters of the HV action plus solver controls.
struct HVParams {
  double kappa = 1.0;
  double lambda = 1.0;
  double epsilon = 1.0;
  int n_space = 201;
  int n_time = 16;
  int max_outer_iters = 15;
  double tol = 1e-8;
  InitStrategy init = InitStrategy::zero();
  int char_substeps = 0;  // 0: pick from n_time

  void validate() const;
};

/// Discretized geodesic triple: path f, velocity v, vertical source z.
struct GeodesicPath {
  Field f;
  Field v;
  Field z;
};

struct HVResult {
  double distance_sq = 0.0;
  GeodesicPath path;
  std::vector<double> action_history;
  bool converged = false;
};

/// Thrown when a transported node overtakes its neighbor.
struct CharacteristicCrossingError : std::runtime_error {
  double x, t;
  CharacteristicCrossingError(double x_, double t_);
};

/// Peak of |signal| with its topographic prominence.
struct Peak {
  int index = 0;
  double position = 0.0;
  double height = 0.0;
  double prominence = 0.0;
};

/// Local maxima of |s| sorted by descending prominence.
std::vector<Peak> detect_peaks(const Signal& s);

/// Action (1/2)∬ kappa v^2 + lambda v_x^2 + epsilon v_xx^2 + z^2 dx dt
/// by trapezoidal quadrature in space and pseudo-time.
double action_value(const GeodesicPath& path, const HVParams& p);

/// Fixed-v sub-problem: optimal (f, z) by the method of characteristics.
/// Throws CharacteristicCrossingError when the flow of v folds over.
std::pair<Field, Field> solve_fz_subproblem(const Field& v, const Signal& rho0,
                                            const Signal& rho1, int substeps = 0);

/// Fixed-f sub-problem: per-slice fourth-order BVP
/// eps v_xxxx - lambda v_xx + (kappa + f_x^2) v = -f_t f_x, hinged ends.
Field solve_v_subproblem(const Field& f, const HVParams& p);

/// Initial velocity field: zero, or rank-paired peak displacements
/// interpolated to a time-independent field pinned at the endpoints.
Field init_velocity(const Signal& rho0, const Signal& rho1, const InitStrategy& strategy,
                    int n_time);

/// Squared HV distance and its minimizing geodesic via alternating
/// minimization over the initialization candidates in `p.init`.
HVResult hv_distance(const Signal& rho0, const Signal& rho1, const HVParams& p);

/// Same, with one extra caller-provided starting velocity (warm start).
HVResult hv_distance_warm(const Signal& rho0, const Signal& rho1, const HVParams& p,
                          const std::optional<Field>& warm_v);

}  // namespace hvfwi
