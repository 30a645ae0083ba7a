#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hvfwi/misfit.hpp"
#include "hvfwi/wave.hpp"

namespace hvfwi {

struct OptimizerConfig {
  int memory = 10;
  int max_iters = 30;
  double m_min = 1.0 / (6000.0 * 6000.0);  // squared-slowness box, from speed bounds
  double m_max = 1.0 / (300.0 * 300.0);
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
};

struct FwiConfig {
  std::string model_file;                     // true model: RMSE reference + smoothing source
  std::vector<std::string> obs_data_files;    // one FWIR file per shot
  std::string initial_model_file;             // empty: smooth the true model instead
  double initial_smooth_sigma_cells = 5.477;  // sqrt(30)
  Acquisition acquisition;
  MisfitKind misfit;
  OptimizerConfig optimizer;
  std::string output_dir = ".";
  int snapshot_every = 0;  // 0 disables model snapshots
  VelocityModel geometry;  // grid shape for the inverted array; filled by fwi_run
};

struct InversionReport {
  std::vector<double> objective_history;
  std::vector<double> gradient_norm_history;
  std::vector<double> model_rmse_history;  // empty when no reference model
  VelocityModel final_model;
  double wall_time_seconds = 0.0;
  std::string status;
};

/// Objective returning value and gradient at x.
using ObjectiveFn = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;
/// Observer invoked after every accepted iterate (including the initial one).
using IterObserver = std::function<void(int iter, const std::vector<double>& x, double J,
                                        double grad_norm)>;

struct LbfgsResult {
  std::vector<double> x;
  std::vector<double> objective_history;
  std::vector<double> gradient_norm_history;
  std::string status;
};

/// Two-loop-recursion L-BFGS with box projection and a strong-Wolfe
/// backtracking/extension search (cap 20). One steepest-descent restart on
/// line-search failure, then termination.
LbfgsResult lbfgs_minimize(const ObjectiveFn& fn, std::vector<double> x0,
                           const OptimizerConfig& cfg,
                           const IterObserver& observer = nullptr);

/// Misfit and adjoint-state gradient over all shots at squared slowness m.
/// Gradient cells within two nodes of any source or receiver are zeroed.
std::pair<double, std::vector<double>> objective_and_gradient(
    const std::vector<double>& m, const std::vector<ShotRecord>& obs, const FwiConfig& cfg);

/// Separable Gaussian blur with reflective edges; sigma in grid cells.
VelocityModel smooth_model_gaussian(const VelocityModel& model, double sigma_cells);

/// Full inversion: build the initial model, minimize, write snapshots,
/// report.csv and the final model under cfg.output_dir.
InversionReport fwi_run(const FwiConfig& cfg);

/// Velocity-domain RMS difference between two models of equal shape.
double model_rmse(const VelocityModel& a, const VelocityModel& b);

}  // namespace hvfwi
