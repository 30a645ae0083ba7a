#pragma once

#include <utility>
#include <vector>

#include "hvfwi/core.hpp"

namespace hvfwi {

/// 2D gridded wave speed c(x,z) in m/s; c[ix*nz + iz], z fastest.
struct VelocityModel {
  int nx = 0, nz = 0;
  double dx = 0.0, dz = 0.0;
  std::vector<double> c;

  VelocityModel() = default;
  VelocityModel(int nx_, int nz_, double dx_, double dz_, double c0 = 0.0);
  double& at(int ix, int iz) { return c[static_cast<size_t>(ix) * nz + iz]; }
  double at(int ix, int iz) const { return c[static_cast<size_t>(ix) * nz + iz]; }
  double max_speed() const;
  void validate() const;
};

struct Acquisition {
  std::vector<std::pair<double, double>> sources;    // (x, z) meters
  std::vector<std::pair<double, double>> receivers;  // (x, z) meters
  std::vector<double> wavelet;                       // shared source wavelet, nt samples
  double dt = 0.0;
  int nt = 0;
  int sponge_width = 30;
  double sponge_strength = 0.004;
  bool free_surface_top = false;
};

/// Receiver-major trace block: traces[r*nt + it].
struct ShotRecord {
  int n_receivers = 0;
  int nt = 0;
  double dt = 0.0;
  std::vector<double> traces;

  ShotRecord() = default;
  ShotRecord(int nr, int nt_, double dt_)
      : n_receivers(nr), nt(nt_), dt(dt_), traces(static_cast<size_t>(nr) * nt_, 0.0) {}
  double& at(int r, int it) { return traces[static_cast<size_t>(r) * nt + it]; }
  double at(int r, int it) const { return traces[static_cast<size_t>(r) * nt + it]; }
};

/// Model-shaped snapshots of a propagating field, every `decimation` steps.
struct Wavefield {
  int nx = 0, nz = 0;
  int n_snaps = 0;
  int decimation = 1;
  double dt = 0.0;
  std::vector<double> snaps;  // snaps[k*nx*nz 	+ ix*nz + iz]

  double at(int k, int ix, int iz) const {
    return snaps[(static_cast<size_t>(k) * nx + ix) * nz + iz];
  }
};

/// Ricker wavelet w(t) = (1 - 2 pi^2 f^2 (t-t0)^2) exp(-pi^2 f^2 (t-t0)^2).
/// Requires t0 >= 1.5/peak_freq so the pulse is fully contained.
std::vector<double> ricker(double peak_freq, double t0, double dt, int nt);

/// CFL bound for the 5-point leapfrog scheme: 0.9 * min(dx,dz) / (sqrt(2) c_max).
double cfl_limit(const VelocityModel& model);

/// Leapfrog acoustic propagation of one shot; returns the receiver record
/// and model-shaped wavefield snapshots.
std::pair<ShotRecord, Wavefield> simulate_forward(const VelocityModel& model,
                                                  const Acquisition& acq, int shot,
                                                  int decimation = 1);

/// Time-reversed propagation forced by per-receiver traces. Snapshot k holds
/// the adjoint state paired with the forward second difference centered at
/// step k, so image_gradient can zip the two fields index by index.
Wavefield simulate_adjoint(const VelocityModel& model, const Acquisition& acq,
                           const ShotRecord& adjoint_sources, int decimation = 1);

/// delta J / delta m = -sum_t (d^2 u/dt^2)(x,t) w(x,t) dt on the model grid.
std::vector<double> image_gradient(const Wavefield& u, const Wavefield& w, double dt);

/// Relative adjointness defect |<Fa,b> - <a,F*b>| / (|Fa| |b|) for random a, b.
double dot_product_test(const VelocityModel& model, const Acquisition& acq,
                        unsigned seed = 20240901);

}  // namespace hvfwi
