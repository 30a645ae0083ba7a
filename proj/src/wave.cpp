#include "hvfwi/wave.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace hvfwi {

VelocityModel::VelocityModel(int nx_, int nz_, double dx_, double dz_, double c0)
    : nx(nx_), nz(nz_), dx(dx_), dz(dz_), c(static_cast<size_t>(nx_) * nz_, c0) {}

double VelocityModel::max_speed() const {
  double m = 0.0;
  for (double v : c) m = std::max(m, v);
  return m;
}

void VelocityModel::validate() const {
  if (nx < 2 || nz < 2 || !(dx > 0.0) || !(dz > 0.0))
    throw std::invalid_argument("VelocityModel: bad dimensions");
  if (c.size() != static_cast<size_t>(nx) * nz)
    throw std::invalid_argument("VelocityModel: value count mismatch");
  for (double v : c)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("VelocityModel: speeds must be positive and finite");
}

std::vector<double> ricker(double peak_freq, double t0, double dt, int nt) {
  if (!(peak_freq > 0.0) || !(dt > 0.0) || nt < 1)
    throw std::invalid_argument("ricker: bad parameters");
  if (t0 < 1.5 / peak_freq)
    throw std::invalid_argument("ricker: t0 must be at least 1.5/peak_freq = " +
                                std::to_string(1.5 / peak_freq));
  std::vector<double> w(nt);
  double pf = M_PI * M_PI * peak_freq * peak_freq;
  for (int i = 0; i < nt; ++i) {
    double tau = i * dt - t0;
    w[i] = (1.0 - 2.0 * pf * tau * tau) * std::exp(-pf * tau * tau);
  }
  return w;
}

double cfl_limit(const VelocityModel& model) {
  return 0.9 * std::min(model.dx, model.dz) / (std::sqrt(2.0) * model.max_speed());
}

namespace {

struct PaddedSetup {
  int pad = 0;
  int top_pad = 0;
  int nxp = 0, nzp = 0;
  std::vector<double> inv_m;  // dt^2 / m = dt^2 c^2 on the padded grid
  std::vector<double> damp;   // per-cell taper applied to each new state
  std::vector<int> src_nodes, rcv_nodes;
  double inv_dxdz = 0.0;
  double dx2 = 0.0, dz2 = 0.0;
};

int snap_node(double pos, double d, int count, const char* what) {
  int i = static_cast<int>(std::lround(pos / d));
  if (i < 0 || i >= count)
    throw std::invalid_argument(std::string(what) + " position outside the grid");
  return i;
}

PaddedSetup build_setup(const VelocityModel& model, const Acquisition& acq) {
  model.validate();
  if (acq.nt < 1 || !(acq.dt > 0.0)) throw std::invalid_argument("Acquisition: bad dt/nt");
  double limit = cfl_limit(model);
  if (acq.dt > limit)
    throw std::invalid_argument("Acquisition: dt=" + std::to_string(acq.dt) +
                                " violates the CFL bound " + std::to_string(limit));

  PaddedSetup s;
  s.pad = std::max(0, acq.sponge_width);
  s.top_pad = acq.free_surface_top ? 0 : s.pad;
  s.nxp = model.nx + 2 * s.pad;
  s.nzp = model.nz + s.top_pad + s.pad;
  s.inv_dxdz = 1.0 / (model.dx * model.dz);
  s.dx2 = model.dx * model.dx;
  s.dz2 = model.dz * model.dz;

  // extend the model into the pad by edge replication
  s.inv_m.assign(static_cast<size_t>(s.nxp) * s.nzp, 0.0);
  for (int ix = 0; ix < s.nxp; ++ix) {
    int mx = std::clamp(ix - s.pad, 0, model.nx - 1);
    for (int iz = 0; iz < s.nzp; ++iz) {
      int mz = std::clamp(iz - s.top_pad, 0, model.nz - 1);
      double c = model.at(mx, mz);
      s.inv_m[static_cast<size_t>(ix) * s.nzp + iz] = acq.dt * acq.dt * c * c;
    }
  }

  // separable exponential taper, deepest at the outer edge
  auto axis_taper = [&](int i, int low_pad, int high_pad, int count) {
    double g = 1.0;
    if (i < low_pad) {
      int d = low_pad - i;
      g *= std::exp(-acq.sponge_strength * static_cast<double>(d) * d);
    }
    if (i >= count - high_pad) {
      int d = i - (count - high_pad) + 1;
      g *= std::exp(-acq.sponge_strength * static_cast<double>(d) * d);
    }
    return g;
  };
  s.damp.assign(static_cast<size_t>(s.nxp) * s.nzp, 1.0);
  for (int ix = 0; ix < s.nxp; ++ix)
    for (int iz = 0; iz < s.nzp; ++iz) {
      double g = axis_taper(ix, s.pad, s.pad, s.nxp) * axis_taper(iz, s.top_pad, s.pad, s.nzp);
      if (acq.free_surface_top && iz == 0) g = 0.0;  // pressure-release surface
      s.damp[static_cast<size_t>(ix) * s.nzp + iz] = g;
    }

  for (auto& [px, pz] : acq.sources) {
    int ix = snap_node(px, model.dx, model.nx, "source") + s.pad;
    int iz = snap_node(pz, model.dz, model.nz, "source") + s.top_pad;
    s.src_nodes.push_back(ix * s.nzp + iz);
  }
  for (auto& [px, pz] : acq.receivers) {
    int ix = snap_node(px, model.dx, model.nx, "receiver") + s.pad;
    int iz = snap_node(pz, model.dz, model.nz, "receiver") + s.top_pad;
    s.rcv_nodes.push_back(ix * s.nzp + iz);
  }
  return s;
}

// One damped leapfrog update: out = damp .* (2 cur - prev + dt^2/m (Lap cur)),
// with forcing already added into `out` as dt^2/m * q by the caller hooks.
void leapfrog_step(const PaddedSetup& s, const std::vector<double>& cur,
                   const std::vector<double>& prev, std::vector<double>& out) {
  const int nxp = s.nxp, nzp = s.nzp;
  for (int ix = 0; ix < nxp; ++ix) {
    const double* ucol = cur.data() + static_cast<size_t>(ix) * nzp;
    const double* left = ix > 0 ? ucol - nzp : nullptr;
    const double* right = ix + 1 < nxp ? ucol + nzp : nullptr;
    const double* pcol = prev.data() + static_cast<size_t>(ix) * nzp;
    const double* im = s.inv_m.data() + static_cast<size_t>(ix) * nzp;
    const double* g = s.damp.data() + static_cast<size_t>(ix) * nzp;
    double* ocol = out.data() + static_cast<size_t>(ix) * nzp;
    for (int iz = 0; iz < nzp; ++iz) {
      double lap = -2.0 * ucol[iz] * (1.0 / s.dx2 + 1.0 / s.dz2);
      if (left) lap += left[iz] / s.dx2;
      if (right) lap += right[iz] / s.dx2;
      if (iz > 0) lap += ucol[iz - 1] / s.dz2;
      if (iz + 1 < nzp) lap += ucol[iz + 1] / s.dz2;
      ocol[iz] = g[iz] * (2.0 * ucol[iz] - pcol[iz] + im[iz] * (lap + ocol[iz]));
    }
  }
}

void check_finite(const std::vector<double>& u, int step) {
  double probe = 0.0;
  for (size_t i = 0; i < u.size(); i += 97) probe += u[i];
  if (!std::isfinite(probe))
    throw std::runtime_error("wave propagation diverged (NaN) at step " + std::to_string(step));
}

void store_cropped(const PaddedSetup& s, const VelocityModel& model,
                   const std::vector<double>& u, Wavefield& wf) {
  size_t base = wf.snaps.size();
  wf.snaps.resize(base + static_cast<size_t>(model.nx) * model.nz);
  for (int ix = 0; ix < model.nx; ++ix) {
    const double* col = u.data() + static_cast<size_t>(ix + s.pad) * s.nzp + s.top_pad;
    std::copy(col, col + model.nz, wf.snaps.begin() + base + static_cast<size_t>(ix) * model.nz);
  }
  ++wf.n_snaps;
}

}  // namespace

std::pair<ShotRecord, Wavefield> simulate_forward(const VelocityModel& model,
                                                  const Acquisition& acq, int shot,
                                                  int decimation) {
  PaddedSetup s = build_setup(model, acq);
  if (shot < 0 || shot >= static_cast<int>(s.src_nodes.size()))
    throw std::invalid_argument("simulate_forward: shot index out of range");
  if (static_cast<int>(acq.wavelet.size()) != acq.nt)
    throw std::invalid_argument("simulate_forward: wavelet length must equal nt");
  if (decimation < 1) decimation = 1;

  const size_t cells = static_cast<size_t>(s.nxp) * s.nzp;
  std::vector<double> prev(cells, 0.0), cur(cells, 0.0), next(cells, 0.0);

  ShotRecord rec(static_cast<int>(s.rcv_nodes.size()), acq.nt, acq.dt);
  Wavefield wf;
  wf.nx = model.nx;
  wf.nz = model.nz;
  wf.decimation = decimation;
  wf.dt = acq.dt;
  wf.snaps.reserve(static_cast<size_t>((acq.nt + decimation - 1) / decimation) *
                   model.nx * model.nz);

  const int src = s.src_nodes[shot];
  for (int n = 0; n < acq.nt; ++n) {
    for (int r = 0; r < rec.n_receivers; ++r) rec.at(r, n) = cur[s.rcv_nodes[r]];
    if (n % decimation == 0) store_cropped(s, model, cur, wf);
    if (n + 1 >= acq.nt) break;
    std::fill(next.begin(), next.end(), 0.0);
    next[src] = acq.wavelet[n] * s.inv_dxdz;  // forcing q^n, scaled by dt^2/m inside the step
    leapfrog_step(s, cur, prev, next);
    std::swap(prev, cur);
    std::swap(cur, next);
    if (n % 50 == 0) check_finite(cur, n);
  }
  return {std::move(rec), std::move(wf)};
}

Wavefield simulate_adjoint(const VelocityModel& model, const Acquisition& acq,
                           const ShotRecord& adjoint_sources, int decimation) {
  PaddedSetup s = build_setup(model, acq);
  if (adjoint_sources.n_receivers != static_cast<int>(s.rcv_nodes.size()) ||
      adjoint_sources.nt != acq.nt)
    throw std::invalid_argument("simulate_adjoint: adjoint source shape mismatch");
  if (decimation < 1) decimation = 1;

  const size_t cells = static_cast<size_t>(s.nxp) * s.nzp;
  // states w^{j+1}, w^{j+2} of the reversed recursion
  std::vector<double> ahead(cells, 0.0), ahead2(cells, 0.0), wj(cells, 0.0);

  const int n_snaps = (acq.nt + decimation - 1) / decimation;
  Wavefield wf;
  wf.nx = model.nx;
  wf.nz = model.nz;
  wf.decimation = decimation;
  wf.dt = acq.dt;
  wf.n_snaps = n_snaps;
  wf.snaps.assign(static_cast<size_t>(n_snaps) * model.nx * model.nz, 0.0);

  auto store_at = [&](int n, const std::vector<double>& u) {
    size_t base = static_cast<size_t>(n / decimation) * model.nx * model.nz;
    for (int ix = 0; ix < model.nx; ++ix) {
      const double* col = u.data() + static_cast<size_t>(ix + s.pad) * s.nzp + s.top_pad;
      std::copy(col, col + model.nz, wf.snaps.begin() + base + static_cast<size_t>(ix) * model.nz);
    }
  };

  // snapshot n keeps w^{n+1}; w^{nt} = 0 fills the final slot
  if ((acq.nt - 1) % decimation == 0) store_at(acq.nt - 1, ahead);
  for (int j = acq.nt - 1; j >= 1; --j) {
    std::fill(wj.begin(), wj.end(), 0.0);
    for (int r = 0; r < adjoint_sources.n_receivers; ++r)
      wj[s.rcv_nodes[r]] += adjoint_sources.at(r, j);
    leapfrog_step(s, ahead, ahead2, wj);
    std::swap(ahead2, ahead);
    std::swap(ahead, wj);
    if ((j - 1) % decimation == 0) store_at(j - 1, ahead);
    if (j % 50 == 0) check_finite(ahead, j);
  }
  return wf;
}

std::vector<double> image_gradient(const Wavefield& u, const Wavefield& w, double dt) {
  if (u.nx != w.nx || u.nz != w.nz || u.n_snaps != w.n_snaps ||
      u.decimation != w.decimation)
    throw std::invalid_argument("image_gradient: misaligned wavefields");
  const int cells = u.nx * u.nz;
  const int nt = u.n_snaps;
  const double dk = dt * u.decimation;
  std::vector<double> g(cells, 0.0);

  // w snapshot n holds the adjoint state paired with the second difference
  // of u centered at step n (zero initial conditions supply u^{-1} = 0)
  for (int n = 0; n + 1 < nt; ++n) {
    const double* up = n > 0 ? u.snaps.data() + static_cast<size_t>(n - 1) * cells : nullptr;
    const double* uc = u.snaps.data() + static_cast<size_t>(n) * cells;
    const double* un = u.snaps.data() + static_cast<size_t>(n + 1) * cells;
    const double* wn = w.snaps.data() + static_cast<size_t>(n) * cells;
    for (int i = 0; i < cells; ++i) {
      double d2 = (un[i] - 2.0 * uc[i] + (up ? up[i] : 0.0)) / (dk * dk);
      g[i] -= d2 * wn[i] * dk;
    }
  }
  return g;
}

double dot_product_test(const VelocityModel& model, const Acquisition& acq, unsigned seed) {
  Acquisition a = acq;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  a.wavelet.resize(a.nt);
  for (auto& v : a.wavelet) v = dist(rng);
  ShotRecord b(static_cast<int>(a.receivers.size()), a.nt, a.dt);
  for (auto& v : b.traces) v = dist(rng);

  auto [rec, uf] = simulate_forward(model, a, 0);
  Wavefield wf = simulate_adjoint(model, a, b);

  double fwd = 0.0, rec_norm = 0.0, b_norm = 0.0;
  for (size_t i = 0; i < rec.traces.size(); ++i) {
    fwd += rec.traces[i] * b.traces[i];
    rec_norm += rec.traces[i] * rec.traces[i];
    b_norm += b.traces[i] * b.traces[i];
  }

  PaddedSetup s = build_setup(model, a);
  int src = s.src_nodes[0];
  int six = src / s.nzp - s.pad, siz = src % s.nzp - s.top_pad;
  double adj = 0.0;
  for (int n = 0; n < a.nt; ++n)
    adj += a.wavelet[n] * wf.at(n, six, siz) * s.inv_dxdz;

  return std::abs(fwd - adj) / std::max(std::sqrt(rec_norm) * std::sqrt(b_norm), 1e-300);
}

}  // namespace hvfwi
