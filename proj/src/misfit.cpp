#include "hvfwi/misfit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "hvfwi/parallel.hpp"

namespace hvfwi {

namespace {

void require_matching(const ShotRecord& sim, const ShotRecord& obs) {
  if (sim.n_receivers != obs.n_receivers || sim.nt != obs.nt)
    throw std::invalid_argument("misfit: record shapes differ");
}

Signal trace_signal(const ShotRecord& rec, int r) {
  Grid1D g(rec.nt, 0.0, rec.dt * (rec.nt - 1));
  std::vector<double> v(rec.traces.begin() + static_cast<size_t>(r) * rec.nt,
                        rec.traces.begin() + static_cast<size_t>(r + 1) * rec.nt);
  return Signal(g, std::move(v));
}

}  // namespace

MisfitEval l2_misfit(const ShotRecord& sim, const ShotRecord& obs) {
  require_matching(sim, obs);
  MisfitEval ev;
  ev.adjoint_source.resize(sim.traces.size());
  const int nt = sim.nt;
  for (int r = 0; r < sim.n_receivers; ++r) {
    double acc = 0.0;
    for (int it = 0; it < nt; ++it) {
      double d = sim.at(r, it) - obs.at(r, it);
      ev.adjoint_source[static_cast<size_t>(r) * nt + it] = d;
      acc += (it == 0 || it == nt - 1) ? 0.5 * d * d : d * d;
    }
    ev.value += 0.5 * acc * sim.dt;
  }
  return ev;
}

std::pair<Signal, NormalizationRecord> normalize_to_probability(const Signal& trace,
                                                                W2Normalization method,
                                                                double shift_c) {
  NormalizationRecord rec;
  rec.method = method;
  rec.shift = shift_c;
  Signal p(trace.grid);
  if (method == W2Normalization::SquareNormalize) {
    Signal sq(trace.grid);
    for (int i = 0; i < trace.n(); ++i) sq[i] = trace[i] * trace[i];
    rec.denom = integrate(sq);
    if (!(rec.denom > 0.0))
      throw std::invalid_argument("normalize_to_probability: zero-energy trace");
    for (int i = 0; i < trace.n(); ++i) p[i] = sq[i] / rec.denom;
  } else {
    double mn = *std::min_element(trace.values.begin(), trace.values.end());
    if (!(mn + shift_c > 0.0))
      throw std::invalid_argument(
          "normalize_to_probability: shifted trace is not strictly positive");
    Signal sh(trace.grid);
    for (int i = 0; i < trace.n(); ++i) sh[i] = trace[i] + shift_c;
    rec.denom = integrate(sh);
    for (int i = 0; i < trace.n(); ++i) p[i] = sh[i] / rec.denom;
  }
  return {std::move(p), rec};
}

namespace {

constexpr int kQuantilePoints = 1024;

// nodal CDF by cumulative trapezoid, rescaled to end exactly at 1
std::vector<double> cdf_nodes(const Signal& p) {
  const int n = p.n();
  std::vector<double> cdf(n, 0.0);
  for (int i = 1; i < n; ++i)
    cdf[i] = cdf[i - 1] + 0.5 * (p[i - 1] + p[i]) * p.grid.h;
  double total = cdf[n - 1];
  for (auto& v : cdf) v /= total;
  cdf[n - 1] = 1.0;
  return cdf;
}

// piecewise-linear inverse of a nodal CDF at ascending query points
std::vector<double> invert_cdf(const Grid1D& g, const std::vector<double>& cdf,
                               const std::vector<double>& qs) {
  std::vector<double> out(qs.size());
  int seg = 0;
  const int n = static_cast<int>(cdf.size());
  for (size_t j = 0; j < qs.size(); ++j) {
    double s = qs[j];
    while (seg + 2 < n && cdf[seg + 1] <= s) ++seg;
    double lo = cdf[seg], hi = cdf[seg + 1];
    double w = hi > lo ? (s - lo) / (hi - lo) : 0.0;
    w = std::clamp(w, 0.0, 1.0);
    out[j] = g.x(seg) * (1.0 - w) + g.x(seg + 1) * w;
  }
  return out;
}

double w2_of_densities(const Signal& p, const Signal& q) {
  std::vector<double> qs(kQuantilePoints);
  for (int j = 0; j < kQuantilePoints; ++j) qs[j] = (j + 0.5) / kQuantilePoints;
  std::vector<double> pinv = invert_cdf(p.grid, cdf_nodes(p), qs);
  std::vector<double> qinv = invert_cdf(q.grid, cdf_nodes(q), qs);
  double acc = 0.0;
  for (int j = 0; j < kQuantilePoints; ++j) {
    double d = pinv[j] - qinv[j];
    acc += d * d;
  }
  return acc / kQuantilePoints;
}

// dW2^2/dp(t) = -2 int_t^T (tau - Qinv(P(tau))) dtau
Signal w2_density_adjoint(const Signal& p, const Signal& q) {
  const int n = p.n();
  std::vector<double> pcdf = cdf_nodes(p);
  std::vector<double> qcdf = cdf_nodes(q);
  std::vector<double> qinv_at_p = invert_cdf(q.grid, qcdf, pcdf);
  Signal integrand(p.grid);
  for (int i = 0; i < n; ++i) integrand[i] = p.grid.x(i) - qinv_at_p[i];
  Signal K(p.grid);
  K[n - 1] = 0.0;
  for (int i = n - 2; i >= 0; --i)
    K[i] = K[i + 1] + 0.5 * (integrand[i] + integrand[i + 1]) * p.grid.h;
  for (int i = 0; i < n; ++i) K[i] *= -2.0;
  return K;
}

}  // namespace

double w2_squared_signal(const Signal& a, const Signal& b, W2Normalization method,
                         double shift_c) {
  auto [p, pr] = normalize_to_probability(a, method, shift_c);
  auto [q, qr] = normalize_to_probability(b, method, shift_c);
  return w2_of_densities(p, q);
}

std::pair<double, Signal> w2_misfit_trace(const Signal& sim_trace, const Signal& obs_trace,
                                          W2Normalization method, double shift_c) {
  auto [p, prec] = normalize_to_probability(sim_trace, method, shift_c);
  auto [q, qrec] = normalize_to_probability(obs_trace, method, shift_c);
  double value = w2_of_densities(p, q);

  Signal K = w2_density_adjoint(p, q);
  Signal kp(p.grid);
  for (int i = 0; i < p.n(); ++i) kp[i] = K[i] * p[i];
  double mean_k = integrate(kp);

  Signal adj(sim_trace.grid);
  if (method == W2Normalization::ShiftNormalize) {
    for (int i = 0; i < adj.n(); ++i) adj[i] = (K[i] - mean_k) / prec.denom;
  } else {
    for (int i = 0; i < adj.n(); ++i)
      adj[i] = 2.0 * sim_trace[i] / prec.denom * (K[i] - mean_k);
  }
  return {value, std::move(adj)};
}

std::pair<double, Signal> hv_misfit_trace(const Signal& sim_trace, const Signal& obs_trace,
                                          const HVParams& p, const HVRescale& rescale,
                                          bool* fell_back) {
  if (sim_trace.n() != obs_trace.n())
    throw std::invalid_argument("hv_misfit_trace: trace lengths differ");
  if (!(rescale.amplitude > 0.0))
    throw std::invalid_argument("hv_misfit_trace: amplitude scale must be > 0");
  if (fell_back) *fell_back = false;

  const int n = sim_trace.n();
  const double a = rescale.amplitude;
  const double T = rescale.duration;
  Grid1D unit(n, 0.0, 1.0);
  Signal rho0(unit), rho1(unit);
  for (int i = 0; i < n; ++i) {
    rho0[i] = sim_trace[i] / a;
    rho1[i] = obs_trace[i] / a;
  }

  try {
    HVResult res = hv_distance(rho0, rho1, p);
    Signal adj(sim_trace.grid);
    // one chain-rule constant: d/df = -z(.,0) * 1/(a*T)
    const double jac = 1.0 / (a * T);
    for (int i = 0; i < n; ++i) adj[i] = -res.path.z.at(i, 0) * jac;
    return {res.distance_sq, std::move(adj)};
  } catch (const std::runtime_error& e) {
    if (fell_back) *fell_back = true;
    std::cerr << "[hvfwi] warning: HV trace solve failed (" << e.what()
              << "); falling back to L2 for this trace\n";
    // L2 on the same rescaled unit-square signals keeps values comparable
    Signal d(unit);
    for (int i = 0; i < n; ++i) d[i] = rho0[i] - rho1[i];
    double nrm = l2_norm_trapezoid(d);
    Signal adj(sim_trace.grid);
    const double jac = 1.0 / (a * T);
    for (int i = 0; i < n; ++i) adj[i] = d[i] * jac;
    return {0.5 * nrm * nrm, std::move(adj)};
  }
}

MisfitEval evaluate_misfit(const MisfitKind& kind, const ShotRecord& sim,
                           const ShotRecord& obs) {
  require_matching(sim, obs);
  if (kind.tag == MisfitKindTag::L2) return l2_misfit(sim, obs);

  MisfitEval ev;
  ev.adjoint_source.assign(sim.traces.size(), 0.0);
  const int nr = sim.n_receivers;
  const int nt = sim.nt;
  std::vector<double> values(nr, 0.0);
  std::atomic<int> fallbacks{0};

  HVRescale rescale;
  if (kind.tag == MisfitKindTag::HV) {
    rescale.amplitude = kind.amp_rescale * std::max(max_abs(obs.traces), 1e-300);
    rescale.duration = kind.time_rescale ? obs.dt * (obs.nt - 1) : 1.0;
  }

  parallel_for(nr, [&](int r) {
    Signal st = trace_signal(sim, r);
    Signal ot = trace_signal(obs, r);
    double v = 0.0;
    Signal adj;
    if (kind.tag == MisfitKindTag::W2) {
      std::tie(v, adj) = w2_misfit_trace(st, ot, kind.normalization, kind.shift_constant);
    } else {
      bool fb = false;
      std::tie(v, adj) = hv_misfit_trace(st, ot, kind.hv, rescale, &fb);
      if (fb) fallbacks.fetch_add(1);
    }
    values[r] = v;
    std::copy(adj.values.begin(), adj.values.end(),
              ev.adjoint_source.begin() + static_cast<size_t>(r) * nt);
  });

  for (int r = 0; r < nr; ++r) ev.value += values[r];  // fixed reduction order
  ev.hv_fallbacks = fallbacks.load();
  return ev;
}

}  // namespace hvfwi
