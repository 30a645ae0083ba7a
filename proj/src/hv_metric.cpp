#include "hvfwi/hv_metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hvfwi {

void HVParams::validate() const {
  if (!(kappa > 0.0) || !(epsilon > 0.0))
    throw std::invalid_argument("HVParams: kappa and epsilon must be > 0");
  if (lambda < 0.0) throw std::invalid_argument("HVParams: lambda must be >= 0");
  if (n_time < 2) throw std::invalid_argument("HVParams: n_time must be >= 2");
  if (!(tol > 0.0)) throw std::invalid_argument("HVParams: tol must be > 0");
  if (max_outer_iters < 0) throw std::invalid_argument("HVParams: max_outer_iters must be >= 0");
}

CharacteristicCrossingError::CharacteristicCrossingError(double x_, double t_)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "characteristic crossing at x=" << x_ << ", t=" << t_;
        return os.str();
      }()),
      x(x_),
      t(t_) {}

std::vector<Peak> detect_peaks(const Signal& s) {
  const int n = s.n();
  std::vector<double> a(n);
  for (int i = 0; i < n; ++i) a[i] = std::abs(s[i]);

  std::vector<Peak> peaks;
  for (int i = 1; i < n - 1; ++i) {
    if (!(a[i] > a[i - 1] && a[i] >= a[i + 1])) continue;
    // prominence: drop to the lowest saddle before a higher point (or edge)
    double left_min = a[i];
    for (int j = i - 1; j >= 0; --j) {
      if (a[j] > a[i]) break;
      left_min = std::min(left_min, a[j]);
    }
    double right_min = a[i];
    for (int j = i + 1; j < n; ++j) {
      if (a[j] > a[i]) break;
      right_min = std::min(right_min, a[j]);
    }
    Peak pk;
    pk.index = i;
    pk.position = s.grid.x(i);
    pk.height = a[i];
    pk.prominence = a[i] - std::max(left_min, right_min);
    if (pk.prominence > 0.0) peaks.push_back(pk);
  }
  std::sort(peaks.begin(), peaks.end(),
            [](const Peak& l, const Peak& r) { return l.prominence > r.prominence; });
  return peaks;
}

double action_value(const GeodesicPath& path, const HVParams& p) {
  const auto& g = path.f.grid;
  if (!(path.v.grid == g) || !(path.z.grid == g))
    throw std::invalid_argument("action_value: path fields on different grids");
  const int nt = g.time.n;
  Signal per_slice(g.time);
  for (int k = 0; k < nt; ++k) {
    Signal v = path.v.slice_signal(k);
    Signal vx = derivative(v, 1);
    Signal vxx = derivative(v, 2);
    Signal integrand(g.space);
    for (int i = 0; i < g.space.n; ++i) {
      double zz = path.z.at(i, k);
      integrand[i] = p.kappa * v[i] * v[i] + p.lambda * vx[i] * vx[i] +
                     p.epsilon * vxx[i] * vxx[i] + zz * zz;
    }
    per_slice[k] = integrate(integrand);
  }
  return 0.5 * integrate(per_slice);
}

namespace {

// Piecewise-linear sampling of a time-major field, linear in both x and t.
double sample_field(const Field& fld, double x, double t) {
  const auto& gt = fld.grid.time;
  double u = (t - gt.a) / gt.h;
  int k = std::clamp(static_cast<int>(u), 0, gt.n - 2);
  double w = std::clamp(u - k, 0.0, 1.0);
  double lo = interp_linear(fld.grid.space, fld.slice(k), x);
  double hi = interp_linear(fld.grid.space, fld.slice(k + 1), x);
  return lo * (1.0 - w) + hi * w;
}

struct CharState {
  double x;    // position X(t)
  double lnj;  // log of the flow Jacobian J(t)
  double iacc; // integral of 1/J up to t
};

// Trajectories of every spatial node under dX/dt = v, dJ/dt = v_x J.
struct Characteristics {
  std::vector<std::vector<double>> x;    // [slice][node]
  std::vector<std::vector<double>> jac;  // [slice][node]
  std::vector<std::vector<double>> inv_j_int;  // [slice][node]
};

Characteristics trace_characteristics(const Field& v, const Field& vx, int substeps) {
  const Grid1D& gx = v.grid.space;
  const Grid1D& gt = v.grid.time;
  const int nx = gx.n;
  const int nt = gt.n;
  const double dt_slice = gt.h;
  const double sub_dt = dt_slice / substeps;

  Characteristics ch;
  ch.x.assign(nt, std::vector<double>(nx));
  ch.jac.assign(nt, std::vector<double>(nx));
  ch.inv_j_int.assign(nt, std::vector<double>(nx));

  for (int i = 0; i < nx; ++i) {
    CharState st{gx.x(i), 0.0, 0.0};
    ch.x[0][i] = st.x;
    ch.jac[0][i] = 1.0;
    ch.inv_j_int[0][i] = 0.0;
    for (int k = 0; k < nt - 1; ++k) {
      double t0 = gt.x(k);
      for (int s = 0; s < substeps; ++s) {
        double t = t0 + s * sub_dt;
        auto rhs = [&](const CharState& y, double tau) {
          CharState d;
          d.x = sample_field(v, y.x, tau);
          d.lnj = sample_field(vx, y.x, tau);
          d.iacc = std::exp(-y.lnj);
          return d;
        };
        auto add = [](const CharState& y, const CharState& d, double a) {
          return CharState{y.x + a * d.x, y.lnj + a * d.lnj, y.iacc + a * d.iacc};
        };
        CharState k1 = rhs(st, t);
        CharState k2 = rhs(add(st, k1, 0.5 * sub_dt), t + 0.5 * sub_dt);
        CharState k3 = rhs(add(st, k2, 0.5 * sub_dt), t + 0.5 * sub_dt);
        CharState k4 = rhs(add(st, k3, sub_dt), t + sub_dt);
        st.x += sub_dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
        st.lnj += sub_dt / 6.0 * (k1.lnj + 2.0 * k2.lnj + 2.0 * k3.lnj + k4.lnj);
        st.iacc += sub_dt / 6.0 * (k1.iacc + 2.0 * k2.iacc + 2.0 * k3.iacc + k4.iacc);
      }
      ch.x[k + 1][i] = st.x;
      ch.jac[k + 1][i] = std::exp(st.lnj);
      ch.inv_j_int[k + 1][i] = st.iacc;
    }
  }

  // fold-over detection: transported nodes must stay ordered
  for (int k = 0; k < nt; ++k)
    for (int i = 0; i + 1 < nx; ++i)
      if (!(ch.x[k][i + 1] > ch.x[k][i]))
        throw CharacteristicCrossingError(gx.x(i), gt.x(k));
  return ch;
}

// Resample scattered monotone samples (xs, ys) onto the uniform grid.
void resample_to_grid(const Grid1D& g, const std::vector<double>& xs,
                      const std::vector<double>& ys, std::span<double> out) {
  const int n = g.n;
  int seg = 0;
  for (int j = 0; j < n; ++j) {
    double xq = g.x(j);
    if (xq <= xs.front()) {
      out[j] = ys.front();
      continue;
    }
    if (xq >= xs.back()) {
      out[j] = ys.back();
      continue;
    }
    while (seg + 2 < static_cast<int>(xs.size()) && xs[seg + 1] < xq) ++seg;
    double w = (xq - xs[seg]) / (xs[seg + 1] - xs[seg]);
    out[j] = ys[seg] * (1.0 - w) + ys[seg + 1] * w;
  }
}

int default_substeps(int n_time) {
  return std::max(4, (64 + n_time - 2) / std::max(1, n_time - 1));
}

}  // namespace

std::pair<Field, Field> solve_fz_subproblem(const Field& v, const Signal& rho0,
                                            const Signal& rho1, int substeps) {
  const auto& g = v.grid;
  if (!(rho0.grid == g.space) || !(rho1.grid == g.space))
    throw std::invalid_argument("solve_fz_subproblem: signal/velocity grid mismatch");
  const int nx = g.space.n;
  const int nt = g.time.n;
  for (int k = 0; k < nt; ++k)
    if (std::abs(v.at(0, k)) > 1e-12 || std::abs(v.at(nx - 1, k)) > 1e-12)
      throw std::invalid_argument("solve_fz_subproblem: v must vanish on the boundary");
  if (substeps <= 0) substeps = default_substeps(nt);

  Field vx(g);
  for (int k = 0; k < nt; ++k) {
    Signal d = derivative(v.slice_signal(k), 1);
    std::copy(d.values.begin(), d.values.end(), vx.slice(k).begin());
  }

  Characteristics ch = trace_characteristics(v, vx, substeps);

  // z(x,0) from the endpoint mismatch and the accumulated 1/J integral
  std::vector<double> z0(nx);
  for (int i = 0; i < nx; ++i) {
    double target = interp_linear(rho1, ch.x[nt - 1][i]);
    z0[i] = (target - rho0[i]) / ch.inv_j_int[nt - 1][i];
  }

  Field f(g), z(g);
  std::vector<double> fs(nx), zs(nx);
  for (int k = 0; k < nt; ++k) {
    for (int i = 0; i < nx; ++i) {
      zs[i] = z0[i] / ch.jac[k][i];
      fs[i] = rho0[i] + z0[i] * ch.inv_j_int[k][i];
    }
    resample_to_grid(g.space, ch.x[k], zs, z.slice(k));
    resample_to_grid(g.space, ch.x[k], fs, f.slice(k));
  }
  // endpoint enforcement
  std::copy(rho0.values.begin(), rho0.values.end(), f.slice(0).begin());
  std::copy(rho1.values.begin(), rho1.values.end(), f.slice(nt - 1).begin());
  return {std::move(f), std::move(z)};
}

Field solve_v_subproblem(const Field& f, const HVParams& p) {
  const auto& g = f.grid;
  const int nx = g.space.n;
  const int nt = g.time.n;
  const double h = g.space.h;
  const double dt = g.time.h;
  const double h2 = h * h, h4 = h2 * h2;
  if (nx < 4) throw std::invalid_argument("solve_v_subproblem: need at least 4 spatial nodes");

  Field v(g);
  const int m = nx - 2;  // interior unknowns
  std::vector<double> ft(nx), rhs(m);
  for (int k = 0; k < nt; ++k) {
    // pseudo-time derivative of f at this slice
    if (nt == 2) {
      for (int i = 0; i < nx; ++i) ft[i] = (f.at(i, 1) - f.at(i, 0)) / dt;
    } else if (k == 0) {
      for (int i = 0; i < nx; ++i)
        ft[i] = (-3.0 * f.at(i, 0) + 4.0 * f.at(i, 1) - f.at(i, 2)) / (2.0 * dt);
    } else if (k == nt - 1) {
      for (int i = 0; i < nx; ++i)
        ft[i] = (3.0 * f.at(i, k) - 4.0 * f.at(i, k - 1) + f.at(i, k - 2)) / (2.0 * dt);
    } else {
      for (int i = 0; i < nx; ++i) ft[i] = (f.at(i, k + 1) - f.at(i, k - 1)) / (2.0 * dt);
    }
    Signal fx = derivative(f.slice_signal(k), 1);

    BandedSystem sys(m, 2);
    for (int j = 0; j < m; ++j) {
      int i = j + 1;
      double diag = 6.0;
      if (j == 0 || j == m - 1) diag = 5.0;  // hinged ghost folds back
      sys.at(j, j) = p.epsilon * diag / h4 + p.lambda * 2.0 / h2 + p.kappa + fx[i] * fx[i];
      if (j + 1 < m) sys.at(j, j + 1) = -4.0 * p.epsilon / h4 - p.lambda / h2;
      if (j + 2 < m) sys.at(j, j + 2) = p.epsilon / h4;
      rhs[j] = -ft[i] * fx[i];
    }
    std::vector<double> sol = solve_banded_spd(sys, rhs);
    auto row = v.slice(k);
    row[0] = 0.0;
    row[nx - 1] = 0.0;
    for (int j = 0; j < m; ++j) row[j + 1] = sol[j];
  }
  return v;
}

Field init_velocity(const Signal& rho0, const Signal& rho1, const InitStrategy& strategy,
                    int n_time) {
  SpaceTimeGrid g(rho0.grid, Grid1D(std::max(2, n_time), 0.0, 1.0));
  Field v(g);
  if (strategy.kind == InitStrategy::Kind::Zero || strategy.max_peaks == 0) return v;

  auto peaks0 = detect_peaks(rho0);
  auto peaks1 = detect_peaks(rho1);
  int k = std::min({strategy.max_peaks, static_cast<int>(peaks0.size()),
                    static_cast<int>(peaks1.size())});
  if (k == 0) return v;

  // pair by prominence rank, then order knots along x
  std::vector<std::pair<double, double>> knots;  // (x0, displacement)
  for (int j = 0; j < k; ++j)
    knots.emplace_back(peaks0[j].position, peaks1[j].position - peaks0[j].position);
  std::sort(knots.begin(), knots.end());

  // keep the map x -> x + u(x) monotone; drop knots that fold it
  std::vector<std::pair<double, double>> kept;
  double last_target = 0.0;
  for (auto& [x0, d] : knots) {
    double target = x0 + d;
    if (x0 <= 0.0 || x0 >= 1.0) continue;
    if (target <= last_target || target >= 1.0) continue;
    kept.emplace_back(x0, d);
    last_target = target;
  }

  std::vector<double> xs{rho0.grid.a}, us{0.0};
  for (auto& [x0, d] : kept) {
    xs.push_back(x0);
    us.push_back(d);
  }
  xs.push_back(rho0.grid.b);
  us.push_back(0.0);

  Grid1D gx = rho0.grid;
  for (int i = 0; i < gx.n; ++i) {
    double x = gx.x(i);
    int seg = 0;
    while (seg + 2 < static_cast<int>(xs.size()) && xs[seg + 1] < x) ++seg;
    double w = (x - xs[seg]) / (xs[seg + 1] - xs[seg]);
    double u = us[seg] * (1.0 - w) + us[seg + 1] * w;
    for (int kk = 0; kk < g.time.n; ++kk) v.at(i, kk) = u;
  }
  for (int kk = 0; kk < g.time.n; ++kk) {
    v.at(0, kk) = 0.0;
    v.at(gx.n - 1, kk) = 0.0;
  }
  return v;
}

namespace {

struct CandidateRun {
  bool ok = false;
  HVResult result;
};

// Retry the characteristic solve with a halved velocity on fold-over.
std::pair<Field, Field> solve_fz_damped(Field& v, const Signal& rho0, const Signal& rho1,
                                        int substeps) {
  for (int attempt = 0;; ++attempt) {
    try {
      return solve_fz_subproblem(v, rho0, rho1, substeps);
    } catch (const CharacteristicCrossingError&) {
      if (attempt >= 8) throw;
      for (auto& val : v.values) val *= 0.5;
    }
  }
}

CandidateRun run_candidate(const Signal& rho0, const Signal& rho1, const HVParams& p,
                           Field v0) {
  CandidateRun run;
  Field v = std::move(v0);
  Field f, z;
  try {
    std::tie(f, z) = solve_fz_damped(v, rho0, rho1, p.char_substeps);
  } catch (const CharacteristicCrossingError&) {
    return run;
  }

  HVResult res;
  res.action_history.push_back(action_value({f, v, z}, p));
  for (int iter = 0; iter < p.max_outer_iters; ++iter) {
    Field v_new = solve_v_subproblem(f, p);
    Field f_new, z_new;
    try {
      std::tie(f_new, z_new) = solve_fz_damped(v_new, rho0, rho1, p.char_substeps);
    } catch (const CharacteristicCrossingError&) {
      res.converged = false;
      break;
    }
    double a_prev = res.action_history.back();
    double a_new = action_value({f_new, v_new, z_new}, p);
    if (a_new > a_prev) {  // stale descent at discretization level: keep previous iterate
      res.converged = true;
      break;
    }
    f = std::move(f_new);
    v = std::move(v_new);
    z = std::move(z_new);
    res.action_history.push_back(a_new);
    if (a_prev - a_new < p.tol * std::max(a_prev, std::numeric_limits<double>::min())) {
      res.converged = true;
      break;
    }
  }
  res.distance_sq = res.action_history.back();
  res.path = GeodesicPath{std::move(f), std::move(v), std::move(z)};
  run.ok = true;
  run.result = std::move(res);
  return run;
}

}  // namespace

HVResult hv_distance_warm(const Signal& rho0, const Signal& rho1, const HVParams& p,
                          const std::optional<Field>& warm_v) {
  p.validate();
  if (!(rho0.grid == rho1.grid))
    throw std::invalid_argument("hv_distance: signals on different grids");

  // identical inputs: trivial geodesic
  double diff = 0.0;
  for (int i = 0; i < rho0.n(); ++i) diff = std::max(diff, std::abs(rho0[i] - rho1[i]));
  SpaceTimeGrid g(rho0.grid, Grid1D(p.n_time, 0.0, 1.0));
  if (diff < 1e-14) {
    HVResult res;
    res.distance_sq = 0.0;
    res.converged = true;
    res.action_history = {0.0};
    res.path.f = Field(g);
    res.path.v = Field(g);
    res.path.z = Field(g);
    for (int k = 0; k < p.n_time; ++k)
      std::copy(rho0.values.begin(), rho0.values.end(), res.path.f.slice(k).begin());
    return res;
  }

  std::vector<Field> candidates;
  candidates.push_back(Field(g));  // zero start is always admissible
  if (p.init.kind == InitStrategy::Kind::PeakMatch) {
    for (int k = 1; k <= p.init.max_peaks; ++k) {
      Field cand = init_velocity(rho0, rho1, InitStrategy::peak_match(k), p.n_time);
      if (cand.values != candidates.back().values) candidates.push_back(std::move(cand));
    }
  }
  if (warm_v) candidates.push_back(*warm_v);

  std::optional<HVResult> best;
  for (auto& cand : candidates) {
    CandidateRun run = run_candidate(rho0, rho1, p, std::move(cand));
    if (!run.ok) continue;
    if (!best || run.result.distance_sq < best->distance_sq) best = std::move(run.result);
  }
  if (!best)
    throw std::runtime_error(
        "hv_distance: characteristic crossing in every initialization; "
        "increase kappa or n_time");
  return *std::move(best);
}

HVResult hv_distance(const Signal& rho0, const Signal& rho1, const HVParams& p) {
  return hv_distance_warm(rho0, rho1, p, std::nullopt);
}

}  // namespace hvfwi
