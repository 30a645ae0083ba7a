#include "hvfwi/fwi.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numeric>
#include <stdexcept>

#include "hvfwi/io.hpp"
#include "hvfwi/parallel.hpp"

namespace hvfwi {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double inf_norm(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> clip_box(std::vector<double> x, double lo, double hi) {
  for (auto& v : x) v = std::clamp(v, lo, hi);
  return x;
}

}  // namespace

LbfgsResult lbfgs_minimize(const ObjectiveFn& fn, std::vector<double> x0,
                           const OptimizerConfig& cfg, const IterObserver& observer) {
  if (cfg.memory < 1) throw std::invalid_argument("lbfgs: memory must be >= 1");
  if (!(cfg.m_max > cfg.m_min)) throw std::invalid_argument("lbfgs: bad box bounds");

  LbfgsResult res;
  res.x = clip_box(std::move(x0), cfg.m_min, cfg.m_max);
  const size_t n = res.x.size();

  std::vector<double> g(n);
  double J = fn(res.x, g);
  res.objective_history.push_back(J);
  res.gradient_norm_history.push_back(inf_norm(g));
  if (observer) observer(0, res.x, J, inf_norm(g));

  std::deque<std::pair<std::vector<double>, std::vector<double>>> pairs;  // (s, y)
  bool restarted = false;
  res.status = "max_iters";

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    if (inf_norm(g) < 1e-12) {
      res.status = "gradient_converged";
      break;
    }
    // projected-gradient stationarity at active bounds
    {
      std::vector<double> pg = res.x;
      for (size_t i = 0; i < n; ++i) pg[i] = std::clamp(res.x[i] - g[i], cfg.m_min, cfg.m_max);
      double stat = 0.0;
      for (size_t i = 0; i < n; ++i) stat = std::max(stat, std::abs(pg[i] - res.x[i]));
      if (stat < 1e-12) {
        res.status = "stationary";
        break;
      }
    }

    // two-loop recursion
    std::vector<double> d = g;
    std::vector<double> alpha(pairs.size());
    for (int k = static_cast<int>(pairs.size()) - 1; k >= 0; --k) {
      const auto& [s, y] = pairs[k];
      double rho = 1.0 / dot(y, s);
      alpha[k] = rho * dot(s, d);
      for (size_t i = 0; i < n; ++i) d[i] -= alpha[k] * y[i];
    }
    if (!pairs.empty()) {
      const auto& [s, y] = pairs.back();
      double gamma = dot(s, y) / dot(y, y);
      for (auto& v : d) v *= gamma;
    }
    for (int k = 0; k < static_cast<int>(pairs.size()); ++k) {
      const auto& [s, y] = pairs[k];
      double rho = 1.0 / dot(y, s);
      double beta = rho * dot(y, d);
      for (size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * s[i];
    }
    for (auto& v : d) v = -v;
    if (dot(d, g) >= 0.0) {  // not a descent direction: fall back to steepest descent
      d = g;
      for (auto& v : d) v = -v;
    }

    // strong-Wolfe search with projection onto the box
    double alpha_step = 1.0;
    double dg0 = dot(d, g);
    std::vector<double> xt, gt(n), step(n);
    double Jt = 0.0;
    bool accepted = false;
    std::vector<double> best_x;
    std::vector<double> best_g;
    double best_J = 0.0;
    bool have_armijo = false;

    for (int ls = 0; ls < 20; ++ls) {
      xt = res.x;
      for (size_t i = 0; i < n; ++i)
        xt[i] = std::clamp(res.x[i] + alpha_step * d[i], cfg.m_min, cfg.m_max);
      for (size_t i = 0; i < n; ++i) step[i] = xt[i] - res.x[i];
      double step_dg = dot(step, g);
      if (inf_norm(step) == 0.0) break;  // projection annihilated the step
      Jt = fn(xt, gt);
      bool armijo = Jt <= J + cfg.wolfe_c1 * step_dg && step_dg < 0.0;
      if (armijo) {
        if (!have_armijo || Jt < best_J) {
          best_x = xt;
          best_g = gt;
          best_J = Jt;
          have_armijo = true;
        }
        double dgt = dot(d, gt);
        if (std::abs(dgt) <= cfg.wolfe_c2 * std::abs(dg0)) {
          accepted = true;
          break;
        }
        if (dgt < 0.0 && alpha_step < 64.0) {
          alpha_step *= 2.0;  // still descending: extend
          continue;
        }
        accepted = true;  // curvature unattainable inside the box; keep the best point
        break;
      }
      alpha_step *= 0.5;
    }
    if (!accepted && have_armijo) accepted = true;

    if (!accepted) {
      if (!restarted) {
        restarted = true;
        pairs.clear();  // retry from steepest descent once
        --iter;
        continue;
      }
      res.status = "line_search_failure";
      break;
    }

    std::vector<double> s(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      s[i] = best_x[i] - res.x[i];
      y[i] = best_g[i] - g[i];
    }
    double sy = dot(s, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s)) * std::sqrt(dot(y, y))) {
      pairs.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(pairs.size()) > cfg.memory) pairs.pop_front();
    }

    double J_prev = J;
    res.x = std::move(best_x);
    g = std::move(best_g);
    J = best_J;
    res.objective_history.push_back(J);
    res.gradient_norm_history.push_back(inf_norm(g));
    if (observer)
      observer(static_cast<int>(res.objective_history.size()) - 1, res.x, J, inf_norm(g));

    if (J_prev - J < 1e-10 * std::max(std::abs(J_prev), 1e-300)) {
      res.status = "objective_converged";
      break;
    }
  }
  if (res.status == "max_iters" &&
      static_cast<int>(res.objective_history.size()) <= cfg.max_iters)
    res.status = "max_iters";
  return res;
}

namespace {

// trapezoid endpoint weights turn the per-trace functional derivative into
// the exact discrete forcing for the recorded objective
ShotRecord forcing_from_adjoint_source(const MisfitEval& ev, const ShotRecord& sim) {
  ShotRecord b(sim.n_receivers, sim.nt, sim.dt);
  for (int r = 0; r < sim.n_receivers; ++r)
    for (int it = 0; it < sim.nt; ++it) {
      double tau = (it == 0 || it == sim.nt - 1) ? 0.5 : 1.0;
      b.at(r, it) = ev.adjoint_source[static_cast<size_t>(r) * sim.nt + it] * tau;
    }
  return b;
}

void mask_acquisition_collar(std::vector<double>& g, const VelocityModel& model,
                             const Acquisition& acq) {
  auto zero_around = [&](double px, double pz) {
    int cx = static_cast<int>(std::lround(px / model.dx));
    int cz = static_cast<int>(std::lround(pz / model.dz));
    for (int ix = std::max(0, cx - 2); ix <= std::min(model.nx - 1, cx + 2); ++ix)
      for (int iz = std::max(0, cz - 2); iz <= std::min(model.nz - 1, cz + 2); ++iz)
        g[static_cast<size_t>(ix) * model.nz + iz] = 0.0;
  };
  for (auto& [px, pz] : acq.sources) zero_around(px, pz);
  for (auto& [px, pz] : acq.receivers) zero_around(px, pz);
}

VelocityModel model_from_slowness_sq(const std::vector<double>& m, const VelocityModel& like) {
  VelocityModel out = like;
  for (size_t i = 0; i < m.size(); ++i) out.c[i] = 1.0 / std::sqrt(m[i]);
  return out;
}

}  // namespace

std::pair<double, std::vector<double>> objective_and_gradient(
    const std::vector<double>& m, const std::vector<ShotRecord>& obs, const FwiConfig& cfg) {
  const Acquisition& acq = cfg.acquisition;
  const int n_shots = static_cast<int>(acq.sources.size());
  if (static_cast<int>(obs.size()) != n_shots)
    throw std::invalid_argument("objective_and_gradient: one observed record per shot required");
  if (m.size() != static_cast<size_t>(cfg.geometry.nx) * cfg.geometry.nz)
    throw std::invalid_argument("objective_and_gradient: m does not match cfg.geometry");

  VelocityModel model = model_from_slowness_sq(m, cfg.geometry);

  std::vector<double> shot_J(n_shots, 0.0);
  std::vector<std::vector<double>> shot_g(n_shots);

  parallel_for(n_shots, [&](int s) {
    auto [rec, u] = simulate_forward(model, acq, s);
    MisfitEval ev = evaluate_misfit(cfg.misfit, rec, obs[s]);
    ShotRecord b = forcing_from_adjoint_source(ev, rec);
    Wavefield w = simulate_adjoint(model, acq, b);
    shot_J[s] = ev.value;
    shot_g[s] = image_gradient(u, w, acq.dt);
  });

  double J = 0.0;
  std::vector<double> g(m.size(), 0.0);
  for (int s = 0; s < n_shots; ++s) {  // fixed shot order
    J += shot_J[s];
    for (size_t i = 0; i < g.size(); ++i) g[i] += shot_g[s][i];
  }

  // chain rule from squared slowness to itself is identity; mask the collar
  mask_acquisition_collar(g, model, acq);
  return {J, std::move(g)};
}

VelocityModel smooth_model_gaussian(const VelocityModel& model, double sigma_cells) {
  if (!(sigma_cells > 0.0))
    throw std::invalid_argument("smooth_model_gaussian: sigma must be > 0");
  int radius = static_cast<int>(std::ceil(4.0 * sigma_cells));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * k * k / (sigma_cells * sigma_cells));
    sum += kernel[k + radius];
  }
  for (auto& v : kernel) v /= sum;

  auto reflect = [](int i, int nv) {
    while (i < 0 || i >= nv) {
      if (i < 0) i = -i - 1;
      if (i >= nv) i = 2 * nv - 1 - i;
    }
    return i;
  };

  VelocityModel tmp = model, out = model;
  for (int ix = 0; ix < model.nx; ++ix)
    for (int iz = 0; iz < model.nz; ++iz) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * model.at(reflect(ix + k, model.nx), iz);
      tmp.at(ix, iz) = acc;
    }
  for (int ix = 0; ix < model.nx; ++ix)
    for (int iz = 0; iz < model.nz; ++iz) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * tmp.at(ix, reflect(iz + k, model.nz));
      out.at(ix, iz) = acc;
    }
  return out;
}

double model_rmse(const VelocityModel& a, const VelocityModel& b) {
  if (a.nx != b.nx || a.nz != b.nz)
    throw std::invalid_argument("model_rmse: shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < a.c.size(); ++i) {
    double d = a.c[i] - b.c[i];
    acc += d * d;
  }
  return std::sqrt(acc / a.c.size());
}

InversionReport fwi_run(const FwiConfig& cfg_in) {
  auto t0 = std::chrono::steady_clock::now();

  FwiConfig cfg = cfg_in;
  VelocityModel true_model = read_model(cfg.model_file);
  cfg.geometry = true_model;
  VelocityModel initial = cfg.initial_model_file.empty()
                              ? smooth_model_gaussian(true_model, cfg.initial_smooth_sigma_cells)
                              : read_model(cfg.initial_model_file);
  if (initial.nx != true_model.nx || initial.nz != true_model.nz)
    throw std::invalid_argument("fwi_run: initial and true model shapes differ");

  std::vector<ShotRecord> obs;
  obs.reserve(cfg.obs_data_files.size());
  for (const auto& f : cfg.obs_data_files) obs.push_back(read_shot_record(f));

  std::vector<double> m0(initial.c.size());
  for (size_t i = 0; i < m0.size(); ++i) m0[i] = 1.0 / (initial.c[i] * initial.c[i]);

  InversionReport report;
  std::vector<double> seconds;
  ObjectiveFn fn = [&](const std::vector<double>& x, std::vector<double>& grad) {
    auto [J, g] = objective_and_gradient(x, obs, cfg);
    grad = std::move(g);
    return J;
  };
  IterObserver obs_fn = [&](int iter, const std::vector<double>& x, double, double) {
    VelocityModel cur = model_from_slowness_sq(x, true_model);
    report.model_rmse_history.push_back(model_rmse(cur, true_model));
    seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (cfg.snapshot_every > 0 && iter % cfg.snapshot_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "model_%04d.fwim", iter);
      write_model(cfg.output_dir + "/" + name, cur);
    }
  };

  LbfgsResult lb = lbfgs_minimize(fn, std::move(m0), cfg.optimizer, obs_fn);
  report.objective_history = std::move(lb.objective_history);
  report.gradient_norm_history = std::move(lb.gradient_norm_history);
  report.final_model = model_from_slowness_sq(lb.x, true_model);
  report.status = lb.status;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_model(cfg.output_dir + "/final_model.fwim", report.final_model);
  write_report_csv(cfg.output_dir + "/report.csv", report, seconds);
  return report;
}

}  // namespace hvfwi
