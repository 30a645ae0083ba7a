#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>
#include <random>

#include "hvfwi/hv_metric.hpp"

using namespace hvfwi;

namespace {

Grid1D unit_grid(int n) { return Grid1D(n, 0.0, 1.0); }

Signal sample(const Grid1D& g, const std::function<double(double)>& fn) {
  Signal s(g);
  for (int i = 0; i < g.n; ++i) s[i] = fn(g.x(i));
  return s;
}

double gauss(double x, double c, double w) {
  return std::exp(-(x - c) * (x - c) / (2.0 * w * w));
}

Signal random_smooth(const Grid1D& g, std::mt19937& rng) {
  std::uniform_real_distribution<double> C(0.25, 0.75), W(0.05, 0.12), A(-1.0, 1.0);
  double c1 = C(rng), c2 = C(rng), w1 = W(rng), w2 = W(rng), a1 = A(rng), a2 = A(rng);
  return sample(g, [=](double x) { return a1 * gauss(x, c1, w1) + a2 * gauss(x, c2, w2); });
}

HVParams default_params(int n_space, int n_time = 16) {
  HVParams p;
  p.kappa = 1.0;
  p.lambda = 1.0;
  p.epsilon = 1e-4;
  p.n_space = n_space;
  p.n_time = n_time;
  p.max_outer_iters = 15;
  p.tol = 1e-8;
  return p;
}

double l2_sq(const Signal& a, const Signal& b) {
  Signal d(a.grid);
  for (int i = 0; i < a.n(); ++i) d[i] = a[i] - b[i];
  double n = l2_norm_trapezoid(d);
  return n * n;
}

// Ricker pulse mapped onto the unit interval.
double ricker_shape(double x, double center, double width) {
  double u = (x - center) / width;
  return (1.0 - 2.0 * u * u) * std::exp(-u * u);
}

}  // namespace

TEST_CASE("action of a stationary path is zero") {
  Grid1D g = unit_grid(101);
  SpaceTimeGrid st(g, Grid1D(8, 0.0, 1.0));
  GeodesicPath path{Field(st), Field(st), Field(st)};
  for (int k = 0; k < 8; ++k)
    for (int i = 0; i < g.n; ++i) path.f.at(i, k) = gauss(g.x(i), 0.5, 0.1);
  CHECK(action_value(path, default_params(101)) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("action of a constant vertical source is c^2/2") {
  Grid1D g = unit_grid(101);
  SpaceTimeGrid st(g, Grid1D(9, 0.0, 1.0));
  GeodesicPath path{Field(st), Field(st), Field(st)};
  const double c = 0.7;
  for (int k = 0; k < 9; ++k)
    for (int i = 0; i < g.n; ++i) path.z.at(i, k) = c;
  CHECK(action_value(path, default_params(101)) == doctest::Approx(0.5 * c * c).epsilon(1e-13));
}

TEST_CASE("action matches an analytic separable integrand at fine resolution") {
  // v = a sin(pi x)(1 + b t), z = c cos(pi x)(1 - t); half-period trig
  // integrals give the closed form below.
  const double a = 0.3, b = 0.5, c = 0.8;
  HVParams p = default_params(1601);
  p.kappa = 2.0;
  p.lambda = 0.7;
  p.epsilon = 0.05;
  Grid1D g = unit_grid(1601);
  SpaceTimeGrid st(g, Grid1D(801, 0.0, 1.0));
  GeodesicPath path{Field(st), Field(st), Field(st)};
  for (int k = 0; k < st.time.n; ++k) {
    double t = st.time.x(k);
    for (int i = 0; i < g.n; ++i) {
      double x = g.x(i);
      path.v.at(i, k) = a * std::sin(M_PI * x) * (1.0 + b * t);
      path.z.at(i, k) = c * std::cos(M_PI * x) * (1.0 - t);
    }
  }
  double tquad = 1.0 + b + b * b / 3.0;
  double pi2 = M_PI * M_PI;
  double exact = 0.5 * ((p.kappa + p.lambda * pi2 + p.epsilon * pi2 * pi2) * a * a / 2.0 * tquad +
                        c * c / 2.0 / 3.0);
  double got = action_value(path, p);
  CHECK(std::abs(got - exact) / exact < 1e-6);
}

TEST_CASE("fixed-v subproblem with v = 0 gives the linear path") {
  Grid1D g = unit_grid(201);
  SpaceTimeGrid st(g, Grid1D(12, 0.0, 1.0));
  Signal rho0 = sample(g, [](double x) { return gauss(x, 0.4, 0.08); });
  Signal rho1 = sample(g, [](double x) { return 0.5 * gauss(x, 0.6, 0.1); });
  Field v(st);
  auto [f, z] = solve_fz_subproblem(v, rho0, rho1);
  for (int k = 0; k < st.time.n; ++k) {
    double t = st.time.x(k);
    for (int i = 0; i < g.n; i += 16) {
      CHECK(z.at(i, k) == doctest::Approx(rho1[i] - rho0[i]).epsilon(1e-12));
      CHECK(f.at(i, k) == doctest::Approx(rho0[i] + t * (rho1[i] - rho0[i])).epsilon(1e-12));
    }
  }
}

TEST_CASE("characteristic integral identity holds for a smooth stationary velocity") {
  // Oracle: re-integrate the flow of the analytic v with an independent fine
  // RK4 and check z(x,0) * int(1/J) against the endpoint mismatch it bridges.
  const int n = 8001;
  Grid1D g = unit_grid(n);
  SpaceTimeGrid st(g, Grid1D(16, 0.0, 1.0));
  auto vfun = [](double x) { return 0.05 * std::sin(M_PI * x); };
  auto vxfun = [](double x) { return 0.05 * M_PI * std::cos(M_PI * x); };
  Signal rho0 = sample(g, [](double x) { return gauss(x, 0.5, 0.12); });
  Signal rho1 = rho0;  // equal endpoints exercise the nontrivial z != 0 case
  Field v(st);
  for (int k = 0; k < st.time.n; ++k)
    for (int i = 0; i < g.n; ++i) v.at(i, k) = vfun(g.x(i));

  auto [f, z] = solve_fz_subproblem(v, rho0, rho1);

  const int steps = 2048;
  const double dt = 1.0 / steps;
  double worst = 0.0;
  for (int i = 0; i < n; i += 40) {
    double x = g.x(i), lnj = 0.0, iacc = 0.0;
    for (int s = 0; s < steps; ++s) {
      auto rhs = [&](double xx, double lj) {
        return std::array<double, 3>{vfun(xx), vxfun(xx), std::exp(-lj)};
      };
      auto k1 = rhs(x, lnj);
      auto k2 = rhs(x + 0.5 * dt * k1[0], lnj + 0.5 * dt * k1[1]);
      auto k3 = rhs(x + 0.5 * dt * k2[0], lnj + 0.5 * dt * k2[1]);
      auto k4 = rhs(x + dt * k3[0], lnj + dt * k3[1]);
      x += dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
      lnj += dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
      iacc += dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]);
    }
    double mismatch = interp_linear(rho1, x) - rho0[i];
    double residual = z.at(i, 0) * iacc - mismatch;
    worst = std::max(worst, std::abs(residual));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("fixed-v subproblem constraint residuals shrink under refinement") {
  auto residual = [](int n_space, int n_time) {
    Grid1D g = unit_grid(n_space);
    SpaceTimeGrid st(g, Grid1D(n_time, 0.0, 1.0));
    Signal rho0 = sample(g, [](double x) { return gauss(x, 0.45, 0.1); });
    Signal rho1 = sample(g, [](double x) { return 0.8 * gauss(x, 0.55, 0.12); });
    Field v(st);
    for (int k = 0; k < n_time; ++k)
      for (int i = 0; i < n_space; ++i) v.at(i, k) = 0.1 * std::sin(M_PI * g.x(i));
    auto [f, z] = solve_fz_subproblem(v, rho0, rho1);
    // discrete residual of f_t + f_x v - z = 0 away from the pseudo-time ends
    double worst = 0.0;
    double dt = st.time.h;
    for (int k = 1; k < n_time - 1; ++k) {
      Signal fx = derivative(f.slice_signal(k), 1);
      for (int i = 1; i < n_space - 1; ++i) {
        double ft = (f.at(i, k + 1) - f.at(i, k - 1)) / (2.0 * dt);
        worst = std::max(worst, std::abs(ft + fx[i] * v.at(i, k) - z.at(i, k)));
      }
    }
    return worst;
  };
  double coarse = residual(101, 9);
  double fine = residual(201, 17);
  CHECK(fine < coarse / 1.5);  // at least first-order decay
}

TEST_CASE("fixed-f subproblem: constant-in-time f gives zero velocity") {
  Grid1D g = unit_grid(151);
  SpaceTimeGrid st(g, Grid1D(10, 0.0, 1.0));
  Field f(st);
  for (int k = 0; k < 10; ++k)
    for (int i = 0; i < g.n; ++i) f.at(i, k) = gauss(g.x(i), 0.5, 0.1);
  Field v = solve_v_subproblem(f, default_params(151, 10));
  CHECK(max_abs(v.values) < 1e-12);
}

TEST_CASE("fixed-f subproblem recovers a manufactured solution at second order") {
  auto solve_err = [](int n) {
    HVParams p = default_params(n, 4);
    p.kappa = 1.0;
    p.lambda = 1.0;
    p.epsilon = 1.0;
    Grid1D g = unit_grid(n);
    SpaceTimeGrid st(g, Grid1D(4, 0.0, 1.0));
    double pi2 = M_PI * M_PI;
    // f = x + t b(x) makes f_x = 1 and f_t = b at the first slice
    double coef = p.epsilon * pi2 * pi2 + p.lambda * pi2 + p.kappa + 1.0;
    Field f(st);
    for (int k = 0; k < 4; ++k) {
      double t = st.time.x(k);
      for (int i = 0; i < n; ++i) {
        double x = g.x(i);
        f.at(i, k) = x + t * (-coef * std::sin(M_PI * x));
      }
    }
    Field v = solve_v_subproblem(f, p);
    double err = 0.0;
    for (int i = 0; i < n; ++i)
      err = std::max(err, std::abs(v.at(i, 0) - std::sin(M_PI * g.x(i))));
    return err;
  };
  double e1 = solve_err(101), e2 = solve_err(201);
  CHECK(e1 / e2 > 3.0);
  CHECK(e1 / e2 < 5.0);
}

TEST_CASE("fixed-f subproblem: huge kappa forces a tiny velocity") {
  HVParams p = default_params(151, 6);
  p.kappa = 1e10;
  Grid1D g = unit_grid(151);
  SpaceTimeGrid st(g, Grid1D(6, 0.0, 1.0));
  Field f(st);
  for (int k = 0; k < 6; ++k) {
    double t = st.time.x(k);
    for (int i = 0; i < g.n; ++i) f.at(i, k) = gauss(g.x(i), 0.5, 0.1) * (1.0 + t);
  }
  Field v = solve_v_subproblem(f, p);
  // rhs is bounded by max|f_t f_x|, so |v| <= |rhs|/kappa
  double rhs_bound = 0.0;
  Signal fx = derivative(f.slice_signal(0), 1);
  for (int i = 0; i < g.n; ++i)
    rhs_bound = std::max(rhs_bound, std::abs(gauss(g.x(i), 0.5, 0.1) * fx[i]));
  CHECK(max_abs(v.values) <= 2.0 * rhs_bound / p.kappa);
}

TEST_CASE("peak detection ranks by prominence") {
  Grid1D g = unit_grid(401);
  Signal s = sample(g, [](double x) {
    return gauss(x, 0.3, 0.03) + 0.4 * gauss(x, 0.7, 0.03);
  });
  auto peaks = detect_peaks(s);
  REQUIRE(peaks.size() >= 2);
  CHECK(peaks[0].position == doctest::Approx(0.3).epsilon(0.02));
  CHECK(peaks[1].position == doctest::Approx(0.7).epsilon(0.02));
  CHECK(peaks[0].prominence > peaks[1].prominence);
}

TEST_CASE("init_velocity: zero strategy and identical signals give zero fields") {
  Grid1D g = unit_grid(201);
  Signal rho = sample(g, [](double x) { return gauss(x, 0.5, 0.08); });
  Field vz = init_velocity(rho, rho, InitStrategy::zero(), 8);
  CHECK(max_abs(vz.values) == 0.0);
  Field vp = init_velocity(rho, rho, InitStrategy::peak_match(3), 8);
  CHECK(max_abs(vp.values) < 1e-12);
}

TEST_CASE("init_velocity matches a single shifted bump") {
  Grid1D g = unit_grid(401);
  const double s = 0.15;
  Signal rho0 = sample(g, [](double x) { return gauss(x, 0.4, 0.05); });
  Signal rho1 = sample(g, [=](double x) { return gauss(x, 0.4 + s, 0.05); });
  Field v = init_velocity(rho0, rho1, InitStrategy::peak_match(1), 8);
  // displacement s at the bump, decaying linearly to zero at the ends
  int peak_idx = static_cast<int>(std::lround(0.4 / g.h));
  CHECK(v.at(peak_idx, 0) == doctest::Approx(s).epsilon(0.05));
  CHECK(v.at(0, 0) == 0.0);
  CHECK(v.at(g.n - 1, 0) == 0.0);
  int mid = peak_idx / 2;
  CHECK(v.at(mid, 0) == doctest::Approx(s * g.x(mid) / 0.4).epsilon(0.05));
}

TEST_CASE("hv_distance of identical signals is zero with a stationary path") {
  Grid1D g = unit_grid(201);
  Signal rho = sample(g, [](double x) { return gauss(x, 0.5, 0.1); });
  HVResult res = hv_distance(rho, rho, default_params(201));
  CHECK(res.distance_sq == 0.0);
  CHECK(res.converged);
  CHECK(max_abs(res.path.v.values) == 0.0);
  CHECK(max_abs(res.path.z.values) == 0.0);
  for (int i = 0; i < g.n; ++i) CHECK(res.path.f.at(i, 8) == rho[i]);
}

TEST_CASE("hv_distance between constants is c^2/2") {
  Grid1D g = unit_grid(101);
  Signal zero(g);
  Signal c(g);
  for (int i = 0; i < g.n; ++i) c[i] = 1.0;
  HVResult res = hv_distance(zero, c, default_params(101, 8));
  CHECK(res.distance_sq == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("large kappa and lambda reduce the HV distance to the L2 distance") {
  Grid1D g = unit_grid(401);
  Signal f = sample(g, [](double x) { return ricker_shape(x, 0.45, 0.06); });
  Signal h = sample(g, [](double x) { return ricker_shape(x, 0.55, 0.06); });
  HVParams p = default_params(401);
  p.kappa = 1e6;
  p.lambda = 1e6;
  p.epsilon = 1.0;
  HVResult res = hv_distance(f, h, p);
  double ratio = res.distance_sq / (0.5 * l2_sq(f, h));
  CHECK(ratio >= 0.99);
  CHECK(ratio <= 1.0 + 1e-9);
}

TEST_CASE("hv_distance invariants on random smooth pairs") {
  std::mt19937 rng(2024);
  Grid1D g = unit_grid(201);
  for (int trial = 0; trial < 8; ++trial) {
    Signal rho0 = random_smooth(g, rng);
    Signal rho1 = random_smooth(g, rng);
    HVParams p = default_params(201, 12);
    p.kappa = 0.5;
    p.lambda = 0.1;
    p.epsilon = 1e-5;
    p.init = InitStrategy::peak_match(2);
    HVResult res = hv_distance(rho0, rho1, p);

    CHECK(res.distance_sq >= 0.0);
    double upper = 0.5 * l2_sq(rho0, rho1) + p.tol * res.action_history.front();
    CHECK(res.distance_sq <= upper + 1e-12);
    for (size_t i = 1; i < res.action_history.size(); ++i)
      CHECK(res.action_history[i] <= res.action_history[i - 1] + 1e-12);
    CHECK(res.distance_sq == doctest::Approx(res.action_history.back()));
  }
}

TEST_CASE("hv_distance is symmetric up to discretization") {
  std::mt19937 rng(99);
  Grid1D g = unit_grid(301);
  HVParams p = default_params(301, 16);
  p.kappa = 1.0;
  p.lambda = 0.5;
  p.epsilon = 1e-4;
  for (int trial = 0; trial < 3; ++trial) {
    Signal rho0 = random_smooth(g, rng);
    Signal rho1 = random_smooth(g, rng);
    double d01 = hv_distance(rho0, rho1, p).distance_sq;
    double d10 = hv_distance(rho1, rho0, p).distance_sq;
    if (d01 + d10 > 1e-12) CHECK(std::abs(d01 - d10) <= 0.01 * 0.5 * (d01 + d10));
  }
}

TEST_CASE("geodesic endpoints are enforced exactly at the nodes") {
  std::mt19937 rng(5);
  Grid1D g = unit_grid(201);
  Signal rho0 = random_smooth(g, rng);
  Signal rho1 = random_smooth(g, rng);
  HVParams p = default_params(201, 10);
  HVResult res = hv_distance(rho0, rho1, p);
  for (int i = 0; i < g.n; ++i) {
    CHECK(res.path.f.at(i, 0) == rho0[i]);
    CHECK(res.path.f.at(i, p.n_time - 1) == rho1[i]);
    CHECK(res.path.v.at(0, 0) == 0.0);
    CHECK(res.path.v.at(g.n - 1, 0) == 0.0);
  }
}

TEST_CASE("transport beats the vertical path for a shifted pulse with cheap transport") {
  Grid1D g = unit_grid(401);
  Signal f = sample(g, [](double x) { return ricker_shape(x, 0.45, 0.05); });
  Signal h = sample(g, [](double x) { return ricker_shape(x, 0.55, 0.05); });
  HVParams p = default_params(401, 16);
  p.kappa = 1e-5;
  p.lambda = 1e-5;
  p.epsilon = 1e-5;
  p.init = InitStrategy::peak_match(2);
  HVResult res = hv_distance(f, h, p);
  CHECK(res.distance_sq < 0.5 * 0.5 * l2_sq(f, h));
}
