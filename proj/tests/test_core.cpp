#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hvfwi/core.hpp"

using namespace hvfwi;

namespace {

Signal make_signal(int n, double a, double b, double (*fn)(double)) {
  Grid1D g(n, a, b);
  Signal s(g);
  for (int i = 0; i < n; ++i) s[i] = fn(g.x(i));
  return s;
}

}  // namespace

TEST_CASE("derivative of a constant is zero") {
  Signal s = make_signal(51, 0.0, 1.0, [](double) { return 3.7; });
  Signal d = derivative(s, 1);
  CHECK(max_abs(d.values) < 1e-12);  // cancellation noise scaled by 1/h
}

TEST_CASE("derivative order 1 is exact for linear signals including boundaries") {
  Signal s = make_signal(33, 0.0, 1.0, [](double x) { return x; });
  Signal d = derivative(s, 1);
  for (int i = 0; i < d.n(); ++i) CHECK(d[i] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("derivative order 2 converges at second order on sin(pi x)") {
  auto run = [](int n) {
    Signal s = make_signal(n, 0.0, 1.0, [](double x) { return std::sin(M_PI * x); });
    Signal d = derivative(s, 2);
    double err = 0.0;
    for (int i = 0; i < n; ++i)
      err = std::max(err, std::abs(d[i] + M_PI * M_PI * std::sin(M_PI * s.grid.x(i))));
    return err;
  };
  double e201 = run(201), e401 = run(401);
  CHECK(e201 < 0.01);
  double ratio = e201 / e401;
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("derivative rejects undersized grids") {
  Grid1D g(3, 0.0, 1.0);
  Signal s(g);
  CHECK_THROWS_AS(derivative(s, 4), std::invalid_argument);
}

TEST_CASE("composed first derivatives agree with the second derivative in the interior") {
  Signal s = make_signal(401, 0.0, 1.0, [](double x) { return std::sin(2.0 * M_PI * x) + x * x; });
  Signal d11 = derivative(derivative(s, 1), 1);
  Signal d2 = derivative(s, 2);
  double h = s.grid.h;
  for (int i = 2; i < s.n() - 2; ++i)
    CHECK(std::abs(d11[i] - d2[i]) < 600.0 * h * h);
}

TEST_CASE("banded SPD solve: identity system returns the rhs") {
  BandedSystem sys(7, 2);
  for (int i = 0; i < 7; ++i) sys.at(i, i) = 1.0;
  std::vector<double> rhs = {1, -2, 3, -4, 5, -6, 7};
  auto x = solve_banded_spd(sys, rhs);
  for (int i = 0; i < 7; ++i) CHECK(x[i] == doctest::Approx(rhs[i]).epsilon(1e-14));
}

TEST_CASE("banded SPD solve: manufactured -laplace + identity") {
  const int n = 101;
  Grid1D g(n, 0.0, 1.0);
  const int m = n - 2;
  const double h2 = g.h * g.h;
  BandedSystem sys(m, 1);
  for (int j = 0; j < m; ++j) {
    sys.at(j, j) = 2.0 / h2 + 1.0;
    if (j + 1 < m) sys.at(j, j + 1) = -1.0 / h2;
  }
  std::vector<double> rhs(m);
  for (int j = 0; j < m; ++j) {
    double x = g.x(j + 1);
    rhs[j] = (M_PI * M_PI + 1.0) * std::sin(M_PI * x);
  }
  auto u = solve_banded_spd(sys, rhs);
  double err = 0.0;
  for (int j = 0; j < m; ++j)
    err = std::max(err, std::abs(u[j] - std::sin(M_PI * g.x(j + 1))));
  CHECK(err < 5.0 * h2);
}

TEST_CASE("banded SPD solve: pentadiagonal apply-then-solve round trip") {
  const int n = 201;
  Grid1D g(n, 0.0, 1.0);
  const int m = n - 2;
  const double h2 = g.h * g.h, h4 = h2 * h2;
  BandedSystem sys(m, 2);
  for (int j = 0; j < m; ++j) {
    double diag = (j == 0 || j == m - 1) ? 5.0 : 6.0;
    sys.at(j, j) = diag / h4 + 2.0 / h2 + 1.0;
    if (j + 1 < m) sys.at(j, j + 1) = -4.0 / h4 - 1.0 / h2;
    if (j + 2 < m) sys.at(j, j + 2) = 1.0 / h4;
  }
  std::vector<double> v(m);
  for (int j = 0; j < m; ++j) v[j] = std::sin(M_PI * g.x(j + 1));
  auto rhs = sys.apply(v);
  auto back = solve_banded_spd(sys, rhs);
  double err = 0.0;
  for (int j = 0; j < m; ++j) err = std::max(err, std::abs(back[j] - v[j]));
  CHECK(err < 1e-10);
}

TEST_CASE("banded SPD solve reports the failing row for indefinite input") {
  BandedSystem sys(5, 1);
  for (int i = 0; i < 5; ++i) sys.at(i, i) = 1.0;
  sys.at(3, 3) = -2.0;
  std::vector<double> rhs(5, 1.0);
  try {
    solve_banded_spd(sys, rhs);
    FAIL("expected a non-SPD error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("solve after apply is identity on random SPD banded systems") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 3 + static_cast<int>(rng() % 498);
    int kd = 1 + static_cast<int>(rng() % 2);
    BandedSystem sys(n, kd);
    for (int i = 0; i < n; ++i) {
      for (int d = 1; d <= kd && i + d < n; ++d) sys.at(i, i + d) = U(rng);
      sys.at(i, i) = 2.0 * (kd + 1);  // diagonally dominant, hence SPD
    }
    std::vector<double> x(n);
    for (auto& v : x) v = U(rng);
    auto rhs = sys.apply(x);
    auto back = solve_banded_spd(sys, rhs);
    double err = 0.0;
    for (int i = 0; i < n; ++i) err = std::max(err, std::abs(back[i] - x[i]));
    CHECK(err < 1e-10);
  }
}

TEST_CASE("integrate: constant, analytic sine, antisymmetric") {
  Signal one = make_signal(11, 0.0, 1.0, [](double) { return 1.0; });
  CHECK(integrate(one) == doctest::Approx(1.0).epsilon(1e-15));

  Signal s = make_signal(1001, 0.0, 1.0, [](double x) { return std::sin(M_PI * x); });
  CHECK(std::abs(integrate(s) - 2.0 / M_PI) < 1e-5);

  Signal anti = make_signal(101, 0.0, 1.0, [](double x) { return std::sin(2.0 * M_PI * x); });
  CHECK(std::abs(integrate(anti)) < 1e-14);
}

TEST_CASE("integrate is exact for polynomials of degree <= 1") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    double a = U(rng), b = U(rng);
    Grid1D g(17, 0.0, 2.0);
    Signal s(g);
    for (int i = 0; i < g.n; ++i) s[i] = a * g.x(i) + b;
    double exact = 2.0 * a + 2.0 * b;
    CHECK(integrate(s) == doctest::Approx(exact).epsilon(1e-13));
  }
}

TEST_CASE("interp_linear: nodes exact, linear exact, clamping, sine accuracy") {
  Grid1D g(21, 0.0, 1.0);
  Signal lin(g);
  for (int i = 0; i < g.n; ++i) lin[i] = 2.0 * g.x(i) - 0.3;
  CHECK(interp_linear(lin, lin.grid.x(7)) == doctest::Approx(lin[7]).epsilon(1e-15));
  CHECK(interp_linear(lin, 0.123456) == doctest::Approx(2.0 * 0.123456 - 0.3).epsilon(1e-13));
  CHECK(interp_linear(lin, -5.0) == doctest::Approx(lin[0]));
  CHECK(interp_linear(lin, 7.0) == doctest::Approx(lin[20]));

  Signal s = make_signal(101, 0.0, 1.0, [](double x) { return std::sin(M_PI * x); });
  CHECK(std::abs(interp_linear(s, 0.505) - std::sin(0.505 * M_PI)) < 1e-3);
}
