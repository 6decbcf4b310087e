#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "akpz/hamiltonian.hpp"

using namespace akpz;

namespace {
constexpr double kPi = 3.14159265358979323846;

double dist(SlopeVector a, SlopeVector b) {
  return std::hypot(a.rho1 - b.rho1, a.rho2 - b.rho2);
}
}  // namespace

TEST_CASE("speed at reference slopes") {
  CHECK(speed({0.0, 0.0}) == 0.0);
  CHECK(speed({1e-13, 1e-13}) == 0.0);
  CHECK(speed({0.3, 0.0}) == 0.0);
  CHECK(std::abs(speed({1.0 / 3, 1.0 / 3}) - std::sqrt(3.0) / (2 * kPi)) < 1e-15);
  CHECK(std::abs(speed({0.25, 0.25}) - 1.0 / (2 * kPi)) < 1e-15);
  CHECK(std::abs(speed({1.0 / 3, 1.0 / 3}) - 0.27566444771089615) < 1e-14);
}

TEST_CASE("speed symmetry and positivity") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.02, 0.95);
  for (int k = 0; k < 200; ++k) {
    double a = u(rng), b = u(rng);
    if (a + b >= 0.98) continue;
    CHECK(speed({a, b}) == doctest::Approx(speed({b, a})).epsilon(1e-14));
    CHECK(speed({a, b}) > 0.0);
  }
}

TEST_CASE("speed agrees with the half-angle form") {
  // sin(pi r1) sin(pi r2) / (pi sin(pi(r1+r2))) equals
  // (cos(pi rv) - cos(pi rh)) / (2 pi sin(pi rh)) for rh = r1+r2, rv = r1-r2.
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.02, 0.95);
  for (int k = 0; k < 200; ++k) {
    double a = u(rng), b = u(rng);
    if (a + b >= 0.98) continue;
    double rh = a + b, rv = a - b;
    double alt = (std::cos(kPi * rv) - std::cos(kPi * rh)) / (2 * kPi * std::sin(kPi * rh));
    CHECK(speed({a, b}) == doctest::Approx(alt).epsilon(1e-13));
  }
}

TEST_CASE("speed rejects slopes outside the triangle") {
  CHECK_THROWS_AS(speed({0.6, 0.5}), config_error);
  CHECK_THROWS_AS(speed({0.5, 0.5}), config_error);
  CHECK_THROWS_AS(speed({-0.01, 0.3}), config_error);
  CHECK_THROWS_AS(speed({0.3, -0.01}), config_error);
}

TEST_CASE("gradient closed form matches finite differences") {
  SlopeVector g = speed_gradient({1.0 / 3, 1.0 / 3});
  CHECK(std::abs(g.rho1 - 1.0) < 1e-12);
  CHECK(std::abs(g.rho2 - 1.0) < 1e-12);

  double h = 1e-6;
  for (int i = 1; i < 20; ++i) {
    for (int j = 1; j < 20; ++j) {
      SlopeVector r{i / 21.0, j / 21.0};
      if (slope_triangle_margin(r) < 0.05) continue;
      SlopeVector grad = speed_gradient(r);
      double fd1 = (speed({r.rho1 + h, r.rho2}) - speed({r.rho1 - h, r.rho2})) / (2 * h);
      double fd2 = (speed({r.rho1, r.rho2 + h}) - speed({r.rho1, r.rho2 - h})) / (2 * h);
      CHECK(grad.rho1 == doctest::Approx(fd1).epsilon(1e-6));
      CHECK(grad.rho2 == doctest::Approx(fd2).epsilon(1e-6));
      CHECK(grad.rho1 > 0.0);
      CHECK(grad.rho2 > 0.0);
    }
  }
  CHECK_THROWS_AS(speed_gradient({0.0, 0.3}), config_error);
}

TEST_CASE("hessian determinant is negative on the interior") {
  for (int i = 1; i < 15; ++i) {
    for (int j = 1; j < 15; ++j) {
      SlopeVector r{i / 16.0, j / 16.0};
      if (slope_triangle_margin(r) < 0.02) continue;
      CHECK(hessian_det_sign(r) == -1);
    }
  }
  CHECK_THROWS_AS(hessian_det_sign({0.005, 0.5}), config_error);
}

TEST_CASE("projection onto the restricted triangle") {
  SlopeVector p = project_to_slope_set({2.0, 2.0}, 4);
  CHECK(p.rho1 == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(p.rho2 == doctest::Approx(0.375).epsilon(1e-12));
  p = project_to_slope_set({-1.0, 0.25}, 4);
  CHECK(p.rho1 == 0.0);
  CHECK(p.rho2 == doctest::Approx(0.25).epsilon(1e-12));

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 500; ++k) {
    SlopeVector a{u(rng), u(rng)}, b{u(rng), u(rng)};
    SlopeVector pa = project_to_slope_set(a, 4);
    SlopeVector pb = project_to_slope_set(b, 4);
    CHECK(in_slope_set(pa, 4));
    // nonexpansive
    CHECK(dist(pa, pb) <= dist(a, b) + 1e-12);
    // identity on the set itself
    SlopeVector paa = project_to_slope_set(pa, 4);
    CHECK(dist(pa, paa) < 1e-14);
  }
}

TEST_CASE("extended speed is Lipschitz on the whole plane") {
  double lip = speed_gradient_sup_norm(4);
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 500; ++k) {
    SlopeVector a{u(rng), u(rng)}, b{u(rng), u(rng)};
    double da = speed_extended(a, 4), db = speed_extended(b, 4);
    CHECK(std::abs(da - db) <= lip * dist(a, b) + 1e-12);
  }
  CHECK(speed_extended({2.0, 2.0}, 4) ==
        doctest::Approx(speed({0.375, 0.375})).epsilon(1e-12));
  CHECK(speed_extended({-1.0, 0.25}, 4) == 0.0);
}

TEST_CASE("slope recovery round trip") {
  for (int i = 1; i < 12; ++i) {
    for (int j = 1; j < 12; ++j) {
      SlopeVector r{0.75 * i / 12.0, 0.75 * j / 12.0};
      if (r.rho1 + r.rho2 > 0.75) continue;
      GradientTriple g{r.rho1, r.rho2, -speed(r)};
      SlopeVector back = solve_rho(g, 4);
      CHECK(dist(r, back) < 1e-10);
    }
  }
}

TEST_CASE("slope recovery reference cases") {
  // zero time slope shrinks the space slope: rho_h + v = 0.5 has rho_h < 0.5
  SlopeVector r = solve_rho({0.25, 0.25, 0.0});
  CHECK(r.rho1 == doctest::Approx(r.rho2).epsilon(1e-12));
  double rh = r.rho1 + r.rho2;
  CHECK(rh < 0.5);
  CHECK(std::abs(rh + speed(r) - 0.5) < 1e-12);

  r = solve_rho({1.0 / 3, 1.0 / 3, -std::sqrt(3.0) / (2 * kPi)});
  CHECK(std::abs(r.rho1 - 1.0 / 3) < 1e-10);
  CHECK(std::abs(r.rho2 - 1.0 / 3) < 1e-10);

  // boundary case: the recovered slope has speed zero
  r = solve_rho({0.3, 0.0, 0.0});
  CHECK(std::abs(r.rho1 - 0.3) < 1e-12);
  CHECK(r.rho2 == 0.0);
}

TEST_CASE("slope recovery input validation") {
  CHECK_THROWS_AS(solve_rho({0.7, 0.5, 0.0}), config_error);
  CHECK_THROWS_AS(solve_rho({-0.1, 0.3, 0.0}), config_error);
  CHECK_THROWS_AS(solve_rho({0.25, 0.25, 0.1}), config_error);
}

TEST_CASE("grid maxima over restricted triangles") {
  // max of v on T_M sits at the midpoint of the long edge
  double c4 = 0.75;
  double expected = std::tan(kPi * c4 / 2.0) / (2 * kPi);
  CHECK(speed_max(4) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(speed_max(4) == doctest::Approx(speed({c4 / 2, c4 / 2})).epsilon(1e-9));

  CHECK(speed_gradient_sup(4) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(speed_gradient_sup(5) == doctest::Approx(2.894427190999916).epsilon(1e-6));
  // larger M allows steeper slopes, so every bound grows
  CHECK(speed_max(5) > speed_max(4));
  CHECK(speed_gradient_sup_norm(5) > speed_gradient_sup_norm(4));
  CHECK(speed_gradient_sup_norm(4) >= speed_gradient_sup(4));
}
