#include "akpz/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace akpz {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Unchecked evaluation, used by the solvers on points that are known to be
// admissible up to rounding.
double v_raw(double rho1, double rho2) {
  double s = rho1 + rho2;
  if (s < 1e-12) return 0.0;
  double den = std::sin(kPi * s);
  if (den <= 0.0) return 0.0;
  return std::sin(kPi * rho1) * std::sin(kPi * rho2) / (kPi * den);
}

double dv1_raw(double rho1, double rho2) {
  double den = std::sin(kPi * (rho1 + rho2));
  if (den == 0.0) return 0.0;
  double s = std::sin(kPi * rho2);
  return s * s / (den * den);
}

struct MaxResult {
  SlopeVector arg;
  double value;
};

// Maximize f over the closed triangle T_M: coarse grid, then shrinking
// local grids around the best point.
template <typename F>
MaxResult maximize_over_slope_set(int M, F f) {
  double c = 1.0 - 1.0 / M;
  int n = 600;
  MaxResult best{{0.0, 0.0}, f(SlopeVector{0.0, 0.0})};
  for (int i = 0; i <= n; ++i) {
    double r1 = c * i / n;
    for (int j = 0; j <= n - i; ++j) {
      double r2 = c * j / n;
      if (r1 + r2 > c + 1e-15) continue;
      double val = f(SlopeVector{r1, r2});
      if (val > best.value) best = {{r1, r2}, val};
    }
  }
  double w = c / n;
  for (int round = 0; round < 60; ++round) {
    MaxResult local = best;
    for (int i = -5; i <= 5; ++i) {
      for (int j = -5; j <= 5; ++j) {
        double r1 = best.arg.rho1 + w * i / 5.0;
        double r2 = best.arg.rho2 + w * j / 5.0;
        if (r1 < 0.0 || r2 < 0.0 || r1 + r2 > c) continue;
        double val = f(SlopeVector{r1, r2});
        if (val > local.value) local = {{r1, r2}, val};
      }
    }
    best = local;
    w *= 0.6;
  }
  return best;
}

std::mutex g_cache_mutex;

double cached(std::map<int, double>& cache, int M, double (*compute)(int)) {
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  auto it = cache.find(M);
  if (it != cache.end()) return it->second;
  double val = compute(M);
  cache.emplace(M, val);
  return val;
}

}  // namespace

double slope_triangle_margin(SlopeVector rho) {
  return std::min({rho.rho1, rho.rho2, (1.0 - rho.rho1 - rho.rho2) / std::sqrt(2.0)});
}

double speed(SlopeVector rho) {
  if (!in_slope_triangle(rho)) {
    throw config_error("speed: slope outside the admissible triangle");
  }
  return v_raw(rho.rho1, rho.rho2);
}

SlopeVector speed_gradient(SlopeVector rho) {
  if (!(rho.rho1 > 0.0 && rho.rho2 > 0.0 && rho.rho1 + rho.rho2 < 1.0)) {
    throw config_error("speed_gradient: slope must be interior");
  }
  return {dv1_raw(rho.rho1, rho.rho2), dv1_raw(rho.rho2, rho.rho1)};
}

int hessian_det_sign(SlopeVector rho) {
  constexpr double h = 1e-4;
  if (slope_triangle_margin(rho) < 1e-2) {
    throw config_error("hessian_det_sign: point too close to the boundary for the difference step");
  }
  double x = rho.rho1, y = rho.rho2;
  double v0 = v_raw(x, y);
  double vxx = (v_raw(x + h, y) - 2.0 * v0 + v_raw(x - h, y)) / (h * h);
  double vyy = (v_raw(x, y + h) - 2.0 * v0 + v_raw(x, y - h)) / (h * h);
  double vxy = (v_raw(x + h, y + h) - v_raw(x + h, y - h) - v_raw(x - h, y + h) +
                v_raw(x - h, y - h)) /
               (4.0 * h * h);
  double det = vxx * vyy - vxy * vxy;
  return (det > 0.0) - (det < 0.0);
}

SlopeVector project_to_slope_set(SlopeVector rho, int M) {
  if (M < 2) throw config_error("project_to_slope_set: M must be at least 2");
  double c = 1.0 - 1.0 / M;
  if (rho.rho1 >= 0.0 && rho.rho2 >= 0.0 && rho.rho1 + rho.rho2 <= c) return rho;
  // Nearest point on each edge segment; the projection is the closest one.
  auto clamp = [](double v, double lo, double hi) { return std::min(std::max(v, lo), hi); };
  SlopeVector cand[3] = {
      {clamp(rho.rho1, 0.0, c), 0.0},
      {0.0, clamp(rho.rho2, 0.0, c)},
      {0.0, 0.0},
  };
  double t = clamp((rho.rho1 - rho.rho2 + c) / 2.0, 0.0, c);
  cand[2] = {t, c - t};
  auto dist2 = [&](SlopeVector p) {
    double d1 = p.rho1 - rho.rho1, d2 = p.rho2 - rho.rho2;
    return d1 * d1 + d2 * d2;
  };
  SlopeVector best = cand[0];
  for (int k = 1; k < 3; ++k) {
    if (dist2(cand[k]) < dist2(best)) best = cand[k];
  }
  return best;
}

double speed_extended(SlopeVector rho, int M) {
  SlopeVector p = project_to_slope_set(rho, M);
  return v_raw(p.rho1, p.rho2);
}

SlopeVector solve_rho(GradientTriple g) {
  if (!in_slope_triangle({g.g1, g.g2})) {
    throw config_error("solve_rho: (g1, g2) outside the admissible triangle");
  }
  if (g.gt > 0.0) {
    throw config_error("solve_rho: time slope must be nonpositive");
  }
  double rv = g.g1 - g.g2;
  double tau = g.g1 + g.g2 - g.gt;
  double lo = std::abs(rv);
  if (tau < lo - 1e-14) {
    throw config_error("solve_rho: gradients admit no slope (|g1 - g2| exceeds g1 + g2 - gt)");
  }
  auto phi = [&](double rh) {
    return rh + v_raw((rh + rv) / 2.0, (rh - rv) / 2.0) - tau;
  };
  double rh;
  if (phi(lo) >= -1e-13) {
    rh = lo;
  } else {
    double hi = (1.0 + lo) / 2.0;
    for (int k = 0; k < 60 && phi(hi) < 0.0; ++k) hi = (1.0 + hi) / 2.0;
    rh = (lo + hi) / 2.0;
    for (int iter = 0; iter < 200; ++iter) {
      double val = phi(rh);
      if (std::abs(val) <= 1e-13) break;
      if (val < 0.0) {
        lo = rh;
      } else {
        hi = rh;
      }
      rh = (lo + hi) / 2.0;
    }
  }
  SlopeVector rho{(rh + rv) / 2.0, (rh - rv) / 2.0};
  rho.rho1 = std::max(rho.rho1, 0.0);
  rho.rho2 = std::max(rho.rho2, 0.0);
  return rho;
}

SlopeVector solve_rho(GradientTriple g, int M) {
  if (M < 2) throw config_error("solve_rho: M must be at least 2");
  return solve_rho(g);
}

double speed_max(int M) {
  static std::map<int, double> cache;
  return cached(cache, M, [](int m) {
    return maximize_over_slope_set(m, [](SlopeVector r) { return v_raw(r.rho1, r.rho2); }).value;
  });
}

double speed_gradient_sup(int M) {
  static std::map<int, double> cache;
  return cached(cache, M, [](int m) {
    return maximize_over_slope_set(m, [](SlopeVector r) { return dv1_raw(r.rho1, r.rho2); }).value;
  });
}

double speed_gradient_sup_norm(int M) {
  static std::map<int, double> cache;
  return cached(cache, M, [](int m) {
    return maximize_over_slope_set(m, [](SlopeVector r) {
             double a = dv1_raw(r.rho1, r.rho2);
             double b = dv1_raw(r.rho2, r.rho1);
             return std::sqrt(a * a + b * b);
           })
        .value;
  });
}

}  // namespace akpz
