#pragma once

#include <utility>

#include "akpz/common.hpp"

namespace akpz {

// Growth speed of the interface as a function of slope, and the inverse
// problem of recovering a slope from measured gradients. The slope domain
// is the open triangle T = {rho1 >= 0, rho2 >= 0, rho1 + rho2 < 1}; the
// subfamily T_M additionally requires rho1 + rho2 <= 1 - 1/M.

struct SlopeVector {
  double rho1 = 0.0;
  double rho2 = 0.0;
};

struct GradientTriple {
  double g1 = 0.0;  // slope along x1
  double g2 = 0.0;  // slope along x2
  double gt = 0.0;  // time slope, nonpositive for a growing interface
};

// v(rho) = sin(pi rho1) sin(pi rho2) / (pi sin(pi (rho1+rho2))), with
// v = 0 when rho1 + rho2 < 1e-12. Throws config_error outside T.
double speed(SlopeVector rho);

// (dv/drho1, dv/drho2) = (sin^2(pi rho2), sin^2(pi rho1)) / sin^2(pi (rho1+rho2)).
// Requires an interior point of T.
SlopeVector speed_gradient(SlopeVector rho);

// Sign of det D^2 v by central second differences with step 1e-4. The point
// must be at least 1e-2 away from the boundary of T, else config_error.
int hessian_det_sign(SlopeVector rho);

// Euclidean projection onto the closed triangle T_M.
SlopeVector project_to_slope_set(SlopeVector rho, int M);

// v extended to the whole plane: evaluate at the projection onto T_M.
double speed_extended(SlopeVector rho, int M);

// Recovers rho from g = (g1, g2, gt) via
//   rho1 - rho2 = g1 - g2
//   (rho1 + rho2) + v(rho) = g1 + g2 - gt.
// The map rho_h -> rho_h + v is strictly increasing, so the solution is
// found by bisection; the residual in the second equation is below 1e-12.
// Requires (g1, g2) in T and gt <= 0. The solution is unique in T whatever
// M is; M only sanity-checks the caller's slope family (M >= 2) and lets
// callers report membership of the result in T_M.
SlopeVector solve_rho(GradientTriple g);
SlopeVector solve_rho(GradientTriple g, int M);

// max of v over T_M, by grid search with local refinement (cached per M).
double speed_max(int M);

// sup over T_M of the partial derivatives of v (equal by symmetry), and of
// the euclidean norm of the gradient. Grid search, cached per M.
double speed_gradient_sup(int M);
double speed_gradient_sup_norm(int M);

// distance from rho to the boundary of T (negative outside)
double slope_triangle_margin(SlopeVector rho);

inline bool in_slope_triangle(SlopeVector rho) {
  return rho.rho1 >= 0.0 && rho.rho2 >= 0.0 && rho.rho1 + rho.rho2 < 1.0;
}

inline bool in_slope_set(SlopeVector rho, int M) {
  return rho.rho1 >= 0.0 && rho.rho2 >= 0.0 && rho.rho1 + rho.rho2 <= 1.0 - 1.0 / M;
}

}  // namespace akpz
