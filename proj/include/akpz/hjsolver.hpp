#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "akpz/common.hpp"
#include "akpz/hamiltonian.hpp"

namespace akpz {

// One affine map a1*x1 + a2*x2 + c.
struct AffinePiece {
  double a1 = 0.0, a2 = 0.0, c = 0.0;
  double at(double x1, double x2) const { return a1 * x1 + a2 * x2 + c; }
};

enum class ProfileOp { max_of, min_of };

// Upper or lower envelope of finitely many affine pieces whose slopes lie in
// the admissible slope triangle for class M. Closed under the class
// constraints: the envelope of nondecreasing pieces with diagonal slope at
// most 1-1/M stays nondecreasing with the same diagonal bound.
struct MacroProfile {
  ProfileOp op = ProfileOp::max_of;
  std::vector<AffinePiece> pieces;
  int M = 4;

  double operator()(double x1, double x2) const;
  // The same envelope with each piece lowered by its own growth rate times t.
  // Exact for a single piece; used as far-field boundary data where the
  // absorbing cushion makes residual error irrelevant.
  double transported(double x1, double x2, double t) const;
};

MacroProfile linear_profile(SlopeVector rho, int M, double c = 0.0);
MacroProfile envelope_profile(ProfileOp op, std::vector<AffinePiece> pieces, int M);

struct ProfileClassReport {
  bool ok = true;
  std::string detail;
};

// Validates slope-class membership of f two ways: algebraically per piece
// (components >= 0, sum <= 1-1/M) and by sampled directional increments on
// [-radius, radius]^2 with the given step.
ProfileClassReport check_profile_class(const MacroProfile& f, double radius, double step);

// Numerical solution of d_t u + v(grad u) = 0 from u(.,0) = f.
// Stores only the requested snapshot planes over the reported region; the
// computational grid extends cushion cells beyond it on every side, with the
// outermost layer held at transported boundary data each step. Running
// invariants are accumulated over consecutive steps during the solve.
struct GridSolution {
  double dx = 0.0, dt = 0.0;
  double origin1 = 0.0, origin2 = 0.0;  // reported region lower corner
  int n1 = 0, n2 = 0;                   // reported vertices per axis
  int M = 4;
  int cushion = 0;                      // extra cells per side, not reported
  std::vector<double> times;            // snapshot times, multiples of dt
  std::vector<std::vector<double>> planes;  // planes[k][i * n2 + j]

  // violation magnitudes accumulated while stepping (0 = clean), measured
  // over the reported interior on sampled steps
  double worst_step_rise = 0.0;      // max of u_next - u over a step
  double worst_slope_low = 0.0;      // max of -slope (one-sided slope below 0)
  double worst_slope_high = 0.0;     // max of slope - 1
  double worst_diag_excess = 0.0;    // max of diagonal slope - (1 - 1/M)

  double at(int k, int i, int j) const { return planes[std::size_t(k)][std::size_t(i) * n2 + j]; }
  // Value at an aligned point; throws window_error when (x1,x2) is not a
  // reported vertex or t is not a stored time.
  double value_at(double x1, double x2, double t) const;
  double scheme_tolerance() const { return 2.0 * (dx + dt); }
};

// Monotone first-order scheme: central-difference slopes projected into the
// class-(M+1) triangle before evaluating the growth speed, plus dissipation
// sized by the speed's slope bound on that triangle; time step fixed by
// dt <= dx / (2 (sigma1 + sigma2)) and snapped so every requested time is a
// step multiple. cushion_factor scales the absorbing margin sigma*T/dx.
GridSolution solve(const MacroProfile& f, double T, double lo1, double lo2, double hi1, double hi2,
                   double dx, const std::vector<double>& times, double cushion_factor = 1.5);

struct OrderReport {
  bool ok = false;
  double worst_gap = 0.0;  // max over stored planes of u_f - u_g
};

// Solves both profiles on the same grid and checks u_f <= u_g + tolerance at
// every stored vertex. Requires f <= g sampled on the reported region.
OrderReport comparison_check(const MacroProfile& f, const MacroProfile& g, double T, double lo1,
                             double lo2, double hi1, double hi2, double dx,
                             const std::vector<double>& times);

struct SlopeClassReport {
  bool ok = false;
  double worst_slope_low = 0.0;
  double worst_slope_high = 0.0;
  double worst_diag_excess = 0.0;
  double worst_step_rise = 0.0;
  double tolerance = 0.0;
};

// Scans the stored planes for one-sided slopes outside [0,1] and diagonal
// slopes above 1-1/M, all modulo the scheme tolerance, and folds in the
// running accumulators from the solve.
SlopeClassReport slope_class_check(const GridSolution& sol, int M);

struct TestBump {
  double x1 = 0.0, x2 = 0.0, t = 0.0;  // center
  double p1 = 0.0, p2 = 0.0;           // spatial slope at the center
  double q = 0.0;                      // temporal slope at the center
  double curvature = 1.0;              // paraboloid opening, > 0
};

struct BumpProbeResult {
  bool touched = false;       // interior touching vertex found
  bool slope_admissible = false;  // gradient at the touch point inside the triangle
  double residual = 0.0;      // d_t phi + v(grad phi) at the touch point
  double t_touch = 0.0;
  double x1_touch = 0.0, x2_touch = 0.0;
};

// For each bump, shifts the concave paraboloid
//   phi(x,t) = p.(x-x0) + q (t-t0) - curvature (|x-x0|^2 + (t-t0)^2)
// until it touches the stored solution from above, then evaluates the
// subsolution inequality at the touch point. Bumps whose touch-point gradient
// leaves the slope triangle are reported as not admissible and carry no
// verdict. Touch points on the search-region edge count as not touched.
std::vector<BumpProbeResult> viscosity_inequality_probe(const GridSolution& sol,
                                                        const std::vector<TestBump>& bumps);

void write_solution_csv(const GridSolution& sol, const std::string& path);
void write_solution_bin(const GridSolution& sol, const std::string& path);
GridSolution read_solution_bin(const std::string& path);

// Independent reference for upper envelopes of affine data: the variational
// value sup_p [p.x - f*(p) - t v(p)] over the convex hull of the piece
// slopes, evaluated by sampling the hull on a fine barycentric grid.
// samples_per_edge controls the sampling density.
double hopf_value(const MacroProfile& f, double x1, double x2, double t, int samples_per_edge);

}  // namespace akpz
