#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "akpz/dynamics.hpp"
#include "akpz/hjsolver.hpp"
#include "akpz/lattice.hpp"

namespace akpz {

// Experiment drivers: profile discretization, growth-speed measurement, the
// hydrodynamic convergence study, and the randomized property battery.

// h(x) = floor(L * f(x/L)) on the vertex box starting at origin. Throws
// invariant_error when the result fails the class-M admissibility check,
// which would indicate a profile outside the admissible slope set.
HeightField discretize_profile(const MacroProfile& f, int L, SiteCoord origin, int nx1, int nx2);

// Particle slots of the discretized profile over a window: slot (ell, z2) is
// occupied exactly when floor(L*f) gains nothing across the diagonal at the
// matching dual vertex. Labels are aligned bottom-up.
ParticleArray particles_from_profile(const MacroProfile& f, int L, const LatticeWindow& window);

// Dual-coordinate box around the measurement ball of macroscopic radius R:
// covers every site within L1 distance 2*ceil(L*R) of the origin plus a
// cushion of ceil(alpha*T*L) dual units on each side. One move shifts a
// particle by one line and one half-step, so dual distance is the natural
// cone metric; adequacy of the default alpha is checked empirically by the
// truncation battery.
LatticeWindow window_for_ball(int L, double R, double alpha, double T);

struct SpeedMeasurement {
  SlopeVector rho;
  int L = 0;
  double T = 0.0;
  double mean_rate = 0.0;
  double std_error = 0.0;
  std::vector<double> per_seed;
  double reference = 0.0;  // analytic rate at rho
};

// Phase announcements for long runs; called from the coordinating thread
// only, so the sink needs no locking. Never receives data rows.
using ProgressFn = std::function<void(const std::string&)>;

// Mean over seeds of J_origin(LT) / (LT), the rescaled decrease of the
// height over the origin. threads > 1 distributes seeds over workers; the
// reduce is seed-ordered, so results do not depend on the thread count.
SpeedMeasurement measure_speed(SlopeVector rho, int M, int L, double T,
                               const std::vector<std::uint64_t>& seeds, double alpha,
                               int threads = 1, ProgressFn progress = {});

struct ExperimentConfig {
  MacroProfile profile;
  int M = 4;
  std::vector<int> Ls;
  double T = 1.0;
  double R = 1.0;
  std::vector<std::uint64_t> seeds;
  double alpha = 8.0;
  double dx = 1.0 / 128.0;
  double sample_spacing = 1.0 / 16.0;
  std::vector<double> times;
  int threads = 1;
  std::string out_dir = ".";
};

// Reads the versioned JSON schema (see docs/config.md). Unknown keys are
// rejected so typos cannot silently fall back to defaults.
ExperimentConfig parse_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_json(const std::string& text);

struct LErrorRow {
  int L = 0;
  double mean_sup_error = 0.0;
  double min_sup_error = 0.0;
  double max_sup_error = 0.0;
  std::vector<double> per_seed;
  double seconds = 0.0;  // wall time spent on this L
};

struct ConvergenceReport {
  std::vector<std::uint64_t> seeds;  // row per_seed entries follow this order
  std::vector<LErrorRow> rows;
  bool decreasing = false;
  double final_error = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

// For each L: simulate the discretized profile to time L*T, sample the
// rescaled height on the grid of spacing sample_spacing over the R-ball at
// the configured times, and take the sup distance to the reference grid
// solution. Verdict: mean errors strictly decreasing in L and the last one
// below threshold. T = 0 skips the solve; only discretization remains.
ConvergenceReport hydro_convergence(const ExperimentConfig& cfg, double threshold = 0.05,
                                    ProgressFn progress = {});

struct CheckResult {
  std::string name;
  std::int64_t trials = 0;
  std::int64_t violations = 0;
  bool pass = false;
  std::string details;
};

// Randomized micro-scale trial batteries. Every runner derives its trial
// randomness from seed0 alone and is deterministic given its arguments.
CheckResult run_monotonicity_trials(int n, std::uint64_t seed0);
CheckResult run_translation_trials(int n, std::uint64_t seed0);
CheckResult run_locality_trials(int n, std::uint64_t seed0);
CheckResult run_staircase_trials(int n, std::uint64_t seed0);
CheckResult run_truncation_trials(int n, std::uint64_t seed0, double alpha);
// Scans |H(x,t+d) - H(x,t)| / (L sqrt((t+d) d)) over monitored sites and a
// grid of (t, d) pairs; pass when the empirical constant stays below cap.
CheckResult run_modulus_scan(int n, std::uint64_t seed0, double cap);
// A jump rule that ignores the lower interlacing partner must be caught by
// the configuration validator.
CheckResult run_negative_control();

struct BatterySpec {
  int monotonicity = 120;
  int translation = 60;
  int locality = 120;
  int staircase = 60;
  int truncation = 60;
  int modulus = 10;
  double alpha = 8.0;
  double modulus_cap = 2.0;
  std::uint64_t seed0 = 1;
};

std::vector<CheckResult> property_battery(const BatterySpec& spec, ProgressFn progress = {});

void write_report_json(const std::string& path, const std::string& command,
                       const std::vector<CheckResult>& checks);
void write_speed_csv(const std::vector<SpeedMeasurement>& rows, const std::string& path);
void write_convergence_csv(const ConvergenceReport& rep, const std::string& path);

}  // namespace akpz
