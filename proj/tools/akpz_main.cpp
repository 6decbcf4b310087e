#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "akpz/common.hpp"
#include "akpz/csv.hpp"
#include "akpz/dynamics.hpp"
#include "akpz/hamiltonian.hpp"
#include "akpz/harness.hpp"
#include "akpz/hjsolver.hpp"
#include "akpz/lattice.hpp"

namespace {

using namespace akpz;

// Progress goes to stderr so stdout stays parseable; --quiet drops it.
ProgressFn progress_sink(bool quiet) {
  if (quiet) return {};
  return [](const std::string& line) { std::fprintf(stderr, "[akpz] %s\n", line.c_str()); };
}

std::string resolve_out_dir(const std::string& flag_value, const std::string& cfg_value) {
  std::string dir = !flag_value.empty() ? flag_value : cfg_value;
  if (dir.empty()) dir = ".";
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw config_error("cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

int cmd_simulate(const std::string& config_path, bool seed_given, std::uint64_t seed_flag,
                 const std::string& out_flag, bool quiet) {
  ExperimentConfig cfg = parse_experiment_config(config_path);
  if (cfg.Ls.empty()) throw config_error("simulate needs L in the config");
  if (cfg.times.empty()) throw config_error("simulate needs snapshot times in the config");
  const int L = cfg.Ls.front();
  const std::uint64_t seed = seed_given ? seed_flag : (cfg.seeds.empty() ? 1 : cfg.seeds.front());
  const std::string out = resolve_out_dir(out_flag, cfg.out_dir);
  ProgressFn progress = progress_sink(quiet);

  LatticeWindow window = window_for_ball(L, cfg.R, cfg.alpha, cfg.T);
  ParticleArray initial = particles_from_profile(cfg.profile, L, window);
  const int r = int(std::ceil(cfg.R * L - 1e-9));

  RunSpec spec;
  for (double t : cfg.times) spec.snapshot_times.push_back(t * L);
  spec.monitored = {{0, 0}};
  spec.origin = {0, 0};
  spec.origin_height = std::int64_t(std::floor(L * cfg.profile(0.0, 0.0)));
  spec.snap_origin = {-r, -r};
  spec.snap_nx1 = 2 * r + 1;
  spec.snap_nx2 = 2 * r + 1;

  if (progress) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "simulate L=%d seed=%llu: horizon %g, lines [%lld,%lld]", L,
                  (unsigned long long)seed, cfg.T * L, (long long)window.ell_min,
                  (long long)window.ell_max);
    progress(buf);
  }
  RunResult res = run_streamed(initial, window, cfg.T * L, seed, spec);

  for (std::size_t k = 0; k < cfg.times.size(); ++k) {
    std::string path = out + "/height_" + std::to_string(k) + ".csv";
    write_height_csv(res.snapshots[k], path);
    if (progress) progress("wrote " + path);
  }
  write_trajectories_csv(spec.monitored, res.trajectories, out + "/trajectory_origin.csv");
  if (progress) progress("wrote " + out + "/trajectory_origin.csv");

  CsvWriter summary(stdout);
  summary.header({"time", "J_origin", "height_origin"});
  for (std::size_t k = 0; k < cfg.times.size(); ++k) {
    summary.field(cfg.times[k]);
    summary.field(res.snapshot_J[k][0]);
    summary.field(spec.origin_height - res.snapshot_J[k][0]);
    summary.end_row();
  }
  return 0;
}

int cmd_speed(double rho1, double rho2, int M, int L, double T, int nseeds, std::uint64_t seed0,
              double alpha, int threads, const std::string& out_flag, bool quiet) {
  if (nseeds < 1) throw config_error("--seeds must be at least 1");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < nseeds; ++i) seeds.push_back(seed0 + std::uint64_t(i));
  SpeedMeasurement m =
      measure_speed({rho1, rho2}, M, L, T, seeds, alpha, threads, progress_sink(quiet));

  CsvWriter w(stdout);
  w.header({"rho1", "rho2", "L", "T", "seeds", "mean_rate", "std_error", "reference", "abs_error"});
  w.field(m.rho.rho1);
  w.field(m.rho.rho2);
  w.field(std::int64_t(m.L));
  w.field(m.T);
  w.field(std::int64_t(m.per_seed.size()));
  w.field(m.mean_rate);
  w.field(m.std_error);
  w.field(m.reference);
  w.field(std::abs(m.mean_rate - m.reference));
  w.end_row();

  if (!out_flag.empty()) {
    std::string out = resolve_out_dir(out_flag, ".");
    write_speed_csv({m}, out + "/speed.csv");
  }
  return 0;
}

int cmd_hydro(const std::string& config_path, bool seed_given, std::uint64_t seed_flag,
              const std::string& out_flag, int threads_flag, double threshold, bool quiet) {
  ExperimentConfig cfg = parse_experiment_config(config_path);
  if (seed_given) {
    std::size_t n = cfg.seeds.empty() ? 1 : cfg.seeds.size();
    cfg.seeds.resize(n);
    for (std::size_t i = 0; i < n; ++i) cfg.seeds[i] = seed_flag + i;
  }
  if (threads_flag > 0) cfg.threads = threads_flag;
  const std::string out = resolve_out_dir(out_flag, cfg.out_dir);

  ConvergenceReport rep = hydro_convergence(cfg, threshold, progress_sink(quiet));
  write_convergence_csv(rep, out + "/convergence.csv");

  CsvWriter w(stdout);
  w.header({"L", "mean_sup_error", "min_sup_error", "max_sup_error"});
  for (const LErrorRow& row : rep.rows) {
    w.field(std::int64_t(row.L));
    w.field(row.mean_sup_error);
    w.field(row.min_sup_error);
    w.field(row.max_sup_error);
    w.end_row();
  }
  if (!quiet)
    std::fprintf(stderr, "[akpz] verdict: %s (decreasing=%s, final %.5f vs threshold %.5f)\n",
                 rep.pass ? "pass" : "FAIL", rep.decreasing ? "yes" : "no", rep.final_error,
                 rep.threshold);
  return rep.pass ? 0 : 1;
}

int cmd_hj_solve(const std::string& config_path, const std::string& out_flag, bool quiet) {
  ExperimentConfig cfg = parse_experiment_config(config_path);
  if (cfg.times.empty()) throw config_error("hj-solve needs output times in the config");
  const std::string out = resolve_out_dir(out_flag, cfg.out_dir);
  ProgressFn progress = progress_sink(quiet);

  if (progress) {
    char buf[120];
    std::snprintf(buf, sizeof buf, "solving dx=%g over [-%g,%g]^2 up to T=%g", cfg.dx, cfg.R,
                  cfg.R, cfg.T);
    progress(buf);
  }
  GridSolution sol = solve(cfg.profile, cfg.T, -cfg.R, -cfg.R, cfg.R, cfg.R, cfg.dx, cfg.times);
  write_solution_csv(sol, out + "/solution.csv");
  write_solution_bin(sol, out + "/solution.bin");
  if (progress) progress("wrote " + out + "/solution.csv and " + out + "/solution.bin");

  CsvWriter w(stdout);
  w.header({"time", "min_value", "max_value"});
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    double lo = sol.at(int(k), 0, 0), hi = lo;
    for (int i = 0; i < sol.n1; ++i)
      for (int j = 0; j < sol.n2; ++j) {
        double v = sol.at(int(k), i, j);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    w.field(sol.times[k]);
    w.field(lo);
    w.field(hi);
    w.end_row();
  }
  return 0;
}

int cmd_rho_solve(double g1, double g2, double gt, int M) {
  SlopeVector rho = solve_rho({g1, g2, gt}, M);
  double residual = std::abs(rho.rho1 + rho.rho2 + speed(rho) - (g1 + g2 - gt));
  std::printf("rho1 = %.17g\n", rho.rho1);
  std::printf("rho2 = %.17g\n", rho.rho2);
  std::printf("residual = %.3e\n", residual);
  std::printf("in_slope_set_M%d = %s\n", M, in_slope_set(rho, M) ? "yes" : "no");
  return 0;
}

int cmd_speed_table(int M, double step, const std::string& out_flag, bool quiet) {
  if (step <= 0.0 || step > 0.5) throw config_error("--step must be in (0, 0.5]");
  auto emit = [&](CsvWriter& w) {
    w.header({"rho1", "rho2", "speed"});
    const int n = int(std::floor(1.0 / step + 1e-9));
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) {
        SlopeVector rho{i * step, j * step};
        if (!in_slope_set(rho, M)) continue;
        w.field(rho.rho1);
        w.field(rho.rho2);
        w.field(speed(rho));
        w.end_row();
      }
  };
  if (out_flag.empty()) {
    CsvWriter w(stdout);
    emit(w);
  } else {
    std::string out = resolve_out_dir(out_flag, ".");
    CsvWriter w(out + "/speed_table.csv");
    emit(w);
    if (!quiet) std::fprintf(stderr, "[akpz] wrote %s/speed_table.csv\n", out.c_str());
  }
  return 0;
}

int cmd_check(const std::string& size, std::uint64_t seed0, const std::string& out_flag,
              bool quiet) {
  BatterySpec spec;
  spec.seed0 = seed0;
  if (size == "medium") {
    spec.monotonicity = 400;
    spec.translation = 200;
    spec.locality = 400;
    spec.staircase = 200;
    spec.truncation = 200;
    spec.modulus = 20;
  } else if (size == "large") {
    spec.monotonicity = 1000;
    spec.translation = 1000;
    spec.locality = 1000;
    spec.staircase = 1000;
    spec.truncation = 1000;
    spec.modulus = 40;
  }
  const std::string out = resolve_out_dir(out_flag, ".");

  std::vector<CheckResult> checks = property_battery(spec, progress_sink(quiet));
  char cmdbuf[96];
  std::snprintf(cmdbuf, sizeof cmdbuf, "check --size %s --seeds %llu", size.c_str(),
                (unsigned long long)seed0);
  write_report_json(out + "/report.json", cmdbuf, checks);

  bool all = true;
  for (const CheckResult& c : checks) {
    std::printf("%-22s %s\n", c.name.c_str(), c.pass ? "pass" : "FAIL");
    all = all && c.pass;
  }
  if (!quiet) std::fprintf(stderr, "[akpz] wrote %s/report.json\n", out.c_str());
  return all ? 0 : 1;
}

int cmd_export_tiling(const std::string& config_path, int L_flag, const std::string& out_flag,
                      bool quiet) {
  ExperimentConfig cfg = parse_experiment_config(config_path);
  int L = L_flag;
  if (L <= 0) {
    if (cfg.Ls.empty()) throw config_error("export-tiling needs L in the config or via --L");
    L = cfg.Ls.front();
  }
  const std::string out = resolve_out_dir(out_flag, cfg.out_dir);

  LatticeWindow window = window_for_ball(L, cfg.R, 1.0, 0.0);
  ParticleArray pa = particles_from_profile(cfg.profile, L, window);
  std::vector<TilingCell> cells = export_tiling(pa);
  write_tiling_csv(cells, out + "/tiling.csv");
  write_tiling_json(cells, out + "/tiling.json");
  if (!quiet)
    std::fprintf(stderr, "[akpz] wrote %zu cells to %s/tiling.{csv,json}\n", cells.size(),
                 out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event-driven growth of an interlaced particle surface: simulation, "
               "growth-speed measurement, macroscopic PDE solver, and property checks"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 1;
  bool quiet = false;
  int threads = 0;

  auto* sim = app.add_subcommand("simulate", "run one seeded realization and export snapshots");
  sim->add_option("--config", config_path, "experiment config (JSON)")->required();
  auto* sim_seed = sim->add_option("--seed", seed, "override the config seed");
  sim->add_option("--out", out_dir, "output directory (default: config out_dir)");
  sim->add_flag("--quiet", quiet, "suppress progress lines");

  double rho1 = 0.0, rho2 = 0.0, T = 1.0, alpha = 8.0;
  int M = 4, L = 64, nseeds = 8;
  auto* spd = app.add_subcommand("speed", "measure the mean growth rate at a fixed slope");
  spd->add_option("--rho1", rho1, "slope along the first axis")->required();
  spd->add_option("--rho2", rho2, "slope along the second axis")->required();
  spd->add_option("--M", M, "slope-class parameter")->capture_default_str();
  spd->add_option("--L", L, "lattice scale")->capture_default_str();
  spd->add_option("--T", T, "macroscopic horizon")->capture_default_str();
  spd->add_option("--seeds", nseeds, "number of seeds")->capture_default_str();
  spd->add_option("--seed", seed, "base seed")->capture_default_str();
  spd->add_option("--alpha", alpha, "event-window cushion factor")->capture_default_str();
  spd->add_option("--threads", threads, "worker threads for the seed loop");
  spd->add_option("--out", out_dir, "also write speed.csv to this directory");
  spd->add_flag("--quiet", quiet, "suppress progress lines");

  double threshold = 0.05;
  auto* hyd = app.add_subcommand("hydro", "convergence of rescaled heights to the PDE solution");
  hyd->add_option("--config", config_path, "experiment config (JSON)")->required();
  auto* hyd_seed = hyd->add_option("--seed", seed, "rebase the seed list at this value");
  hyd->add_option("--out", out_dir, "output directory (default: config out_dir)");
  hyd->add_option("--threads", threads, "override config threads");
  hyd->add_option("--threshold", threshold, "final-error acceptance bound")->capture_default_str();
  hyd->add_flag("--quiet", quiet, "suppress progress lines");

  auto* hjs = app.add_subcommand("hj-solve", "solve the macroscopic equation on a grid");
  hjs->add_option("--config", config_path, "experiment config (JSON)")->required();
  hjs->add_option("--out", out_dir, "output directory (default: config out_dir)");
  hjs->add_flag("--quiet", quiet, "suppress progress lines");

  double g1 = 0.0, g2 = 0.0, gt = 0.0;
  auto* rho = app.add_subcommand("rho-solve", "recover the slope from a space-time gradient");
  rho->add_option("--g1", g1, "spatial slope along the first axis")->required();
  rho->add_option("--g2", g2, "spatial slope along the second axis")->required();
  rho->add_option("--gt", gt, "time slope (nonpositive)")->required();
  rho->add_option("--M", M, "slope-class parameter for the membership report")->capture_default_str();

  double step = 0.02;
  auto* tab = app.add_subcommand("speed-table", "tabulate the growth speed over the slope set");
  tab->add_option("--M", M, "slope-class parameter")->capture_default_str();
  tab->add_option("--step", step, "slope grid spacing")->capture_default_str();
  tab->add_option("--out", out_dir, "write speed_table.csv here instead of stdout");
  tab->add_flag("--quiet", quiet, "suppress progress lines");

  std::string size = "small";
  auto* chk = app.add_subcommand("check", "randomized property battery with a JSON report");
  chk->add_option("--size", size, "trial counts preset")
      ->capture_default_str()
      ->check(CLI::IsMember({"small", "medium", "large"}));
  chk->add_option("--seeds", seed, "base seed for the battery")->capture_default_str();
  chk->add_option("--out", out_dir, "directory for report.json");
  chk->add_flag("--quiet", quiet, "suppress progress lines");

  int L_override = 0;
  auto* til = app.add_subcommand("export-tiling", "rhombus tiling of the initial condition");
  til->add_option("--config", config_path, "experiment config (JSON)")->required();
  til->add_option("--L", L_override, "lattice scale (default: first config L)");
  til->add_option("--out", out_dir, "output directory (default: config out_dir)");
  til->add_flag("--quiet", quiet, "suppress progress lines");

  int rc = 0;
  sim->callback([&] { rc = cmd_simulate(config_path, sim_seed->count() > 0, seed, out_dir, quiet); });
  spd->callback([&] {
    rc = cmd_speed(rho1, rho2, M, L, T, nseeds, seed, alpha, threads, out_dir, quiet);
  });
  hyd->callback([&] {
    rc = cmd_hydro(config_path, hyd_seed->count() > 0, seed, out_dir, threads, threshold, quiet);
  });
  hjs->callback([&] { rc = cmd_hj_solve(config_path, out_dir, quiet); });
  rho->callback([&] { rc = cmd_rho_solve(g1, g2, gt, M); });
  tab->callback([&] { rc = cmd_speed_table(M, step, out_dir, quiet); });
  chk->callback([&] { rc = cmd_check(size, seed, out_dir, quiet); });
  til->callback([&] { rc = cmd_export_tiling(config_path, L_override, out_dir, quiet); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return rc;
}
