#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include <json.hpp>

#include "akpz/csv.hpp"
#include "akpz/harness.hpp"

using namespace akpz;

namespace {

MacroProfile shock_profile() {
  return envelope_profile(ProfileOp::max_of, {{0.5, 0.2, 0.0}, {0.2, 0.5, 0.0}}, 4);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(bool(in));
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("discretized profiles floor the rescaled values") {
  MacroProfile zero = linear_profile({0.0, 0.0}, 4);
  HeightField hz = discretize_profile(zero, 8, {-4, -4}, 9, 9);
  for (std::int64_t v : hz.heights()) CHECK(v == 0);

  MacroProfile quarter = linear_profile({0.25, 0.25}, 4);
  HeightField hq = discretize_profile(quarter, 8, {-4, -4}, 12, 12);
  CHECK(hq.height_at({3, 2}) == 1);
  CHECK(hq.height_at({0, 0}) == 0);
  CHECK(hq.height_at({-1, -2}) == -1);

  MacroProfile sh = shock_profile();
  HeightField hs = discretize_profile(sh, 16, {-8, -8}, 17, 17);
  for (int i = 0; i < 17; ++i)
    for (int j = 0; j < 17; ++j) {
      SiteCoord x{-8 + i, -8 + j};
      std::int64_t want = std::int64_t(std::floor(16.0 * sh(x.x1 / 16.0, x.x2 / 16.0)));
      CHECK(hs.height_at(x) == want);
    }
  CHECK(check_admissible(hs, 4).ok);
}

TEST_CASE("discretization error stays below one lattice unit") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 0.9), off(-0.2, 0.2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<AffinePiece> pieces;
    int np = 1 + int(rng() % 3);
    for (int p = 0; p < np; ++p) {
      double a = u(rng), b = u(rng);
      if (a + b > 0.74) {
        double s = 0.74 / (a + b);
        a *= s;
        b *= s;
      }
      pieces.push_back({a, b, off(rng)});
    }
    MacroProfile f = envelope_profile(ProfileOp::max_of, pieces, 4);
    int L = 4 + int(rng() % 13);
    HeightField h = discretize_profile(f, L, {-L, -L}, 2 * L + 1, 2 * L + 1);
    for (int i = 0; i <= 2 * L; ++i)
      for (int j = 0; j <= 2 * L; ++j) {
        SiteCoord x{-L + i, -L + j};
        double gap = f(double(x.x1) / L, double(x.x2) / L) - double(h.height_at(x)) / L;
        CHECK(gap >= -1e-12);
        CHECK(gap <= 1.0 / L + 1e-12);
      }
  }
}

TEST_CASE("profile particles agree with the height-field route") {
  MacroProfile f = shock_profile();
  const int L = 8, g = 10, nv = 2 * g + 1;
  HeightField h = discretize_profile(f, L, {-g, -g}, nv, nv);
  ParticleArray via_height = particles_from_height(h);
  ParticleArray direct = particles_from_profile(f, L, via_height.window);
  REQUIRE(via_height.window.ell_min == direct.window.ell_min);
  REQUIRE(via_height.window.ell_max == direct.window.ell_max);
  // the direct construction fills the full slot range of the window, the
  // height route only the slots its grid covers, so containment one way
  for (int ell = direct.window.ell_min; ell <= direct.window.ell_max; ++ell) {
    const auto& a = via_height.line(ell).pos2;
    const auto& b = direct.line(ell).pos2;
    for (int z2 : a) CHECK(std::find(b.begin(), b.end(), z2) != b.end());
  }

  // round trip through the reconstruction anchored at a known corner
  HeightField back = height_from_particles(direct, {-3, -3}, 7, 7, {0, 0},
                                           h.height_at({0, 0}));
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) {
      SiteCoord x{-3 + i, -3 + j};
      CHECK(back.height_at(x) == h.height_at(x));
    }
}

TEST_CASE("window arithmetic covers ball plus cushion") {
  LatticeWindow w = window_for_ball(8, 0.25, 4.0, 3.0 / 16.0);
  CHECK(w.ell_min == -10);
  CHECK(w.ell_max == 10);
  CHECK(w.z2_min == -12);
  CHECK(w.z2_max == 12);
  LatticeWindow w2 = window_for_ball(256, 0.0, 3.0, 1.0);
  CHECK(w2.ell_max == 768);
  CHECK_THROWS_AS(window_for_ball(0, 1.0, 8.0, 1.0), config_error);
  CHECK_THROWS_AS(window_for_ball(8, 1.0, -1.0, 1.0), config_error);
}

TEST_CASE("growth rate at a flat slope matches the analytic value") {
  SlopeVector rho{1.0 / 3.0, 1.0 / 3.0};
  SpeedMeasurement m = measure_speed(rho, 4, 16, 2.0, {1, 2, 3, 4, 5, 6}, 4.0);
  CHECK(m.per_seed.size() == 6);
  CHECK(m.reference == doctest::Approx(0.27566444771089615).epsilon(1e-12));
  CHECK(std::abs(m.mean_rate - m.reference) <= 0.12);
  for (double v : m.per_seed) CHECK(v > 0.0);
}

TEST_CASE("degenerate slope never moves") {
  SpeedMeasurement m = measure_speed({0.3, 0.0}, 4, 8, 1.0, {1, 2}, 4.0);
  CHECK(m.mean_rate == 0.0);
  CHECK(m.reference == doctest::Approx(0.0));
  for (double v : m.per_seed) CHECK(v == 0.0);
}

TEST_CASE("averaging more seeds tightens the standard error") {
  SpeedMeasurement few = measure_speed({0.25, 0.25}, 4, 8, 1.0, {1, 2, 3}, 4.0);
  SpeedMeasurement many =
      measure_speed({0.25, 0.25}, 4, 8, 1.0, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}, 4.0);
  CHECK(few.std_error > 0.0);
  CHECK(many.std_error < few.std_error);
}

TEST_CASE("seed work is independent of the thread count") {
  SpeedMeasurement a = measure_speed({0.3, 0.3}, 4, 8, 1.0, {1, 2, 3, 4, 5}, 4.0, 1);
  SpeedMeasurement b = measure_speed({0.3, 0.3}, 4, 8, 1.0, {1, 2, 3, 4, 5}, 4.0, 3);
  CHECK(a.per_seed == b.per_seed);
  CHECK(a.mean_rate == b.mean_rate);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("config parsing applies schema and defaults") {
  const char* text = R"({
    "version": 1,
    "profile": {"op": "max", "pieces": [[0.5, 0.2, 0.0], [0.2, 0.5, 0.0]]},
    "L": [64, 128],
    "T": 0.5,
    "seeds": [11, 12],
    "times": [0.25, 0.5]
  })";
  ExperimentConfig cfg = parse_experiment_json(text);
  CHECK(cfg.M == 4);
  CHECK(cfg.Ls == std::vector<int>{64, 128});
  CHECK(cfg.T == 0.5);
  CHECK(cfg.R == 1.0);
  CHECK(cfg.alpha == 8.0);
  CHECK(cfg.dx == doctest::Approx(1.0 / 128.0));
  CHECK(cfg.sample_spacing == doctest::Approx(1.0 / 16.0));
  CHECK(cfg.seeds == std::vector<std::uint64_t>{11, 12});
  CHECK(cfg.times == std::vector<double>{0.25, 0.5});
  CHECK(cfg.threads == 1);
  CHECK(cfg.profile(1.0, 1.0) == doctest::Approx(0.7));

  ExperimentConfig lin = parse_experiment_json(
      R"({"version": 1, "profile": {"op": "linear", "slope": [0.25, 0.25]}, "L": 16})");
  CHECK(lin.profile(2.0, 2.0) == doctest::Approx(1.0));
  CHECK(lin.seeds.empty());

  CHECK_THROWS_AS(parse_experiment_json("{"), config_error);
  CHECK_THROWS_AS(parse_experiment_json(R"({"profile": {"op": "linear", "slope": [0.1, 0.1]}})"),
                  config_error);
  CHECK_THROWS_AS(parse_experiment_json(R"({"version": 2, "profile": {"op": "linear", "slope": [0.1, 0.1]}})"),
                  config_error);
  CHECK_THROWS_AS(
      parse_experiment_json(R"({"version": 1, "profile": {"op": "linear", "slope": [0.1, 0.1]}, "sedes": [1]})"),
      config_error);
  CHECK_THROWS_AS(
      parse_experiment_json(R"({"version": 1, "profile": {"op": "spline", "knots": [1]}})"),
      config_error);
  CHECK_THROWS_AS(
      parse_experiment_json(R"({"version": 1, "profile": {"op": "linear", "slope": [0.6, 0.6]}})"),
      config_error);
  CHECK_THROWS_AS(
      parse_experiment_json(R"({"version": 1, "profile": {"op": "linear", "slope": [0.1, 0.1]}, "L": [64, 64]})"),
      config_error);

  std::ofstream("tmp_cfg.json") << text;
  ExperimentConfig from_file = parse_experiment_config("tmp_cfg.json");
  CHECK(from_file.Ls == cfg.Ls);
  std::remove("tmp_cfg.json");
  CHECK_THROWS_AS(parse_experiment_config("no_such_config.json"), config_error);
}

TEST_CASE("hydro study reports shrinking errors at micro scale") {
  ExperimentConfig cfg;
  cfg.profile = shock_profile();
  cfg.M = 4;
  cfg.Ls = {4, 8};
  cfg.T = 0.25;
  cfg.R = 0.5;
  cfg.seeds = {1, 2};
  cfg.alpha = 4.0;
  cfg.dx = 1.0 / 16.0;
  cfg.sample_spacing = 0.25;
  cfg.times = {0.125, 0.25};

  ConvergenceReport rep = hydro_convergence(cfg, 0.5);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.seeds == cfg.seeds);
  for (const LErrorRow& row : rep.rows) {
    CHECK(row.per_seed.size() == 2);
    CHECK(row.mean_sup_error > 0.0);
    CHECK(row.mean_sup_error < 1.0);
    CHECK(row.min_sup_error <= row.mean_sup_error);
    CHECK(row.max_sup_error >= row.mean_sup_error);
  }
  bool dec = rep.rows[1].mean_sup_error < rep.rows[0].mean_sup_error;
  CHECK(rep.decreasing == dec);
  CHECK(rep.final_error == doctest::Approx(rep.rows[1].mean_sup_error));
  CHECK(rep.pass == (dec && rep.final_error <= 0.5));

  write_convergence_csv(rep, "tmp_conv.csv");
  CsvTable t = read_csv_table("tmp_conv.csv");
  CHECK(t.rows.size() == 4);
  CHECK(t.column("sup_error") == 2);
  std::remove("tmp_conv.csv");
}

TEST_CASE("a frozen clock leaves only the discretization gap") {
  ExperimentConfig cfg;
  cfg.profile = shock_profile();
  cfg.Ls = {4, 8, 16};
  cfg.T = 0.0;
  cfg.R = 0.5;
  cfg.seeds = {9};
  cfg.alpha = 4.0;
  cfg.dx = 1.0 / 16.0;
  cfg.sample_spacing = 0.25;
  cfg.times = {0.0};

  ConvergenceReport rep = hydro_convergence(cfg, 1.0);
  REQUIRE(rep.rows.size() == 3);
  for (const LErrorRow& row : rep.rows) {
    double expected = 0.0;
    for (double x1 = -0.5; x1 <= 0.5 + 1e-9; x1 += 0.25)
      for (double x2 = -0.5; x2 <= 0.5 + 1e-9; x2 += 0.25) {
        double f = cfg.profile(x1, x2);
        double hL = std::floor(row.L * f) / row.L;
        expected = std::max(expected, std::abs(hL - f));
      }
    CHECK(row.mean_sup_error == doctest::Approx(expected).epsilon(1e-12));
    CHECK(row.mean_sup_error <= 1.0 / row.L + 1e-12);
  }
}

TEST_CASE("hydro config validation") {
  ExperimentConfig cfg;
  cfg.profile = shock_profile();
  cfg.Ls = {4};
  cfg.T = 0.25;
  cfg.R = 0.5;
  cfg.seeds = {1};
  cfg.dx = 1.0 / 16.0;
  cfg.sample_spacing = 0.25;
  cfg.times = {0.25};

  ExperimentConfig bad = cfg;
  bad.sample_spacing = 0.3;  // neither grid nor lattice aligned
  CHECK_THROWS_AS(hydro_convergence(bad), config_error);
  bad = cfg;
  bad.times = {};
  CHECK_THROWS_AS(hydro_convergence(bad), config_error);
  bad = cfg;
  bad.times = {0.5};
  CHECK_THROWS_AS(hydro_convergence(bad), config_error);
  bad = cfg;
  bad.Ls = {};
  CHECK_THROWS_AS(hydro_convergence(bad), config_error);
}

TEST_CASE("property battery passes at micro scale") {
  BatterySpec spec;
  spec.monotonicity = 6;
  spec.translation = 4;
  spec.locality = 6;
  spec.staircase = 5;
  spec.truncation = 4;
  spec.modulus = 2;
  spec.seed0 = 7;
  auto checks = property_battery(spec);
  REQUIRE(checks.size() == 7);
  const char* names[] = {"monotonicity", "translation-invariance", "locality", "staircase",
                         "truncation",   "temporal-modulus",       "interlacing-guard"};
  for (std::size_t i = 0; i < checks.size(); ++i) {
    CHECK(checks[i].name == names[i]);
    CHECK(checks[i].pass);
    CHECK(checks[i].violations == 0);
  }
  CHECK(checks[0].trials == 6);
  CHECK(checks[2].trials == 6);

  write_report_json("tmp_report.json", "check", checks);
  auto j = nlohmann::ordered_json::parse(slurp("tmp_report.json"));
  CHECK(j.at("version") == 1);
  CHECK(j.at("command") == "check");
  CHECK(j.at("checks").size() == 7);
  CHECK(j.at("overall_pass") == true);

  write_report_json("tmp_report2.json", "check", checks);
  CHECK(slurp("tmp_report.json") == slurp("tmp_report2.json"));
  std::remove("tmp_report.json");
  std::remove("tmp_report2.json");
}

TEST_CASE("modulus scan flags an absurd cap") {
  CheckResult r = run_modulus_scan(1, 3, 1e-3);
  CHECK(!r.pass);
  CHECK(r.violations == 1);
}

TEST_CASE("speed table serialization") {
  SpeedMeasurement m = measure_speed({0.25, 0.25}, 4, 8, 1.0, {1, 2}, 4.0);
  write_speed_csv({m, m}, "tmp_speed.csv");
  CsvTable t = read_csv_table("tmp_speed.csv");
  CHECK(t.rows.size() == 2);
  CHECK(t.column("mean_rate") == 5);
  CHECK(t.rows[0] == t.rows[1]);
  std::remove("tmp_speed.csv");
}
