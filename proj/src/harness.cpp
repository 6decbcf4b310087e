#include "akpz/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <random>
#include <thread>

#include <json.hpp>

#include "akpz/csv.hpp"
#include "akpz/rng.hpp"

namespace akpz {

namespace {

std::int64_t floor_i64(double v) { return std::int64_t(std::floor(v)); }

void format_into(std::string& out, const char* fmt, ...) __attribute__((format(printf, 2, 3)));
void format_into(std::string& out, const char* fmt, ...) {
  char buf[256];
  va_list ap;
  va_start(ap, fmt);
  vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  out += buf;
}

}  // namespace

HeightField discretize_profile(const MacroProfile& f, int L, SiteCoord origin, int nx1, int nx2) {
  if (L <= 0 || nx1 < 2 || nx2 < 2) throw config_error("discretize_profile: bad grid");
  std::vector<std::int64_t> H(std::size_t(nx1) * nx2);
  for (int j = 0; j < nx2; ++j)
    for (int i = 0; i < nx1; ++i)
      H[std::size_t(i) + std::size_t(nx1) * j] =
          floor_i64(L * f(double(origin.x1 + i) / L, double(origin.x2 + j) / L));

  HeightField h;
  h.origin = origin;
  h.origin_height = H[0];
  h.nx1 = nx1;
  h.nx2 = nx2;
  h.grad1.resize(std::size_t(nx1 - 1) * nx2);
  h.grad2.resize(std::size_t(nx1) * (nx2 - 1));
  for (int j = 0; j < nx2; ++j)
    for (int i = 0; i + 1 < nx1; ++i) {
      std::int64_t d = H[std::size_t(i) + 1 + std::size_t(nx1) * j] - H[std::size_t(i) + std::size_t(nx1) * j];
      if (d < 0 || d > 1) throw invariant_error("discretize_profile: slope outside the unit range");
      h.set_g1(i, j, std::uint8_t(d));
    }
  for (int j = 0; j + 1 < nx2; ++j)
    for (int i = 0; i < nx1; ++i) {
      std::int64_t d = H[std::size_t(i) + std::size_t(nx1) * (j + 1)] - H[std::size_t(i) + std::size_t(nx1) * j];
      if (d < 0 || d > 1) throw invariant_error("discretize_profile: slope outside the unit range");
      h.set_g2(i, j, std::uint8_t(d));
    }

  AdmissibilityReport rep = check_admissible(h, f.M);
  if (!rep.ok)
    throw invariant_error("discretize_profile: " + (rep.violations.empty()
                                                        ? std::string("admissibility failure")
                                                        : rep.violations.front().detail));
  return h;
}

ParticleArray particles_from_profile(const MacroProfile& f, int L, const LatticeWindow& window) {
  if (L <= 0) throw config_error("particles_from_profile: L must be positive");
  if (window.line_count() < 3)
    throw config_error("particles_from_profile: window needs at least three lines");
  ParticleArray cfg;
  cfg.window = window;
  cfg.lines.resize(std::size_t(window.line_count()));
  for (int ell = window.ell_min; ell <= window.ell_max; ++ell) {
    ParticleLine& ln = cfg.line(ell);
    int z2 = window.z2_min;
    if (((z2 % 2) + 2) % 2 != ((ell % 2) + 2) % 2) ++z2;
    for (; z2 <= window.z2_max; z2 += 2) {
      // slot (ell, z2) sits over the dual square with lower corner x
      int x1 = (z2 - ell) / 2;
      int x2 = (z2 + ell) / 2;
      std::int64_t lo = floor_i64(L * f(double(x1) / L, double(x2) / L));
      std::int64_t hi = floor_i64(L * f(double(x1 + 1) / L, double(x2 + 1) / L));
      if (hi == lo) ln.pos2.push_back(z2);
    }
  }
  assign_interlacing_labels(cfg);
  cfg.validate();
  return cfg;
}

LatticeWindow window_for_ball(int L, double R, double alpha, double T) {
  if (L <= 0 || R < 0.0 || alpha <= 0.0 || T < 0.0) throw config_error("window_for_ball: bad arguments");
  int r = int(std::ceil(L * R - 1e-9));
  int W = 2 * r + int(std::ceil(alpha * T * L - 1e-9));
  if (W < 2) W = 2;
  return {-W, W, -W - 2, W + 2};
}

namespace {

// Runs fn(i) for i in [0, n), spread over up to `threads` workers. Each index
// owns its output slot, so the result is identical for any thread count.
template <class Fn>
void for_each_index(int threads, std::size_t n, Fn fn) {
  int use = std::max(1, std::min<int>(threads, int(n)));
  if (use == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs;
  errs.resize(std::size_t(use));
  for (int w = 0; w < use; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = std::size_t(w); i < n; i += std::size_t(use)) fn(i);
      } catch (...) {
        errs[std::size_t(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace

SpeedMeasurement measure_speed(SlopeVector rho, int M, int L, double T,
                               const std::vector<std::uint64_t>& seeds, double alpha, int threads,
                               ProgressFn progress) {
  if (L <= 0 || T <= 0.0 || alpha <= 0.0) throw config_error("measure_speed: bad arguments");
  if (seeds.empty()) throw config_error("measure_speed: need at least one seed");
  MacroProfile f = linear_profile(rho, M);
  LatticeWindow window = window_for_ball(L, 0.0, alpha, T);
  if (progress) {
    std::string msg;
    format_into(msg, "speed rho=(%g,%g) L=%d T=%g: %d seeds over lines [%lld,%lld]", rho.rho1,
                rho.rho2, L, T, int(seeds.size()), (long long)window.ell_min,
                (long long)window.ell_max);
    progress(msg);
  }
  ParticleArray initial = particles_from_profile(f, L, window);

  SpeedMeasurement m;
  m.rho = rho;
  m.L = L;
  m.T = T;
  m.reference = speed(rho);
  m.per_seed.resize(seeds.size());
  const double horizon = T * L;
  for_each_index(threads, seeds.size(), [&](std::size_t i) {
    RunSpec spec;
    spec.monitored = {{0, 0}};
    RunResult res = run_streamed(initial, window, horizon, seeds[i], spec);
    m.per_seed[i] = double(res.trajectories[0].value_at(to_ns(horizon))) / horizon;
  });

  for (double v : m.per_seed) m.mean_rate += v;
  m.mean_rate /= double(m.per_seed.size());
  if (m.per_seed.size() > 1) {
    double ss = 0.0;
    for (double v : m.per_seed) ss += (v - m.mean_rate) * (v - m.mean_rate);
    m.std_error = std::sqrt(ss / double(m.per_seed.size() - 1) / double(m.per_seed.size()));
  }
  if (progress) {
    std::string msg;
    format_into(msg, "speed rho=(%g,%g) L=%d done: mean %.6f (reference %.6f)", rho.rho1, rho.rho2,
                L, m.mean_rate, m.reference);
    progress(msg);
  }
  return m;
}

namespace {

using ojson = nlohmann::ordered_json;

void reject_unknown_keys(const ojson& j, std::initializer_list<const char*> allowed,
                         const char* where) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) known = true;
    if (!known) throw config_error(std::string("unknown config key '") + item.key() + "' in " + where);
  }
}

MacroProfile profile_from_json(const ojson& j, int M) {
  if (!j.is_object() || !j.contains("op")) throw config_error("profile needs an 'op' field");
  std::string op = j.at("op").get<std::string>();
  if (op == "linear") {
    reject_unknown_keys(j, {"op", "slope", "offset"}, "profile");
    if (!j.contains("slope") || !j.at("slope").is_array() || j.at("slope").size() != 2)
      throw config_error("linear profile needs slope = [rho1, rho2]");
    return linear_profile({j.at("slope").at(0).get<double>(), j.at("slope").at(1).get<double>()}, M,
                          j.value("offset", 0.0));
  }
  if (op != "max" && op != "min") throw config_error("profile op must be linear, max or min");
  reject_unknown_keys(j, {"op", "pieces"}, "profile");
  if (!j.contains("pieces") || !j.at("pieces").is_array() || j.at("pieces").empty())
    throw config_error("envelope profile needs a nonempty pieces array");
  std::vector<AffinePiece> pieces;
  for (const auto& p : j.at("pieces")) {
    if (!p.is_array() || p.size() != 3) throw config_error("each piece must be [a1, a2, c]");
    pieces.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
  }
  return envelope_profile(op == "max" ? ProfileOp::max_of : ProfileOp::min_of, pieces, M);
}

std::vector<int> int_list(const ojson& j, const char* what) {
  std::vector<int> out;
  if (j.is_number_integer()) {
    out.push_back(j.get<int>());
  } else if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<int>());
  } else {
    throw config_error(std::string(what) + " must be an integer or a list");
  }
  return out;
}

}  // namespace

ExperimentConfig parse_experiment_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const std::exception& e) {
    throw config_error(std::string("config parse failure: ") + e.what());
  }
  if (!j.is_object()) throw config_error("config root must be an object");
  reject_unknown_keys(j,
                      {"version", "profile", "M", "L", "T", "R", "seeds", "alpha", "dx",
                       "sample_spacing", "times", "threads", "out_dir"},
                      "config");
  if (!j.contains("version") || !j.at("version").is_number_integer() || j.at("version").get<int>() != 1)
    throw config_error("config version must be 1");

  ExperimentConfig cfg;
  cfg.M = j.value("M", 4);
  if (cfg.M < 2) throw config_error("M must be at least 2");
  if (!j.contains("profile")) throw config_error("config needs a profile");
  cfg.profile = profile_from_json(j.at("profile"), cfg.M);
  if (j.contains("L")) {
    cfg.Ls = int_list(j.at("L"), "L");
    for (std::size_t i = 0; i < cfg.Ls.size(); ++i) {
      if (cfg.Ls[i] <= 0) throw config_error("L entries must be positive");
      if (i > 0 && cfg.Ls[i] <= cfg.Ls[i - 1]) throw config_error("L list must be strictly increasing");
    }
  }
  cfg.T = j.value("T", 1.0);
  if (cfg.T < 0.0) throw config_error("T must be nonnegative");
  cfg.R = j.value("R", 1.0);
  if (cfg.R <= 0.0) throw config_error("R must be positive");
  if (j.contains("seeds")) {
    if (!j.at("seeds").is_array()) throw config_error("seeds must be a list");
    for (const auto& s : j.at("seeds")) cfg.seeds.push_back(s.get<std::uint64_t>());
  }
  cfg.alpha = j.value("alpha", 8.0);
  if (cfg.alpha <= 0.0) throw config_error("alpha must be positive");
  cfg.dx = j.value("dx", 1.0 / 128.0);
  if (cfg.dx <= 0.0) throw config_error("dx must be positive");
  cfg.sample_spacing = j.value("sample_spacing", 1.0 / 16.0);
  if (cfg.sample_spacing <= 0.0) throw config_error("sample_spacing must be positive");
  if (j.contains("times")) {
    const auto& t = j.at("times");
    if (t.is_number()) {
      cfg.times.push_back(t.get<double>());
    } else if (t.is_array()) {
      for (const auto& v : t) cfg.times.push_back(v.get<double>());
    } else {
      throw config_error("times must be a number or a list");
    }
  }
  cfg.threads = j.value("threads", 1);
  if (cfg.threads < 1) throw config_error("threads must be at least 1");
  cfg.out_dir = j.value("out_dir", std::string("."));

  ProfileClassReport pc = check_profile_class(cfg.profile, cfg.R + 1.0, std::max(cfg.sample_spacing, 0.05));
  if (!pc.ok) throw config_error("profile fails the slope class check: " + pc.detail);
  return cfg;
}

ExperimentConfig parse_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot read config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_experiment_json(text);
}

ConvergenceReport hydro_convergence(const ExperimentConfig& cfg, double threshold,
                                    ProgressFn progress) {
  if (cfg.Ls.empty()) throw config_error("hydro_convergence: L list is empty");
  if (cfg.seeds.empty()) throw config_error("hydro_convergence: seed list is empty");
  if (cfg.times.empty()) throw config_error("hydro_convergence: times list is empty");
  for (double t : cfg.times)
    if (t < 0.0 || t > cfg.T + 1e-12) throw config_error("hydro_convergence: sample time outside [0, T]");
  double cells = cfg.sample_spacing / cfg.dx;
  if (std::abs(cells - std::round(cells)) > 1e-9)
    throw config_error("hydro_convergence: sample_spacing must be a multiple of dx");
  for (int L : cfg.Ls) {
    double sites = cfg.sample_spacing * L;
    if (std::abs(sites - std::round(sites)) > 1e-9)
      throw config_error("hydro_convergence: sample_spacing must land on lattice sites for every L");
  }

  if (progress) {
    std::string msg;
    format_into(msg, "reference solve: dx=%g over [-%g,%g]^2 up to T=%g", cfg.dx, cfg.R, cfg.R,
                cfg.T);
    progress(msg);
  }
  GridSolution ref =
      solve(cfg.profile, cfg.T, -cfg.R, -cfg.R, cfg.R, cfg.R, cfg.dx, cfg.times);

  const int K = int(std::floor(cfg.R / cfg.sample_spacing + 1e-9));
  ConvergenceReport rep;
  rep.seeds = cfg.seeds;
  rep.threshold = threshold;

  for (int L : cfg.Ls) {
    auto t_start = std::chrono::steady_clock::now();
    const int step = int(std::lround(cfg.sample_spacing * L));
    std::vector<SiteCoord> sites;
    std::vector<double> xs1, xs2, h0;
    for (int k1 = -K; k1 <= K; ++k1)
      for (int k2 = -K; k2 <= K; ++k2) {
        sites.push_back({k1 * step, k2 * step});
        xs1.push_back(k1 * cfg.sample_spacing);
        xs2.push_back(k2 * cfg.sample_spacing);
        h0.push_back(double(floor_i64(L * cfg.profile(k1 * cfg.sample_spacing, k2 * cfg.sample_spacing))));
      }

    LatticeWindow window = window_for_ball(L, cfg.R, cfg.alpha, cfg.T);
    if (progress) {
      std::string msg;
      format_into(msg, "L=%d: %d seeds, lines [%lld,%lld], horizon %g", L, int(cfg.seeds.size()),
                  (long long)window.ell_min, (long long)window.ell_max, cfg.T * L);
      progress(msg);
    }
    ParticleArray initial = particles_from_profile(cfg.profile, L, window);

    LErrorRow row;
    row.L = L;
    row.per_seed.resize(cfg.seeds.size());
    for_each_index(cfg.threads, cfg.seeds.size(), [&](std::size_t si) {
      RunSpec spec;
      spec.monitored = sites;
      RunResult res = run_streamed(initial, window, cfg.T * L, cfg.seeds[si], spec);
      double sup = 0.0;
      for (std::size_t m = 0; m < sites.size(); ++m) {
        for (double t : cfg.times) {
          double J = double(res.trajectories[m].value_at(to_ns(t * L)));
          double Hs = (h0[m] - J) / double(L);
          sup = std::max(sup, std::abs(Hs - ref.value_at(xs1[m], xs2[m], t)));
        }
      }
      row.per_seed[si] = sup;
    });

    row.min_sup_error = *std::min_element(row.per_seed.begin(), row.per_seed.end());
    row.max_sup_error = *std::max_element(row.per_seed.begin(), row.per_seed.end());
    for (double e : row.per_seed) row.mean_sup_error += e;
    row.mean_sup_error /= double(row.per_seed.size());
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    if (progress) {
      std::string msg;
      format_into(msg, "L=%d done: mean sup error %.5f in %.1fs", L, row.mean_sup_error,
                  row.seconds);
      progress(msg);
    }
    rep.rows.push_back(std::move(row));
  }

  rep.decreasing = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (rep.rows[i].mean_sup_error >= rep.rows[i - 1].mean_sup_error) rep.decreasing = false;
  rep.final_error = rep.rows.back().mean_sup_error;
  rep.pass = rep.decreasing && rep.final_error <= threshold;
  return rep;
}

namespace {

SlopeVector random_interior_slope(std::mt19937_64& rng, int M) {
  std::uniform_real_distribution<double> u(0.02, 1.0);
  for (;;) {
    double a = u(rng), b = u(rng);
    if (a + b <= 1.0 - 1.0 / M - 0.02) return {a, b};
  }
}

MacroProfile random_profile(std::mt19937_64& rng, int M) {
  std::uniform_int_distribution<int> np(1, 3);
  std::uniform_real_distribution<double> off(-0.25, 0.25);
  int n = np(rng);
  std::vector<AffinePiece> pieces;
  for (int i = 0; i < n; ++i) {
    SlopeVector s = random_interior_slope(rng, M);
    pieces.push_back({s.rho1, s.rho2, off(rng)});
  }
  bool use_min = n > 1 && (rng() & 1) != 0;
  return envelope_profile(use_min ? ProfileOp::min_of : ProfileOp::max_of, pieces, M);
}

HeightField field_from_heights(SiteCoord origin, int nx1, int nx2,
                               const std::vector<std::int64_t>& H) {
  HeightField h;
  h.origin = origin;
  h.origin_height = H[0];
  h.nx1 = nx1;
  h.nx2 = nx2;
  h.grad1.resize(std::size_t(nx1 - 1) * nx2);
  h.grad2.resize(std::size_t(nx1) * (nx2 - 1));
  for (int j = 0; j < nx2; ++j)
    for (int i = 0; i + 1 < nx1; ++i)
      h.set_g1(i, j, std::uint8_t(H[std::size_t(i) + 1 + std::size_t(nx1) * j] -
                                  H[std::size_t(i) + std::size_t(nx1) * j]));
  for (int j = 0; j + 1 < nx2; ++j)
    for (int i = 0; i < nx1; ++i)
      h.set_g2(i, j, std::uint8_t(H[std::size_t(i) + std::size_t(nx1) * (j + 1)] -
                                  H[std::size_t(i) + std::size_t(nx1) * j]));
  return h;
}

HeightField field_max(const HeightField& a, const HeightField& b) {
  std::vector<std::int64_t> ha = a.heights(), hb = b.heights();
  for (std::size_t i = 0; i < ha.size(); ++i) ha[i] = std::max(ha[i], hb[i]);
  return field_from_heights(a.origin, a.nx1, a.nx2, ha);
}

HeightField field_min(const HeightField& a, const HeightField& b) {
  std::vector<std::int64_t> ha = a.heights(), hb = b.heights();
  for (std::size_t i = 0; i < ha.size(); ++i) ha[i] = std::min(ha[i], hb[i]);
  return field_from_heights(a.origin, a.nx1, a.nx2, ha);
}

// H_a(x, .) <= H_b(x, .) on [0, horizon], checked at every jump of either
// counter. Heights only move at jumps, so this is exact.
bool dominated_at(std::int64_t h0a, std::int64_t h0b, const StepFunction& ja,
                  const StepFunction& jb, std::int64_t horizon_ns) {
  auto ok_at = [&](std::int64_t t) {
    return h0a - ja.value_at(t) <= h0b - jb.value_at(t);
  };
  if (!ok_at(0) || !ok_at(horizon_ns)) return false;
  for (std::int64_t t : ja.times_ns)
    if (t <= horizon_ns && !ok_at(t)) return false;
  for (std::int64_t t : jb.times_ns)
    if (t <= horizon_ns && !ok_at(t)) return false;
  return true;
}

}  // namespace

CheckResult run_monotonicity_trials(int n, std::uint64_t seed0) {
  CheckResult res{"monotonicity", n, 0, false, ""};
  const int L = 8, g = 9, nv = 2 * g + 1;
  const double T = 1.5;
  for (int trial = 0; trial < n; ++trial) {
    std::mt19937_64 rng(mix_key(seed0, std::uint64_t(trial)));
    MacroProfile fa = random_profile(rng, 4);
    MacroProfile fb = random_profile(rng, 4);
    HeightField ha = discretize_profile(fa, L, {-g, -g}, nv, nv);
    HeightField hb0 = discretize_profile(fb, L, {-g, -g}, nv, nv);
    hb0.shift(std::int64_t(rng() % 3));
    HeightField hb = field_max(ha, hb0);

    ParticleArray pa = particles_from_height(ha);
    ParticleArray pb = particles_from_height(hb);
    EventStream ev = sample_events(pa.window, T, mix_key(seed0, 0x6d6f6e6f + std::uint64_t(trial)));

    RunSpec spec;
    for (int d1 = -3; d1 <= 3; ++d1)
      for (int d2 = -3; d2 <= 3; ++d2) spec.monitored.push_back({d1, d2});
    RunResult ra = run(pa, ev, spec);
    RunResult rb = run(pb, ev, spec);

    bool bad = false;
    for (std::size_t m = 0; m < spec.monitored.size() && !bad; ++m) {
      SiteCoord s = spec.monitored[m];
      if (!dominated_at(ha.height_at(s), hb.height_at(s), ra.trajectories[m], rb.trajectories[m],
                        to_ns(T)))
        bad = true;
    }
    if (bad) {
      ++res.violations;
      if (res.details.empty()) format_into(res.details, "first violation at trial %d", trial);
    }
  }
  res.pass = res.violations == 0;
  return res;
}

CheckResult run_translation_trials(int n, std::uint64_t seed0) {
  CheckResult res{"translation-invariance", n, 0, false, ""};
  const int L = 8, g = 6, nv = 2 * g + 1;
  const double T = 1.0;
  for (int trial = 0; trial < n; ++trial) {
    std::mt19937_64 rng(mix_key(seed0, 0x74726e73 + std::uint64_t(trial)));
    MacroProfile f = random_profile(rng, 4);
    HeightField h = discretize_profile(f, L, {-g, -g}, nv, nv);
    ParticleArray p = particles_from_height(h);
    EventStream ev = sample_events(p.window, T, rng());
    std::int64_t c = std::int64_t(rng() % 100) - 50;
    const int d1 = int(rng() % 7) - 3, d2 = int(rng() % 7) - 3;

    std::vector<SiteCoord> sites;
    for (int i = -2; i <= 2; ++i)
      for (int j = -2; j <= 2; ++j) sites.push_back({i, j});

    RunSpec spec;
    spec.monitored = sites;
    spec.origin_height = h.height_at({0, 0});
    RunResult r0 = run(p, ev, spec);
    // a constant height offset moves no particle, so crossings are untouched
    spec.origin_height = h.height_at({0, 0}) + c;
    RunResult rc = run(p, ev, spec);

    // rigid lattice translation of the configuration, the realization and
    // the monitors together; dual coordinates shift by (d2-d1, d1+d2)
    HeightField hs = h;
    hs.origin = {h.origin.x1 + d1, h.origin.x2 + d2};
    ParticleArray ps = particles_from_height(hs);
    const std::int64_t dl = d2 - d1, dz = d1 + d2;
    EventStream evs = ev;
    evs.window = ps.window;
    for (Event& e : evs.events) {
      e.line += dl;
      e.z2 += dz;
    }
    RunSpec sspec;
    for (SiteCoord x : sites) sspec.monitored.push_back({x.x1 + d1, x.x2 + d2});
    sspec.origin_height = h.height_at({0, 0});
    RunResult rs = run(ps, evs, sspec);

    bool bad = false;
    for (std::size_t m = 0; m < sites.size(); ++m) {
      if (r0.trajectories[m].times_ns != rc.trajectories[m].times_ns) bad = true;
      if (r0.trajectories[m].times_ns != rs.trajectories[m].times_ns) bad = true;
    }
    if (bad) {
      ++res.violations;
      if (res.details.empty())
        format_into(res.details, "first violation at trial %d (d=(%d,%d))", trial, d1, d2);
    }
  }
  res.pass = res.violations == 0;
  return res;
}

CheckResult run_locality_trials(int n, std::uint64_t seed0) {
  CheckResult res{"locality", 0, 0, false, ""};
  // dependence patches reach 2*ell-1 sites below x in each coordinate, so with
  // x in [-2,2]^2 and ell <= 5 the grid must cover coordinate -11 at least
  const int L = 8, g = 12, nv = 2 * g + 1;
  std::int64_t attempts = 0, dipped = 0;
  const std::int64_t attempt_cap = std::int64_t(n) * 60;
  while (res.trials < n && attempts < attempt_cap) {
    std::mt19937_64 rng(mix_key(seed0, 0x6c6f6361 + std::uint64_t(attempts)));
    ++attempts;
    MacroProfile fa = random_profile(rng, 4);
    MacroProfile fb = random_profile(rng, 4);
    MacroProfile fc = random_profile(rng, 4);
    HeightField ha = discretize_profile(fa, L, {-g, -g}, nv, nv);
    HeightField hb = discretize_profile(fb, L, {-g, -g}, nv, nv);
    HeightField hc = discretize_profile(fc, L, {-g, -g}, nv, nv);
    hc.shift(2);
    HeightField hp = field_min(field_max(ha, hb), hc);
    std::vector<std::int64_t> da = ha.heights(), dp = hp.heights();
    bool has_dip = false;
    for (std::size_t i = 0; i < da.size(); ++i)
      if (dp[i] < da[i]) has_dip = true;

    int ell = 1 + int(rng() % 5);
    std::uniform_real_distribution<double> tu(double(ell), ell + 2.0);
    double t = tu(rng);
    SiteCoord x{int(rng() % 5) - 2, int(rng() % 5) - 2};
    ParticleArray pa = particles_from_height(ha);
    EventStream ev = sample_events(pa.window, t, rng());
    LocalityVerdict v = check_spacetime_locality(ha, hp, ev, x, t, ell);
    if (!v.premise_held) continue;
    ++res.trials;
    if (has_dip) ++dipped;
    if (!v.conclusion_held) {
      ++res.violations;
      if (res.details.empty())
        format_into(res.details, "first violation: attempt %lld ell=%d", (long long)(attempts - 1), ell);
    }
  }
  if (res.trials < n) {
    format_into(res.details, "premise enforcement starved: %lld/%d", (long long)res.trials, n);
    res.pass = false;
    return res;
  }
  format_into(res.details, "%lld attempts, %lld with an initial dip", (long long)attempts,
              (long long)dipped);
  res.pass = res.violations == 0;
  return res;
}

CheckResult run_staircase_trials(int n, std::uint64_t seed0) {
  CheckResult res{"staircase", n, 0, false, ""};
  const int L = 8;
  const double T = 3.0;
  for (int trial = 0; trial < n; ++trial) {
    std::mt19937_64 rng(mix_key(seed0, 0x73746372 + std::uint64_t(trial)));
    MacroProfile f = random_profile(rng, 4);
    LatticeWindow window = window_for_ball(L, 0.25, 4.0, T / 16.0);
    ParticleArray p = particles_from_profile(f, L, window);
    EventStream ev = sample_events(window, T, rng());

    RunSpec spec;
    spec.monitored = {{0, 0}, {1, 1}, {-1, 2}};
    RunResult r = run(p, ev, spec);

    bool bad = false;
    for (std::size_t m = 0; m < spec.monitored.size() && !bad; ++m) {
      SiteCoord x = spec.monitored[m];
      LinePos d = site_to_line_pos(x);
      std::uniform_real_distribution<double> su(0.0, 2.0), tu(0.2, 1.0);
      double s = su(rng), tau = tu(rng);
      std::int64_t k_true = r.trajectories[m].value_at(to_ns(s + tau)) -
                            r.trajectories[m].value_at(to_ns(s));
      for (int k = 1; k <= int(k_true) && !bad; ++k) {
        auto w = staircase_witness(ev.events, x, s, tau, k);
        if (!w) {
          bad = true;
          break;
        }
        if (int(w->size()) != k) bad = true;
        for (std::size_t i = 0; i < w->size() && !bad; ++i) {
          const Event& e = (*w)[i];
          if (e.line != d.line || e.z2 > d.z2) bad = true;
          if (e.t_ns < to_ns(s) || e.t_ns > to_ns(s + tau)) bad = true;
          if (i > 0 && ((*w)[i - 1].t_ns >= e.t_ns || (*w)[i - 1].z2 >= e.z2)) bad = true;
        }
      }
    }
    if (bad) {
      ++res.violations;
      if (res.details.empty()) format_into(res.details, "first violation at trial %d", trial);
    }
  }
  res.pass = res.violations == 0;
  return res;
}

CheckResult run_truncation_trials(int n, std::uint64_t seed0, double alpha) {
  CheckResult res{"truncation", n, 0, false, ""};
  const int L = 8;
  const double T = 3.0 / 16.0;  // 1.5 process seconds
  for (int trial = 0; trial < n; ++trial) {
    std::mt19937_64 rng(mix_key(seed0, 0x74727563 + std::uint64_t(trial)));
    MacroProfile f = random_profile(rng, 4);
    LatticeWindow inner = window_for_ball(L, 0.25, alpha, T);
    LatticeWindow outer = window_for_ball(L, 0.25, 1.5 * alpha, T);
    ParticleArray pi = particles_from_profile(f, L, inner);
    ParticleArray po = particles_from_profile(f, L, outer);

    RunSpec spec;
    for (int d1 = -1; d1 <= 1; ++d1)
      for (int d2 = -1; d2 <= 1; ++d2) spec.monitored.push_back({d1, d2});
    std::uint64_t seed = rng();
    RunResult ri = run_streamed(pi, inner, T * L, seed, spec);
    RunResult ro = run_streamed(po, outer, T * L, seed, spec);

    bool bad = false;
    for (std::size_t m = 0; m < spec.monitored.size(); ++m)
      if (ri.trajectories[m].times_ns != ro.trajectories[m].times_ns) bad = true;
    if (bad) {
      ++res.violations;
      if (res.details.empty()) format_into(res.details, "first violation at trial %d", trial);
    }
  }
  res.pass = res.violations == 0;
  return res;
}

CheckResult run_modulus_scan(int n, std::uint64_t seed0, double cap) {
  CheckResult res{"temporal-modulus", n, 0, false, ""};
  const int L = 24;
  const double T = 1.0;
  double c_emp = 0.0;
  for (int trial = 0; trial < n; ++trial) {
    std::mt19937_64 rng(mix_key(seed0, 0x6d6f6475 + std::uint64_t(trial)));
    MacroProfile f = random_profile(rng, 4);
    LatticeWindow window = window_for_ball(L, 2.0 / L, 8.0, T);
    ParticleArray p = particles_from_profile(f, L, window);

    RunSpec spec;
    spec.monitored = {{0, 0}, {1, 0}, {-1, 1}};
    RunResult r = run_streamed(p, window, T * L, rng(), spec);

    for (const StepFunction& traj : r.trajectories) {
      for (double t = 0.1; t <= 0.75; t += 0.1) {
        for (double d : {0.1, 0.2, 0.3}) {
          if (t + d > T + 1e-12) continue;
          double dj = double(traj.value_at(to_ns((t + d) * L)) - traj.value_at(to_ns(t * L)));
          double bound = L * std::sqrt((t + d) * d);
          c_emp = std::max(c_emp, dj / bound);
        }
      }
    }
  }
  format_into(res.details, "C_emp=%.4f cap=%.4f", c_emp, cap);
  if (c_emp > cap) res.violations = 1;
  res.pass = res.violations == 0;
  return res;
}

CheckResult run_negative_control() {
  CheckResult res{"interlacing-guard", 1, 0, false, ""};
  // slot (0,0) is empty; the puller at z2=4 is allowed by the line above
  // (-1 < 0) but blocked by label 1 on the line below sitting at 3
  ParticleArray cfg;
  cfg.window = {-1, 1, -6, 6};
  cfg.lines.resize(3);
  cfg.line(-1).pos2 = {-3, 3};
  cfg.line(0).pos2 = {-2, 4, 6};
  cfg.line(1).pos2 = {-1};
  assign_interlacing_labels(cfg);
  cfg.validate();

  Simulator sim(cfg);
  bool moved = sim.apply_clock(0, 0, 1000);
  bool blocked = sim.counters().blocked == 1;

  // a rule that skips the lower partner would make exactly this move
  ParticleArray mutant = cfg;
  mutant.line(0).pos2[1] = 0;
  bool caught = false;
  try {
    mutant.validate();
  } catch (const invariant_error&) {
    caught = true;
  }

  if (moved || !blocked || !caught) {
    res.violations = 1;
    format_into(res.details, "moved=%d blocked=%d caught=%d", int(moved), int(blocked), int(caught));
  } else {
    res.details = "skipping the lower partner is caught by validate";
  }
  res.pass = res.violations == 0;
  return res;
}

std::vector<CheckResult> property_battery(const BatterySpec& spec, ProgressFn progress) {
  std::vector<CheckResult> out;
  auto step = [&](CheckResult r) {
    if (progress) {
      std::string msg;
      format_into(msg, "%s: %s (%lld trials, %lld violations)", r.name.c_str(),
                  r.pass ? "pass" : "FAIL", (long long)r.trials, (long long)r.violations);
      progress(msg);
    }
    out.push_back(std::move(r));
  };
  step(run_monotonicity_trials(spec.monotonicity, spec.seed0));
  step(run_translation_trials(spec.translation, spec.seed0));
  step(run_locality_trials(spec.locality, spec.seed0));
  step(run_staircase_trials(spec.staircase, spec.seed0));
  step(run_truncation_trials(spec.truncation, spec.seed0, spec.alpha));
  step(run_modulus_scan(spec.modulus, spec.seed0, spec.modulus_cap));
  step(run_negative_control());
  return out;
}

void write_report_json(const std::string& path, const std::string& command,
                       const std::vector<CheckResult>& checks) {
  ojson j;
  j["version"] = 1;
  j["command"] = command;
  ojson arr = ojson::array();
  bool all = true;
  for (const CheckResult& c : checks) {
    arr.push_back({{"name", c.name},
                   {"trials", c.trials},
                   {"violations", c.violations},
                   {"pass", c.pass},
                   {"details", c.details}});
    all = all && c.pass;
  }
  j["checks"] = arr;
  j["overall_pass"] = all;
  std::ofstream out(path);
  if (!out) throw config_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

void write_speed_csv(const std::vector<SpeedMeasurement>& rows, const std::string& path) {
  CsvWriter w(path);
  w.header({"rho1", "rho2", "L", "T", "seeds", "mean_rate", "std_error", "reference", "abs_error"});
  for (const SpeedMeasurement& m : rows) {
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
  }
}

void write_convergence_csv(const ConvergenceReport& rep, const std::string& path) {
  CsvWriter w(path);
  w.header({"L", "seed", "sup_error"});
  for (const LErrorRow& row : rep.rows) {
    for (std::size_t i = 0; i < row.per_seed.size(); ++i) {
      w.field(std::int64_t(row.L));
      w.field(std::int64_t(rep.seeds[i]));
      w.field(row.per_seed[i]);
      w.end_row();
    }
  }
}

}  // namespace akpz
