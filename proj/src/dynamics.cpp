#include "akpz/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "akpz/csv.hpp"
#include "akpz/rng.hpp"

namespace akpz {

namespace {

SubStream site_slab_stream(std::uint64_t seed, std::int32_t line, std::int32_t z2,
                           std::int64_t slab) {
  std::uint64_t k = mix_key(seed, std::uint64_t(std::int64_t(line)));
  k = mix_key(k, std::uint64_t(std::int64_t(z2)));
  k = mix_key(k, std::uint64_t(slab));
  return SubStream(k);
}

int floor_half(int a) { return a >= 0 ? a / 2 : -((-a + 1) / 2); }

// slots on one line within the doubled-z range (parity must match the line)
std::int64_t slots_per_line(const LatticeWindow& w, int line) {
  int z0 = w.z2_min + (((line - w.z2_min) % 2) + 2) % 2;
  if (z0 > w.z2_max) return 0;
  return (w.z2_max - z0) / 2 + 1;
}

}  // namespace

std::int64_t to_ns(double seconds) { return std::llround(seconds * double(kNsPerSecond)); }

void append_slab_events(const LatticeWindow& window, std::uint64_t seed, std::int64_t slab,
                        std::int64_t t0_ns, std::int64_t t1_ns, std::vector<Event>& out) {
  std::int64_t slab_base = slab * kNsPerSecond;
  for (int line = window.ell_min; line <= window.ell_max; ++line) {
    int z0 = window.z2_min + (((line - window.z2_min) % 2) + 2) % 2;
    for (int z2 = z0; z2 <= window.z2_max; z2 += 2) {
      SubStream ss = site_slab_stream(seed, line, z2, slab);
      int n = ss.next_poisson1();
      for (int k = 0; k < n; ++k) {
        std::int64_t t = slab_base + std::int64_t(ss.next_u01() * double(kNsPerSecond));
        if (t >= t0_ns && t < t1_ns) out.push_back({t, line, z2});
      }
    }
  }
}

EventStream sample_events(const LatticeWindow& window, double T, std::uint64_t seed,
                          std::size_t memory_budget_bytes) {
  if (T < 0) throw config_error("sample_events: negative horizon");
  if (window.ell_max < window.ell_min || window.z2_max < window.z2_min)
    throw config_error("sample_events: empty window");

  std::int64_t sites = 0;
  for (int line = window.ell_min; line <= window.ell_max; ++line)
    sites += slots_per_line(window, line);
  double est_bytes = double(sites) * (T + 1.0) * sizeof(Event) * 1.2;
  if (est_bytes > double(memory_budget_bytes))
    throw budget_error("sample_events: estimated " + std::to_string(std::int64_t(est_bytes)) +
                       " bytes of events exceeds the budget of " +
                       std::to_string(memory_budget_bytes) +
                       "; use the streamed runner for horizons this large");

  EventStream stream;
  stream.seed = seed;
  stream.window = window;
  stream.t0_ns = 0;
  stream.t1_ns = to_ns(T);
  std::int64_t slabs = (stream.t1_ns + kNsPerSecond - 1) / kNsPerSecond;
  for (std::int64_t s = 0; s < slabs; ++s)
    append_slab_events(window, seed, s, 0, stream.t1_ns, stream.events);
  std::sort(stream.events.begin(), stream.events.end(), event_order);
  return stream;
}

void write_events_csv(const EventStream& stream, const std::string& path) {
  CsvWriter w(path);
  w.header({"line", "doubled_z", "time_ns"});
  for (const Event& e : stream.events) {
    w.field(std::int64_t(e.line));
    w.field(std::int64_t(e.z2));
    w.field(e.t_ns);
    w.end_row();
  }
}

std::vector<Event> read_events_csv(const std::string& path) {
  CsvTable table = read_csv_table(path);
  int ci_line = table.column("line");
  int ci_z = table.column("doubled_z");
  int ci_t = table.column("time_ns");
  std::vector<Event> events;
  events.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Event e;
    e.line = std::int32_t(std::strtol(row[std::size_t(ci_line)].c_str(), nullptr, 10));
    e.z2 = std::int32_t(std::strtol(row[std::size_t(ci_z)].c_str(), nullptr, 10));
    e.t_ns = std::strtoll(row[std::size_t(ci_t)].c_str(), nullptr, 10);
    events.push_back(e);
  }
  return events;
}

std::int64_t StepFunction::value_at(std::int64_t t_ns) const {
  return std::upper_bound(times_ns.begin(), times_ns.end(), t_ns) - times_ns.begin();
}

Simulator::Simulator(ParticleArray initial) : cfg_(std::move(initial)) {
  cfg_.validate();
  monitors_by_line_.resize(std::size_t(cfg_.window.line_count()));
}

void Simulator::set_monitors(const std::vector<SiteCoord>& sites) {
  trajectories_.assign(sites.size(), {});
  for (auto& per_line : monitors_by_line_) per_line.clear();
  for (std::size_t i = 0; i < sites.size(); ++i) {
    LinePos lp = site_to_line_pos(sites[i]);
    if (!cfg_.window.contains_line(lp.line)) continue;
    monitors_by_line_[std::size_t(lp.line - cfg_.window.ell_min)].push_back(
        {lp.z2, std::int32_t(i)});
  }
  for (auto& per_line : monitors_by_line_)
    std::sort(per_line.begin(), per_line.end(),
              [](const Monitor& a, const Monitor& b) { return a.zbar2 < b.zbar2; });
}

bool Simulator::apply_clock(std::int32_t line, std::int32_t z2, std::int64_t t_ns) {
  ++counters_.rings;
  clock_ns_ = t_ns;
  if (((z2 - line) & 1) != 0) throw config_error("apply_clock: slot parity mismatch");
  if (!cfg_.window.contains_line(line) || z2 < cfg_.window.z2_min || z2 > cfg_.window.z2_max)
    throw config_error("apply_clock: slot outside the window");
  if (line == cfg_.window.ell_min || line == cfg_.window.ell_max) {
    ++counters_.ghost;
    return false;
  }
  ParticleLine& ln = cfg_.line(line);
  auto it = std::lower_bound(ln.pos2.begin(), ln.pos2.end(), z2);
  if (it != ln.pos2.end() && *it == z2) {
    ++counters_.occupied;
    return false;
  }
  if (it == ln.pos2.end()) {
    ++counters_.no_right_particle;
    return false;
  }
  std::size_t idx = std::size_t(it - ln.pos2.begin());
  int p = ln.first_label + int(idx);
  // the move keeps interlacing iff both lower-diagonal neighbors sit left of z
  const ParticleLine& above = cfg_.line(line + 1);
  if (above.has_label(p - 1) && above.pos_of(p - 1) >= z2) {
    ++counters_.blocked;
    return false;
  }
  const ParticleLine& below = cfg_.line(line - 1);
  if (below.has_label(p) && below.pos_of(p) >= z2) {
    ++counters_.blocked;
    return false;
  }
  std::int32_t z_old = ln.pos2[idx];
  ln.pos2[idx] = z2;
  ++counters_.moves;
  const auto& per_line = monitors_by_line_[std::size_t(line - cfg_.window.ell_min)];
  if (!per_line.empty()) {
    // dual positions have opposite parity, so the crossed set is z2 < zbar2 < z_old
    auto lo = std::upper_bound(per_line.begin(), per_line.end(), z2,
                               [](int v, const Monitor& m) { return v < m.zbar2; });
    for (auto m = lo; m != per_line.end() && m->zbar2 < z_old; ++m)
      trajectories_[std::size_t(m->index)].times_ns.push_back(t_ns);
  }
  if (record_jumps_) jumps_.push_back({t_ns, line, z_old, z2});
  return true;
}

bool Simulator::offer(const Event& e) {
  if (!cfg_.window.contains_line(e.line) || e.z2 < cfg_.window.z2_min ||
      e.z2 > cfg_.window.z2_max) {
    ++counters_.outside_window;
    return false;
  }
  return apply_clock(e.line, e.z2, e.t_ns);
}

void Simulator::apply_events(const std::vector<Event>& events) {
  for (const Event& e : events) offer(e);
}

namespace {

// Shared driver: feeds time-ordered event batches to the simulator while
// emitting snapshots at the right points. Batches partition the horizon.
template <typename NextBatch>
RunResult drive(const ParticleArray& initial, const RunSpec& spec, std::int64_t t1_ns,
                NextBatch next_batch) {
  std::vector<SiteCoord> monitored = spec.monitored;
  std::size_t origin_index = monitored.size();
  for (std::size_t i = 0; i < monitored.size(); ++i)
    if (monitored[i] == spec.origin) origin_index = i;
  bool wants_fields = spec.snap_nx1 > 0 && spec.snap_nx2 > 0;
  if (origin_index == monitored.size() && wants_fields) monitored.push_back(spec.origin);

  std::vector<double> snap_times = spec.snapshot_times;
  std::sort(snap_times.begin(), snap_times.end());
  for (double t : snap_times)
    if (t < 0 || to_ns(t) > t1_ns)
      throw config_error("run: snapshot time outside the event horizon");

  Simulator sim(initial);
  sim.set_monitors(monitored);
  if (spec.record_jumps) sim.enable_jump_log();

  RunResult res;
  std::size_t next_snap = 0;
  auto emit_snapshot = [&](double t) {
    std::vector<std::int64_t> row;
    row.reserve(sim.trajectories().size());
    std::int64_t ts = to_ns(t);
    for (const StepFunction& f : sim.trajectories()) row.push_back(f.value_at(ts));
    if (wants_fields) {
      std::int64_t anchor_h = spec.origin_height - row[origin_index];
      res.snapshots.push_back(height_from_particles(sim.state(), spec.snap_origin, spec.snap_nx1,
                                                    spec.snap_nx2, spec.origin, anchor_h));
    }
    res.snapshot_J.push_back(std::move(row));
  };

  while (const std::vector<Event>* batch = next_batch()) {
    for (const Event& e : *batch) {
      while (next_snap < snap_times.size() && to_ns(snap_times[next_snap]) < e.t_ns)
        emit_snapshot(snap_times[next_snap++]);
      sim.offer(e);
    }
  }
  while (next_snap < snap_times.size()) emit_snapshot(snap_times[next_snap++]);

  res.trajectories = sim.trajectories();
  res.jumps = sim.jump_log();
  res.counters = sim.counters();
  res.final_state = sim.state();
  return res;
}

}  // namespace

RunResult run(const ParticleArray& initial, const EventStream& events, const RunSpec& spec) {
  bool done = false;
  return drive(initial, spec, events.t1_ns, [&]() -> const std::vector<Event>* {
    if (done) return nullptr;
    done = true;
    return &events.events;
  });
}

RunResult run_streamed(const ParticleArray& initial, const LatticeWindow& event_window, double T,
                       std::uint64_t seed, const RunSpec& spec) {
  if (T < 0) throw config_error("run_streamed: negative horizon");
  std::int64_t t1_ns = to_ns(T);
  std::int64_t slabs = (t1_ns + kNsPerSecond - 1) / kNsPerSecond;
  std::int64_t slab = 0;
  std::vector<Event> batch;
  return drive(initial, spec, t1_ns, [&]() -> const std::vector<Event>* {
    if (slab >= slabs) return nullptr;
    batch.clear();
    append_slab_events(event_window, seed, slab, 0, t1_ns, batch);
    std::sort(batch.begin(), batch.end(), event_order);
    ++slab;
    return &batch;
  });
}

void write_trajectories_csv(const std::vector<SiteCoord>& sites,
                            const std::vector<StepFunction>& trajectories,
                            const std::string& path) {
  CsvWriter w(path);
  w.header({"x1", "x2", "jump_time_ns"});
  for (std::size_t i = 0; i < sites.size() && i < trajectories.size(); ++i) {
    for (std::int64_t t : trajectories[i].times_ns) {
      w.field(std::int64_t(sites[i].x1));
      w.field(std::int64_t(sites[i].x2));
      w.field(t);
      w.end_row();
    }
  }
}

std::vector<LocalityPatch> build_locality_set(SiteCoord x, double t, int ell) {
  if (ell < 1) throw config_error("build_locality_set: ell must be at least 1");
  if (t < double(ell)) throw config_error("build_locality_set: need t >= ell");
  std::vector<LocalityPatch> out;
  out.push_back({x, t - ell, t - ell});
  for (int y1 = -2 * ell + 1; y1 <= 0; ++y1) {
    for (int y2 = -2 * ell + 1; y2 <= 0; ++y2) {
      if (y1 == 0 && y2 == 0) continue;
      if (y1 + y2 < -2 * ell) continue;
      double hi = t - ell - floor_half(y1 + y2);
      out.push_back({{x.x1 + y1, x.x2 + y2}, hi - 1.0, hi});
    }
  }
  return out;
}

namespace {

// H(y, s) <= H'(y, s) checked at interval endpoints and every jump time of
// either trajectory inside the interval; trajectories are right-continuous
// step functions, so this sampling is exact.
bool dominated_on(const StepFunction& ja, const StepFunction& jb, std::int64_t h0a,
                  std::int64_t h0b, std::int64_t lo_ns, std::int64_t hi_ns) {
  auto ok_at = [&](std::int64_t s) {
    return h0a - ja.value_at(s) <= h0b - jb.value_at(s);
  };
  if (!ok_at(lo_ns) || !ok_at(hi_ns)) return false;
  for (const StepFunction* f : {&ja, &jb}) {
    auto it = std::upper_bound(f->times_ns.begin(), f->times_ns.end(), lo_ns);
    for (; it != f->times_ns.end() && *it <= hi_ns; ++it)
      if (!ok_at(*it)) return false;
  }
  return true;
}

}  // namespace

LocalityVerdict check_spacetime_locality(const HeightField& h, const HeightField& hp,
                                         const EventStream& events, SiteCoord x, double t,
                                         int ell) {
  std::vector<LocalityPatch> patches = build_locality_set(x, t, ell);
  std::vector<SiteCoord> sites;
  sites.push_back(x);
  for (const LocalityPatch& p : patches)
    if (!(p.site == x)) sites.push_back(p.site);
  for (const SiteCoord& s : sites)
    if (!h.contains(s) || !hp.contains(s))
      throw config_error("check_spacetime_locality: initial fields must cover the dependence set");

  RunSpec spec;
  spec.monitored = sites;
  RunResult ra = run(particles_from_height(h), events, spec);
  RunResult rb = run(particles_from_height(hp), events, spec);

  auto index_of = [&](SiteCoord s) {
    for (std::size_t i = 0; i < sites.size(); ++i)
      if (sites[i] == s) return i;
    return std::size_t(0);
  };

  LocalityVerdict verdict;
  verdict.premise_held = true;
  double horizon = double(events.t1_ns) / double(kNsPerSecond);
  for (const LocalityPatch& p : patches) {
    double lo = std::max(p.t_lo, 0.0);
    double hi = std::min(p.t_hi, horizon);
    if (lo > hi) continue;
    std::size_t i = index_of(p.site);
    if (!dominated_on(ra.trajectories[i], rb.trajectories[i], h.height_at(p.site),
                      hp.height_at(p.site), to_ns(lo), to_ns(hi))) {
      verdict.premise_held = false;
      break;
    }
  }
  verdict.conclusion_held =
      dominated_on(ra.trajectories[0], rb.trajectories[0], h.height_at(x), hp.height_at(x),
                   to_ns(std::max(t - ell, 0.0)), to_ns(std::min(t, horizon)));
  return verdict;
}

std::optional<std::vector<Event>> staircase_witness(const std::vector<Event>& events, SiteCoord x,
                                                    double s, double tau, int k) {
  if (k < 1) throw config_error("staircase_witness: k must be at least 1");
  if (tau < 0) throw config_error("staircase_witness: negative window");
  LinePos lp = site_to_line_pos(x);
  std::int64_t lo_ns = to_ns(s), hi_ns = to_ns(s + tau);
  std::vector<Event> pool;
  for (const Event& e : events) {
    // slot and dual parities differ, so z <= zbar is the strict comparison
    if (e.line == lp.line && e.z2 <= lp.z2 && e.t_ns >= lo_ns && e.t_ns <= hi_ns)
      pool.push_back(e);
  }
  if (int(pool.size()) < k) return std::nullopt;
  // sort by time; equal times take positions in decreasing order so that no
  // two of them can sit in one strictly increasing chain
  std::sort(pool.begin(), pool.end(), [](const Event& a, const Event& b) {
    if (a.t_ns != b.t_ns) return a.t_ns < b.t_ns;
    return a.z2 > b.z2;
  });
  std::vector<int> tail;    // tail[j] = pool index ending the best chain of length j+1
  std::vector<int> parent(pool.size(), -1);
  for (int i = 0; i < int(pool.size()); ++i) {
    auto it = std::lower_bound(tail.begin(), tail.end(), pool[std::size_t(i)].z2,
                               [&](int idx, std::int32_t z) { return pool[std::size_t(idx)].z2 < z; });
    std::size_t j = std::size_t(it - tail.begin());
    parent[std::size_t(i)] = j > 0 ? tail[j - 1] : -1;
    if (it == tail.end())
      tail.push_back(i);
    else
      *it = i;
    if (int(tail.size()) >= k) break;
  }
  if (int(tail.size()) < k) return std::nullopt;
  std::vector<Event> chain;
  for (int idx = tail[std::size_t(k - 1)]; idx >= 0 && int(chain.size()) < k;
       idx = parent[std::size_t(idx)])
    chain.push_back(pool[std::size_t(idx)]);
  std::reverse(chain.begin(), chain.end());
  return chain;
}

}  // namespace akpz
