#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "akpz/lattice.hpp"

namespace akpz {

// Event-driven simulation of the interlaced particle dynamics. Every site
// (line, doubled_z) of a window carries a rate-1 Poisson clock; a clock ring
// at an empty site pulls the nearest particle from the right onto it when
// the two diagonal neighbors below allow the move. Times are kept in whole
// nanoseconds of process time.

struct Event {
  std::int64_t t_ns;
  std::int32_t line;
  std::int32_t z2;
};

inline bool event_order(const Event& a, const Event& b) {
  if (a.t_ns != b.t_ns) return a.t_ns < b.t_ns;
  if (a.line != b.line) return a.line < b.line;
  return a.z2 < b.z2;
}

constexpr std::int64_t kNsPerSecond = 1'000'000'000;

std::int64_t to_ns(double seconds);

// A seeded realization of the clock process over window x [t0, t1). The
// realization at a given site and second is a deterministic function of
// (seed, line, z2, second) alone, so streams over nested windows or longer
// horizons agree on their overlap. Events are sorted by (t_ns, line, z2).
struct EventStream {
  std::uint64_t seed = 0;
  LatticeWindow window;
  std::int64_t t0_ns = 0;
  std::int64_t t1_ns = 0;
  std::vector<Event> events;
};

// Materializes all events of the realization. Throws budget_error when the
// expected event count would exceed memory_budget_bytes.
EventStream sample_events(const LatticeWindow& window, double T, std::uint64_t seed,
                          std::size_t memory_budget_bytes = std::size_t(1500) * 1000 * 1000);

// Events of one whole-second slab [slab, slab+1), clipped to [t0_ns, t1_ns),
// appended unsorted.
void append_slab_events(const LatticeWindow& window, std::uint64_t seed, std::int64_t slab,
                        std::int64_t t0_ns, std::int64_t t1_ns, std::vector<Event>& out);

void write_events_csv(const EventStream& stream, const std::string& path);
std::vector<Event> read_events_csv(const std::string& path);

struct SimCounters {
  std::uint64_t rings = 0;           // events processed
  std::uint64_t occupied = 0;        // target site already occupied
  std::uint64_t ghost = 0;           // ring on a frozen boundary line
  std::uint64_t no_right_particle = 0;  // window boundary underflow, warned
  std::uint64_t blocked = 0;         // a lower neighbor refuses the move
  std::uint64_t outside_window = 0;  // event dropped, not in this window
  std::uint64_t moves = 0;
};

struct JumpRecord {
  std::int64_t t_ns;
  std::int32_t line;
  std::int32_t z2_from;
  std::int32_t z2_to;
};

// Jump times of one monitored site; J_x(t) = number of entries <= t.
struct StepFunction {
  std::vector<std::int64_t> times_ns;

  std::int64_t value_at(std::int64_t t_ns) const;
};

class Simulator {
 public:
  explicit Simulator(ParticleArray initial);

  // Sites whose crossing counters J_x are tracked.
  void set_monitors(const std::vector<SiteCoord>& sites);
  void enable_jump_log() { record_jumps_ = true; }

  // One clock ring. Returns true when a particle moved.
  bool apply_clock(std::int32_t line, std::int32_t z2, std::int64_t t_ns);

  // Like apply_clock, but an event outside this window is dropped and
  // counted instead of rejected. Lets one realization drive differently
  // sized windows.
  bool offer(const Event& e);

  void apply_events(const std::vector<Event>& events);

  const ParticleArray& state() const { return cfg_; }
  const SimCounters& counters() const { return counters_; }
  const std::vector<StepFunction>& trajectories() const { return trajectories_; }
  const std::vector<JumpRecord>& jump_log() const { return jumps_; }
  std::int64_t clock_ns() const { return clock_ns_; }

 private:
  ParticleArray cfg_;
  SimCounters counters_;
  std::vector<StepFunction> trajectories_;
  std::vector<JumpRecord> jumps_;
  bool record_jumps_ = false;
  std::int64_t clock_ns_ = 0;
  // monitored dual positions grouped by line, sorted by doubled position
  struct Monitor {
    std::int32_t zbar2;
    std::int32_t index;
  };
  std::vector<std::vector<Monitor>> monitors_by_line_;
};

struct RunSpec {
  std::vector<double> snapshot_times;
  std::vector<SiteCoord> monitored;
  // anchor for snapshot reconstruction: h(origin) at time 0
  SiteCoord origin{0, 0};
  std::int64_t origin_height = 0;
  // snapshot height grid; nx1 == 0 disables field reconstruction
  SiteCoord snap_origin{0, 0};
  int snap_nx1 = 0;
  int snap_nx2 = 0;
  bool record_jumps = false;
};

struct RunResult {
  std::vector<HeightField> snapshots;
  std::vector<std::vector<std::int64_t>> snapshot_J;  // [snapshot][monitor]
  std::vector<StepFunction> trajectories;             // parallel to monitored
  std::vector<JumpRecord> jumps;
  SimCounters counters;
  ParticleArray final_state;
};

// Processes a materialized stream in time order.
RunResult run(const ParticleArray& initial, const EventStream& events, const RunSpec& spec);

// Same realization, generated slab by slab so memory stays proportional to
// one second of events. Identical output to run(sample_events(...)).
RunResult run_streamed(const ParticleArray& initial, const LatticeWindow& event_window, double T,
                       std::uint64_t seed, const RunSpec& spec);

void write_trajectories_csv(const std::vector<SiteCoord>& sites,
                            const std::vector<StepFunction>& trajectories,
                            const std::string& path);

// Space-time dependence set of the height value H(x, t) looked back ell
// levels: the site itself at time t - ell plus a triangle of earlier sites
// with unit time intervals. Interval ends may be negative for small t.
struct LocalityPatch {
  SiteCoord site;
  double t_lo;
  double t_hi;
};

std::vector<LocalityPatch> build_locality_set(SiteCoord x, double t, int ell);

struct LocalityVerdict {
  bool premise_held = false;
  bool conclusion_held = false;
};

// Runs the coupled pair (h, hp) under one event realization and checks: if
// H(.,.;h) <= H(.,.;hp) on every patch of build_locality_set(x, t, ell),
// then H(x,s;h) <= H(x,s;hp) for s in [t-ell, t]. Height trajectories are
// piecewise constant, so checking at jump times and interval endpoints is
// exact.
LocalityVerdict check_spacetime_locality(const HeightField& h, const HeightField& hp,
                                         const EventStream& events, SiteCoord x, double t,
                                         int ell);

// Looks for k events on line(x) at positions z_0 < ... < z_{k-1} <= zbar(x)
// with strictly increasing times inside [s, s+tau]; such a staircase must
// exist whenever the height at x drops by k over that window. Returns a
// witness chain found by patience sorting, or nothing.
std::optional<std::vector<Event>> staircase_witness(const std::vector<Event>& events, SiteCoord x,
                                                   double s, double tau, int k);

}  // namespace akpz
