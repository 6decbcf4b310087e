#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "akpz/common.hpp"

namespace akpz {

// Interlaced particle arrays on a stack of horizontal lines, and the height
// function on the dual lattice that encodes the same data.
//
// Particles on line ell live at horizontal positions z in Z + (ell mod 2)/2.
// We store doubled positions z2 = 2z, so z2 always has the parity of ell.
// Dual vertices x = (x1, x2) map to line x2 - x1 at doubled position
// x1 + x2 - 1, which has the opposite parity, so a dual vertex never
// coincides with a particle slot.

struct SiteCoord {
  int x1 = 0;
  int x2 = 0;
  friend bool operator==(SiteCoord a, SiteCoord b) { return a.x1 == b.x1 && a.x2 == b.x2; }
  friend bool operator<(SiteCoord a, SiteCoord b) {
    return a.x1 != b.x1 ? a.x1 < b.x1 : a.x2 < b.x2;
  }
};

struct LinePos {
  int line = 0;
  int z2 = 0;  // doubled horizontal coordinate
  friend bool operator==(LinePos a, LinePos b) { return a.line == b.line && a.z2 == b.z2; }
};

// line = x2 - x1, z2 = x1 + x2 - 1 (the doubled dual coordinate).
inline LinePos site_to_line_pos(SiteCoord x) { return {x.x2 - x.x1, x.x1 + x.x2 - 1}; }

// Rectangle in (line, doubled position) space, all bounds inclusive.
struct LatticeWindow {
  int ell_min = 0;
  int ell_max = 0;
  int z2_min = 0;
  int z2_max = 0;

  int line_count() const { return ell_max - ell_min + 1; }
  bool contains_line(int ell) const { return ell >= ell_min && ell <= ell_max; }
};

struct ParticleLine {
  int first_label = 0;       // label of pos2.front()
  std::vector<int> pos2;     // strictly increasing, parity == line parity

  int size() const { return int(pos2.size()); }
  int last_label() const { return first_label + size() - 1; }
  bool has_label(int p) const { return p >= first_label && p <= last_label(); }
  int pos_of(int p) const { return pos2[std::size_t(p - first_label)]; }
};

// Interlaced array restricted to a window. The outermost lines are frozen
// ghosts: their particles never move, they only serve as interlacing
// partners for the first interior lines. The first and last particle of
// every line are frozen as well and act as walls at the window edges.
struct ParticleArray {
  LatticeWindow window;
  std::vector<ParticleLine> lines;  // index 0 corresponds to window.ell_min

  ParticleLine& line(int ell) { return lines[std::size_t(ell - window.ell_min)]; }
  const ParticleLine& line(int ell) const { return lines[std::size_t(ell - window.ell_min)]; }
  bool line_is_ghost(int ell) const { return ell == window.ell_min || ell == window.ell_max; }

  bool occupied(int ell, int z2) const;

  // Checks per-line ordering and parity plus the interlacing relation
  // z(p,ell) < z(p,ell+1) < z(p+1,ell) wherever both labels are stored.
  // Throws invariant_error with the offending line and position.
  void validate() const;
};

// Height gradients on a rectangular vertex grid of the dual lattice.
// grad1(i,j) = h(x+e1) - h(x), grad2(i,j) = h(x+e2) - h(x), both in {0,1}.
struct HeightField {
  SiteCoord origin;          // vertex at grid index (0,0)
  std::int64_t origin_height = 0;
  int nx1 = 0;               // vertices along x1
  int nx2 = 0;               // vertices along x2
  std::vector<std::uint8_t> grad1;  // (nx1-1) * nx2, index i + (nx1-1)*j
  std::vector<std::uint8_t> grad2;  // nx1 * (nx2-1), index i + nx1*j

  std::uint8_t g1(int i, int j) const { return grad1[std::size_t(i) + std::size_t(nx1 - 1) * j]; }
  std::uint8_t g2(int i, int j) const { return grad2[std::size_t(i) + std::size_t(nx1) * j]; }
  void set_g1(int i, int j, std::uint8_t v) { grad1[std::size_t(i) + std::size_t(nx1 - 1) * j] = v; }
  void set_g2(int i, int j, std::uint8_t v) { grad2[std::size_t(i) + std::size_t(nx1) * j] = v; }

  bool contains(SiteCoord x) const {
    return x.x1 >= origin.x1 && x.x1 < origin.x1 + nx1 && x.x2 >= origin.x2 && x.x2 < origin.x2 + nx2;
  }

  // Height at a vertex, integrating gradients from the origin corner.
  // Only meaningful when the circuit sums vanish (see check_admissible);
  // integration runs along x1 first, then x2.
  std::int64_t height_at(SiteCoord x) const;

  // All heights, h[i + nx1*j].
  std::vector<std::int64_t> heights() const;

  // Adds c to every height.
  void shift(std::int64_t c) { origin_height += c; }
};

enum class CellKind { vertical, left, right };

struct TilingCell {
  CellKind kind = CellKind::vertical;
  int line = 0;
  int z2 = 0;
};

struct AdmissibilityViolation {
  enum class Kind { gradient_range, circuit, diagonal, gap } kind = Kind::circuit;
  SiteCoord where;
  std::string detail;
};

struct AdmissibilityReport {
  bool ok = true;
  std::vector<AdmissibilityViolation> violations;
};

// Verifies gradients lie in {0,1}, every plaquette circuit closes, each
// diagonal increment is 0 or 1, and runs of diagonal increments equal to 1
// never reach M (so consecutive particles on a line are at most M apart).
// Runs truncated by the window are counted conservatively.
AdmissibilityReport check_admissible(const HeightField& h, int M);

// Reads particle positions off the diagonal increments of h. A particle
// sits at (line, z2) = (x2-x1, x1+x2) exactly when h(x+(1,1)) = h(x).
// Labels are aligned across lines so the interlacing relation holds.
ParticleArray particles_from_height(const HeightField& h);

// Sets first_label on every line of cfg, bottom line pinned to 0, so that
// stored particles satisfy the interlacing relation against the line below.
// Positions must already be sorted. Throws invariant_error when no offset
// works for some line.
void assign_interlacing_labels(ParticleArray& cfg);

// Copy of cfg restricted to the sub-window w: lines outside w dropped,
// particles outside w's slot range dropped, first_label advanced past the
// particles cut off on the left so surviving labels keep their meaning.
ParticleArray restrict_to_window(const ParticleArray& cfg, const LatticeWindow& w);

// Reconstructs height gradients from a particle configuration on the given
// vertex grid, anchored at anchor/anchor_height. Every vertex of the grid
// must have lines ell-1, ell, ell+1 covered by cfg with the labels needed
// for the lookups; otherwise throws window_error.
HeightField height_from_particles(const ParticleArray& cfg, SiteCoord grid_origin, int nx1, int nx2,
                                  SiteCoord anchor, std::int64_t anchor_height);

// Rhombus cover of the slots in the given window (ghost lines excluded).
// Occupied slots map to vertical cells. An empty slot maps to kind left
// when the interlacing partner on the line below sits to its right, else
// kind right. Slots whose classification would need data outside cfg are
// skipped.
std::vector<TilingCell> export_tiling(const ParticleArray& cfg);

void write_tiling_csv(const std::vector<TilingCell>& cells, const std::string& path);
void write_tiling_json(const std::vector<TilingCell>& cells, const std::string& path);
void write_height_csv(const HeightField& h, const std::string& path);

}  // namespace akpz
