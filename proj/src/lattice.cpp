#include "akpz/lattice.hpp"

#include <algorithm>
#include <cassert>
#include <map>

#include "akpz/csv.hpp"
#include "json.hpp"

namespace akpz {

namespace {

int parity_of(int v) { return v & 1; }

// rightmost stored index with pos2[idx] < z2, or -1
int index_left_of(const ParticleLine& ln, int z2) {
  auto it = std::lower_bound(ln.pos2.begin(), ln.pos2.end(), z2);
  return int(it - ln.pos2.begin()) - 1;
}

// leftmost stored index with pos2[idx] > z2, or size() if none
int index_right_of(const ParticleLine& ln, int z2) {
  auto it = std::upper_bound(ln.pos2.begin(), ln.pos2.end(), z2);
  return int(it - ln.pos2.begin());
}

}  // namespace

bool ParticleArray::occupied(int ell, int z2) const {
  if (!window.contains_line(ell)) return false;
  const auto& ln = line(ell);
  return std::binary_search(ln.pos2.begin(), ln.pos2.end(), z2);
}

void ParticleArray::validate() const {
  if (int(lines.size()) != window.line_count())
    throw invariant_error("particle array has " + std::to_string(lines.size()) +
                          " lines, window wants " + std::to_string(window.line_count()));
  for (int ell = window.ell_min; ell <= window.ell_max; ++ell) {
    const auto& ln = line(ell);
    for (std::size_t i = 0; i < ln.pos2.size(); ++i) {
      if (parity_of(ln.pos2[i]) != parity_of(ell))
        throw invariant_error("parity violation on line " + std::to_string(ell) + " at z2=" +
                              std::to_string(ln.pos2[i]));
      if (i > 0 && ln.pos2[i - 1] >= ln.pos2[i])
        throw invariant_error("ordering violation on line " + std::to_string(ell) + " at z2=" +
                              std::to_string(ln.pos2[i]));
    }
  }
  for (int ell = window.ell_min; ell < window.ell_max; ++ell) {
    const auto& lo = line(ell);
    const auto& hi = line(ell + 1);
    for (int p = hi.first_label; p <= hi.last_label(); ++p) {
      // z(p,ell) < z(p,ell+1) < z(p+1,ell) wherever stored
      if (lo.has_label(p) && lo.pos_of(p) >= hi.pos_of(p))
        throw invariant_error("interlacing violation between lines " + std::to_string(ell) +
                              "," + std::to_string(ell + 1) + " label " + std::to_string(p));
      if (lo.has_label(p + 1) && hi.pos_of(p) >= lo.pos_of(p + 1))
        throw invariant_error("interlacing violation between lines " + std::to_string(ell) +
                              "," + std::to_string(ell + 1) + " label " + std::to_string(p));
    }
  }
}

std::int64_t HeightField::height_at(SiteCoord x) const {
  if (!contains(x)) throw window_error("vertex outside height field");
  int i = x.x1 - origin.x1;
  int j = x.x2 - origin.x2;
  std::int64_t h = origin_height;
  for (int a = 0; a < i; ++a) h += g1(a, 0);
  for (int b = 0; b < j; ++b) h += g2(i, b);
  return h;
}

std::vector<std::int64_t> HeightField::heights() const {
  std::vector<std::int64_t> h(std::size_t(nx1) * nx2);
  h[0] = origin_height;
  for (int i = 1; i < nx1; ++i) h[std::size_t(i)] = h[std::size_t(i) - 1] + g1(i - 1, 0);
  for (int j = 1; j < nx2; ++j)
    for (int i = 0; i < nx1; ++i)
      h[std::size_t(i) + std::size_t(nx1) * j] = h[std::size_t(i) + std::size_t(nx1) * (j - 1)] + g2(i, j - 1);
  return h;
}

AdmissibilityReport check_admissible(const HeightField& h, int M) {
  AdmissibilityReport rep;
  auto flag = [&](AdmissibilityViolation::Kind k, SiteCoord x, std::string d) {
    rep.ok = false;
    rep.violations.push_back({k, x, std::move(d)});
  };
  if (M < 2) throw config_error("M must be at least 2");
  for (int j = 0; j < h.nx2; ++j)
    for (int i = 0; i + 1 < h.nx1; ++i)
      if (h.g1(i, j) > 1)
        flag(AdmissibilityViolation::Kind::gradient_range,
             {h.origin.x1 + i, h.origin.x2 + j}, "grad1 out of {0,1}");
  for (int j = 0; j + 1 < h.nx2; ++j)
    for (int i = 0; i < h.nx1; ++i)
      if (h.g2(i, j) > 1)
        flag(AdmissibilityViolation::Kind::gradient_range,
             {h.origin.x1 + i, h.origin.x2 + j}, "grad2 out of {0,1}");
  if (!rep.ok) return rep;

  for (int j = 0; j + 1 < h.nx2; ++j) {
    for (int i = 0; i + 1 < h.nx1; ++i) {
      SiteCoord x{h.origin.x1 + i, h.origin.x2 + j};
      int via1 = h.g1(i, j) + h.g2(i + 1, j);
      int via2 = h.g2(i, j) + h.g1(i, j + 1);
      if (via1 != via2) flag(AdmissibilityViolation::Kind::circuit, x, "circuit sum mismatch");
      else if (via1 > 1) flag(AdmissibilityViolation::Kind::diagonal, x, "diagonal increment 2");
    }
  }
  if (!rep.ok) return rep;

  // Gap bound: a run of M consecutive diagonal increments equal to 1 means
  // two consecutive particles on that line are more than M apart.
  int pn1 = h.nx1 - 1, pn2 = h.nx2 - 1;
  for (int d = -(pn1 - 1); d <= pn2 - 1; ++d) {
    int i0 = d < 0 ? -d : 0;
    int j0 = d < 0 ? 0 : d;
    int run = 0;
    for (int i = i0, j = j0; i < pn1 && j < pn2; ++i, ++j) {
      int diag = h.g1(i, j) + h.g2(i + 1, j);
      if (diag == 1) {
        if (++run == M)
          flag(AdmissibilityViolation::Kind::gap,
               {h.origin.x1 + i - M + 1, h.origin.x2 + j - M + 1},
               "gap exceeds M on line " + std::to_string(j - i));
      } else {
        run = 0;
      }
    }
  }
  return rep;
}

ParticleArray particles_from_height(const HeightField& h) {
  int pn1 = h.nx1 - 1, pn2 = h.nx2 - 1;
  if (pn1 < 1 || pn2 < 1) throw window_error("height field too small for particles");

  struct LineScan {
    std::vector<int> pos2;
    int span_lo = 0, span_hi = 0;  // doubled slot range scanned
  };
  std::map<int, LineScan> scans;
  for (int d = -(pn1 - 1); d <= pn2 - 1; ++d) {
    int i0 = d < 0 ? -d : 0;
    int j0 = d < 0 ? 0 : d;
    int ell = (h.origin.x2 + j0) - (h.origin.x1 + i0);
    LineScan scan;
    bool first = true;
    for (int i = i0, j = j0; i < pn1 && j < pn2; ++i, ++j) {
      int diag = h.g1(i, j) + h.g2(i + 1, j);
      int z2 = (h.origin.x1 + i) + (h.origin.x2 + j);
      if (h.g1(i, j) + h.g2(i + 1, j) != h.g2(i, j) + h.g1(i, j + 1))
        throw invariant_error("circuit sum mismatch at plaquette (" +
                              std::to_string(h.origin.x1 + i) + "," + std::to_string(h.origin.x2 + j) + ")");
      if (diag > 1)
        throw invariant_error("diagonal increment 2 at plaquette (" +
                              std::to_string(h.origin.x1 + i) + "," + std::to_string(h.origin.x2 + j) + ")");
      if (first) scan.span_lo = z2, first = false;
      scan.span_hi = z2;
      if (diag == 0) scan.pos2.push_back(z2);
    }
    scans.emplace(ell, std::move(scan));
  }

  ParticleArray cfg;
  cfg.window.ell_min = scans.begin()->first;
  cfg.window.ell_max = scans.rbegin()->first;
  cfg.window.z2_min = scans.begin()->second.span_lo;
  cfg.window.z2_max = scans.begin()->second.span_hi;
  for (auto& [ell, scan] : scans) {
    cfg.window.z2_min = std::min(cfg.window.z2_min, scan.span_lo);
    cfg.window.z2_max = std::max(cfg.window.z2_max, scan.span_hi);
  }
  cfg.lines.resize(std::size_t(cfg.window.line_count()));

  for (int ell = cfg.window.ell_min; ell <= cfg.window.ell_max; ++ell)
    cfg.line(ell).pos2 = std::move(scans.at(ell).pos2);
  assign_interlacing_labels(cfg);
  cfg.validate();
  return cfg;
}

// Labels only carry meaning relative to the neighboring line (particle p sits
// strictly between p and p+1 of the line below), so pick for each line the
// offset that satisfies those constraints against the already-labeled line
// below. Short corner spans leave the offset underdetermined; prefer the
// alignment with the most shared labels.
void assign_interlacing_labels(ParticleArray& cfg) {
  for (int ell = cfg.window.ell_min; ell <= cfg.window.ell_max; ++ell) {
    auto& ln = cfg.line(ell);
    ln.first_label = 0;
    if (ell == cfg.window.ell_min || ln.pos2.empty()) continue;
    const auto& below = cfg.line(ell - 1);
    if (below.pos2.empty()) continue;
    int n = int(ln.pos2.size());
    bool found = false;
    int best_f = 0, best_overlap = -1;
    for (int f = below.first_label - n - 1; f <= below.last_label() + 1; ++f) {
      bool ok = true;
      int overlap = 0;
      for (int a = 0; a < n && ok; ++a) {
        int p = f + a;
        if (below.has_label(p)) {
          ++overlap;
          if (below.pos_of(p) >= ln.pos2[std::size_t(a)]) ok = false;
        }
        if (below.has_label(p + 1)) {
          ++overlap;
          if (ln.pos2[std::size_t(a)] >= below.pos_of(p + 1)) ok = false;
        }
      }
      if (ok && overlap > best_overlap) {
        best_f = f;
        best_overlap = overlap;
        found = true;
      }
    }
    if (!found)
      throw invariant_error("no labeling of line " + std::to_string(ell) +
                            " interlaces with the line below");
    ln.first_label = best_f;
  }
}

ParticleArray restrict_to_window(const ParticleArray& cfg, const LatticeWindow& w) {
  if (w.ell_min < cfg.window.ell_min || w.ell_max > cfg.window.ell_max ||
      w.z2_min < cfg.window.z2_min || w.z2_max > cfg.window.z2_max)
    throw window_error("restriction window exceeds the source window");
  ParticleArray out;
  out.window = w;
  out.lines.resize(std::size_t(w.line_count()));
  for (int ell = w.ell_min; ell <= w.ell_max; ++ell) {
    const auto& src = cfg.line(ell);
    auto& dst = out.line(ell);
    auto lo = std::lower_bound(src.pos2.begin(), src.pos2.end(), w.z2_min);
    auto hi = std::upper_bound(src.pos2.begin(), src.pos2.end(), w.z2_max);
    dst.pos2.assign(lo, hi);
    dst.first_label = src.first_label + int(lo - src.pos2.begin());
  }
  out.validate();
  return out;
}

HeightField height_from_particles(const ParticleArray& cfg, SiteCoord grid_origin, int nx1, int nx2,
                                  SiteCoord anchor, std::int64_t anchor_height) {
  if (nx1 < 2 || nx2 < 2) throw window_error("vertex grid too small");
  HeightField h;
  h.origin = grid_origin;
  h.nx1 = nx1;
  h.nx2 = nx2;
  h.grad1.assign(std::size_t(nx1 - 1) * nx2, 0);
  h.grad2.assign(std::size_t(nx1) * (nx2 - 1), 0);

  auto need_line = [&](int ell) -> const ParticleLine& {
    if (!cfg.window.contains_line(ell))
      throw window_error("height reconstruction needs line " + std::to_string(ell) +
                         " outside the particle window");
    return cfg.line(ell);
  };

  for (int j = 0; j < nx2; ++j) {
    for (int i = 0; i < nx1; ++i) {
      SiteCoord x{grid_origin.x1 + i, grid_origin.x2 + j};
      LinePos lp = site_to_line_pos(x);
      const ParticleLine& ln = need_line(lp.line);
      if (i + 1 < nx1) {
        int idx = index_right_of(ln, lp.z2);
        if (idx >= ln.size())
          throw window_error("no particle right of z2=" + std::to_string(lp.z2) + " on line " +
                             std::to_string(lp.line));
        int p1 = ln.first_label + idx;
        const ParticleLine& dn = need_line(lp.line - 1);
        if (!dn.has_label(p1))
          throw window_error("missing label " + std::to_string(p1) + " on line " +
                             std::to_string(lp.line - 1));
        h.set_g1(i, j, lp.z2 + 1 < dn.pos_of(p1) ? 1 : 0);
      }
      if (j + 1 < nx2) {
        int idx = index_left_of(ln, lp.z2);
        if (idx < 0)
          throw window_error("no particle left of z2=" + std::to_string(lp.z2) + " on line " +
                             std::to_string(lp.line));
        int p = ln.first_label + idx;
        const ParticleLine& up = need_line(lp.line + 1);
        if (!up.has_label(p))
          throw window_error("missing label " + std::to_string(p) + " on line " +
                             std::to_string(lp.line + 1));
        h.set_g2(i, j, lp.z2 + 1 < up.pos_of(p) ? 1 : 0);
      }
    }
  }

  // anchor
  if (!h.contains(anchor)) throw window_error("anchor outside grid");
  HeightField tmp = h;
  tmp.origin_height = 0;
  std::int64_t at_anchor = tmp.height_at(anchor);
  h.origin_height = anchor_height - at_anchor;
  return h;
}

std::vector<TilingCell> export_tiling(const ParticleArray& cfg) {
  std::vector<TilingCell> cells;
  for (int ell = cfg.window.ell_min + 1; ell <= cfg.window.ell_max; ++ell) {
    const auto& ln = cfg.line(ell);
    const auto& dn = cfg.line(ell - 1);
    int z2_lo = cfg.window.z2_min + (parity_of(cfg.window.z2_min) == parity_of(ell) ? 0 : 1);
    for (int z2 = z2_lo; z2 <= cfg.window.z2_max; z2 += 2) {
      if (std::binary_search(ln.pos2.begin(), ln.pos2.end(), z2)) {
        cells.push_back({CellKind::vertical, ell, z2});
        continue;
      }
      int idx = index_right_of(ln, z2);
      if (idx >= ln.size()) continue;
      int p1 = ln.first_label + idx;
      if (!dn.has_label(p1)) continue;
      cells.push_back({z2 < dn.pos_of(p1) ? CellKind::left : CellKind::right, ell, z2});
    }
  }
  return cells;
}

namespace {
const char* kind_name(CellKind k) {
  switch (k) {
    case CellKind::vertical: return "vertical";
    case CellKind::left: return "left";
    default: return "right";
  }
}
}  // namespace

void write_tiling_csv(const std::vector<TilingCell>& cells, const std::string& path) {
  CsvWriter w(path);
  w.header({"line", "doubled_z", "kind"});
  for (const auto& c : cells) {
    w.field(std::int64_t(c.line));
    w.field(std::int64_t(c.z2));
    w.field(std::string(kind_name(c.kind)));
    w.end_row();
  }
}

void write_tiling_json(const std::vector<TilingCell>& cells, const std::string& path) {
  using json = nlohmann::ordered_json;
  json root;
  root["version"] = 1;
  json arr = json::array();
  for (const auto& c : cells) {
    // sheared-brick embedding: row ell occupies the horizontal strip
    // [ell-1/2, ell+1/2]; the top edge of a non-vertical cell shifts by
    // half a slot in the lean direction
    double z = c.z2 / 2.0;
    double shift = c.kind == CellKind::left ? -0.5 : c.kind == CellKind::right ? 0.5 : 0.0;
    json cell;
    cell["kind"] = kind_name(c.kind);
    cell["line"] = c.line;
    cell["z2"] = c.z2;
    cell["points"] = json::array({json::array({z - 0.5, c.line - 0.5}), json::array({z + 0.5, c.line - 0.5}),
                                  json::array({z + 0.5 + shift, c.line + 0.5}),
                                  json::array({z - 0.5 + shift, c.line + 0.5})});
    arr.push_back(std::move(cell));
  }
  root["cells"] = std::move(arr);
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw error("cannot open " + path + " for writing");
  std::string s = root.dump(2);
  std::fwrite(s.data(), 1, s.size(), f);
  std::fputc('\n', f);
  std::fclose(f);
}

void write_height_csv(const HeightField& h, const std::string& path) {
  CsvWriter w(path);
  w.header({"x1", "x2", "h"});
  auto vals = h.heights();
  for (int i = 0; i < h.nx1; ++i)
    for (int j = 0; j < h.nx2; ++j) {
      w.field(std::int64_t(h.origin.x1 + i));
      w.field(std::int64_t(h.origin.x2 + j));
      w.field(vals[std::size_t(i) + std::size_t(h.nx1) * j]);
      w.end_row();
    }
}

}  // namespace akpz
