#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "scif/error.hpp"
#include "scif/representation.hpp"

namespace scif {

struct Box {
  std::int32_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool contains(const Point& p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  friend bool operator==(const Box&, const Box&) = default;
};

/// Explicit contour ids, or a box picking every contour with a strict
/// majority of its points inside (bounds inclusive).
struct Selection {
  std::variant<std::vector<std::uint32_t>, Box> target;

  static Selection of_ids(std::vector<std::uint32_t> ids) { return {std::move(ids)}; }
  static Selection of_box(Box b) { return {b}; }
  static Selection everything(const SparseRepresentation& r) {
    return of_box(Box{0, 0, std::int32_t(r.width) - 1, std::int32_t(r.height) - 1});
  }
  friend bool operator==(const Selection&, const Selection&) = default;
};

struct Translate {
  Selection selection;
  double dx = 0.0, dy = 0.0;
};

struct Scale {
  Selection selection;
  double cx = 0.0, cy = 0.0;
  double sx = 1.0, sy = 1.0;
  double gscale = 1.0;  // gradient magnitude factor; 1 keeps magnitudes
};

struct Erase {
  Selection selection;
};

struct Paste {
  std::shared_ptr<const SparseRepresentation> source;
  std::string source_name;  // how the script referred to the source
  Selection selection;
  double dx = 0.0, dy = 0.0;
};

using EditOp = std::variant<Translate, Scale, Erase, Paste>;
using EditScript = std::vector<EditOp>;

struct EditOptions {
  std::size_t min_length = 10;
};

/// Resolves a selection against `r`. Ids that do not exist are skipped
/// (apply_edit reports them); box results follow representation order.
inline std::vector<std::uint32_t> select(const SparseRepresentation& r, const Selection& selection) {
  std::vector<std::uint32_t> out;
  if (const auto* ids = std::get_if<std::vector<std::uint32_t>>(&selection.target)) {
    std::unordered_set<std::uint32_t> present, seen;
    for (const auto& c : r.contours.contours) present.insert(c.id);
    for (auto id : *ids)
      if (present.count(id) && seen.insert(id).second) out.push_back(id);
    return out;
  }
  const auto& box = std::get<Box>(selection.target);
  for (const auto& c : r.contours.contours) {
    const auto inside = std::count_if(c.points.begin(), c.points.end(), [&](const Point& p) { return box.contains(p); });
    if (2 * static_cast<std::size_t>(inside) > c.size()) out.push_back(c.id);
  }
  return out;
}

namespace detail {

struct GridPoint {
  std::int64_t x = 0, y = 0;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

// A contour in flight: integer positions that may leave the image.
struct Draft {
  std::uint32_t id = 0;
  std::vector<GridPoint> points;
  std::vector<float> features;  // point-major, `dim` values each
};

inline std::int64_t round_half_away(double v) { return std::llround(v); }

inline std::int64_t cheb(const GridPoint& a, const GridPoint& b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

// Collapses repeats, bridges gaps with Bresenham (features interpolated
// linearly), then cuts at out-of-bounds or already-used pixels. Each
// returned piece is a simple 8-connected in-bounds chain.
inline std::vector<Draft> rechain(const Draft& d, std::size_t dim, std::uint32_t w, std::uint32_t h) {
  Draft path;
  path.id = d.id;
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    const auto& p = d.points[i];
    const float* f = &d.features[i * dim];
    if (path.points.empty()) {
      path.points.push_back(p);
      path.features.insert(path.features.end(), f, f + dim);
      continue;
    }
    const GridPoint a = path.points.back();
    if (a == p) continue;
    const std::size_t prev = path.points.size() - 1;
    const std::vector<float> fa(path.features.begin() + prev * dim, path.features.begin() + (prev + 1) * dim);
    // Bresenham from a to p, excluding a, including p.
    const std::int64_t steps = cheb(a, p);
    std::int64_t x = a.x, y = a.y;
    const std::int64_t dx = std::abs(p.x - a.x), dy = -std::abs(p.y - a.y);
    const std::int64_t stepx = a.x < p.x ? 1 : -1, stepy = a.y < p.y ? 1 : -1;
    std::int64_t err = dx + dy;
    for (std::int64_t k = 1; k <= steps; ++k) {
      const std::int64_t e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x += stepx;
      }
      if (e2 <= dx) {
        err += dx;
        y += stepy;
      }
      path.points.push_back(GridPoint{x, y});
      if (k == steps) {
        path.features.insert(path.features.end(), f, f + dim);
      } else {
        const double t = static_cast<double>(k) / static_cast<double>(steps);
        for (std::size_t j = 0; j < dim; ++j)
          path.features.push_back(static_cast<float>((1.0 - t) * fa[j] + t * f[j]));
      }
    }
  }

  std::vector<Draft> pieces;
  std::set<std::pair<std::int64_t, std::int64_t>> used;
  Draft current{d.id, {}, {}};
  const auto flush = [&] {
    if (!current.points.empty()) pieces.push_back(std::move(current));
    current = Draft{d.id, {}, {}};
  };
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    const auto& p = path.points[i];
    const bool inside = p.x >= 0 && p.y >= 0 && p.x < std::int64_t{w} && p.y < std::int64_t{h};
    if (!inside || !used.insert({p.x, p.y}).second) {
      flush();
      continue;
    }
    if (!current.points.empty() && cheb(current.points.back(), p) != 1) flush();
    current.points.push_back(p);
    current.features.insert(current.features.end(), path.features.begin() + i * dim,
                            path.features.begin() + (i + 1) * dim);
  }
  flush();
  return pieces;
}

inline Contour to_contour(const Draft& d) {
  Contour c;
  c.id = d.id;
  c.points.reserve(d.points.size());
  for (const auto& p : d.points) c.points.push_back(Point{static_cast<std::uint16_t>(p.x), static_cast<std::uint16_t>(p.y)});
  c.features = d.features;
  return c;
}

inline Draft to_draft(const Contour& c) {
  Draft d{c.id, {}, c.features};
  d.points.reserve(c.size());
  for (const auto& p : c.points) d.points.push_back(GridPoint{p.x, p.y});
  return d;
}

inline std::string describe(const EditOp& op) {
  static constexpr const char* kNames[] = {"translate", "scale", "erase", "paste"};
  return kNames[op.index()];
}

// Commits one op's output: op-written contours take every pixel they touch
// (later id wins among them); older contours lose those pixels and are cut
// into runs. Touched contours below min length are dropped, normals refreshed.
class EditCommit {
 public:
  EditCommit(const SparseRepresentation& base, std::uint32_t next_id) : base_(base), next_id_(next_id) {}

  std::uint32_t fresh_id() { return next_id_++; }

  /// With `reproject`, written features hold (signed magnitude, 0) per
  /// channel and are turned into magnitude * new normal.
  SparseRepresentation finish(std::vector<Contour> kept, std::vector<Draft> written, std::size_t min_length,
                              bool reproject) {
    const std::size_t dim = base_.feature_dim();
    const std::uint32_t w = base_.width, h = base_.height;

    std::vector<Contour> produced;
    for (auto& d : written) {
      auto pieces = rechain(d, dim, w, h);
      for (std::size_t k = 0; k < pieces.size(); ++k) {
        if (k > 0) pieces[k].id = fresh_id();
        produced.push_back(to_contour(pieces[k]));
      }
    }
    std::sort(produced.begin(), produced.end(), [](const Contour& a, const Contour& b) { return a.id < b.id; });

    // Ownership: kept contours first, produced ones override in ascending id order.
    constexpr std::uint32_t kNone = 0xffffffffu;
    std::vector<std::uint32_t> owner(base_.pixel_count(), kNone);
    const auto stamp = [&](const std::vector<Contour>& group, std::uint32_t base_index) {
      for (std::uint32_t k = 0; k < group.size(); ++k)
        for (const auto& p : group[k].points) owner[std::size_t{p.y} * w + p.x] = base_index + k;
    };
    stamp(kept, 0);
    const auto produced_base = static_cast<std::uint32_t>(kept.size());
    stamp(produced, produced_base);

    std::vector<Contour> result;
    const auto settle = [&](const Contour& c, std::uint32_t index, bool touched) {
      const bool intact = std::all_of(c.points.begin(), c.points.end(),
                                      [&](const Point& p) { return owner[std::size_t{p.y} * w + p.x] == index; });
      if (intact && !touched) {
        result.push_back(c);
        return;
      }
      std::vector<Contour> runs;
      Contour run{c.id, {}, {}, {}};
      const auto close_run = [&] {
        if (!run.points.empty()) runs.push_back(std::move(run));
        run = Contour{0, {}, {}, {}};
      };
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (owner[std::size_t{c.points[i].y} * w + c.points[i].x] != index) {
          close_run();
          continue;
        }
        run.points.push_back(c.points[i]);
        run.features.insert(run.features.end(), c.features.begin() + i * dim, c.features.begin() + (i + 1) * dim);
      }
      close_run();
      bool first = true;
      for (auto& piece : runs) {
        piece.id = first ? c.id : fresh_id();
        first = false;
        if (piece.size() < std::max<std::size_t>(min_length, 2)) continue;
        piece.normals = contour_normals(piece);
        if (touched && reproject) {
          const std::size_t channels = dim / 2;
          for (std::size_t i = 0; i < piece.size(); ++i)
            for (std::size_t ch = 0; ch < channels; ++ch) {
              float* g = &piece.features[(i * channels + ch) * 2];
              const double signed_mag = g[0];
              g[0] = static_cast<float>(signed_mag * piece.normals[i].x);
              g[1] = static_cast<float>(signed_mag * piece.normals[i].y);
            }
        }
        result.push_back(std::move(piece));
      }
    };
    for (std::uint32_t k = 0; k < kept.size(); ++k) settle(kept[k], k, false);
    for (std::uint32_t k = 0; k < produced.size(); ++k) settle(produced[k], produced_base + k, true);

    std::sort(result.begin(), result.end(), [](const Contour& a, const Contour& b) { return a.id < b.id; });
    SparseRepresentation out = base_;
    out.contours.contours = std::move(result);
    return out;
  }

  std::uint32_t next_id() const { return next_id_; }

 private:
  const SparseRepresentation& base_;
  std::uint32_t next_id_;
};

inline std::vector<std::uint32_t> resolve_checked(const SparseRepresentation& r, const Selection& sel,
                                                  std::size_t op_index) {
  if (const auto* ids = std::get_if<std::vector<std::uint32_t>>(&sel.target)) {
    std::unordered_set<std::uint32_t> present;
    for (const auto& c : r.contours.contours) present.insert(c.id);
    for (auto id : *ids)
      if (!present.count(id)) throw EditError(EditError::Code::kUnknownId, op_index, "unknown contour id " + std::to_string(id));
  } else {
    const auto& b = std::get<Box>(sel.target);
    if (b.x0 > b.x1 || b.y0 > b.y1) throw EditError(EditError::Code::kBadOp, op_index, "box corners out of order");
  }
  return select(r, sel);
}

inline void split_by_selection(const SparseRepresentation& r, const std::vector<std::uint32_t>& ids,
                               std::vector<Contour>& kept, std::vector<Contour>& chosen) {
  const std::unordered_set<std::uint32_t> wanted(ids.begin(), ids.end());
  for (const auto& c : r.contours.contours) (wanted.count(c.id) ? chosen : kept).push_back(c);
}

}  // namespace detail

/// Applies `script` in order and returns the edited copy; `repr` is untouched.
/// Moved or pasted contours are re-rounded to the grid, re-chained (gaps
/// bridged, out-of-bounds parts dropped) and take precedence over the pixels
/// they land on.
inline SparseRepresentation apply_edit(const SparseRepresentation& repr, const EditScript& script,
                                       const EditOptions& options = {}) {
  SparseRepresentation current = repr;
  std::uint32_t next_id = repr.next_free_id();
  const std::size_t channels = repr.channels;

  for (std::size_t op_index = 0; op_index < script.size(); ++op_index) {
    const EditOp& op = script[op_index];
    next_id = std::max(next_id, current.next_free_id());
    detail::EditCommit commit(current, next_id);
    std::vector<Contour> kept, chosen;
    std::vector<detail::Draft> written;

    if (const auto* t = std::get_if<Translate>(&op)) {
      detail::split_by_selection(current, detail::resolve_checked(current, t->selection, op_index), kept, chosen);
      for (const auto& c : chosen) {
        auto d = detail::to_draft(c);
        for (auto& p : d.points)
          p = {detail::round_half_away(p.x + t->dx), detail::round_half_away(p.y + t->dy)};
        written.push_back(std::move(d));
      }
    } else if (const auto* s = std::get_if<Scale>(&op)) {
      if (!(s->sx > 0.0 && s->sy > 0.0)) throw EditError(EditError::Code::kBadOp, op_index, "scale factors must be positive");
      detail::split_by_selection(current, detail::resolve_checked(current, s->selection, op_index), kept, chosen);
      for (const auto& c : chosen) {
        auto d = detail::to_draft(c);
        if (current.kind == FeatureKind::kGradient) {
          // Carry the signed magnitude along the old normal; the direction is
          // rebuilt from the new normal once the geometry settles.
          const auto normals = c.normals.size() == c.size() ? c.normals : contour_normals(c);
          for (std::size_t i = 0; i < c.size(); ++i)
            for (std::size_t ch = 0; ch < channels; ++ch) {
              float* g = &d.features[(i * channels + ch) * 2];
              const double mag = std::hypot(double(g[0]), double(g[1])) * s->gscale;
              const double along = g[0] * normals[i].x + g[1] * normals[i].y;
              g[0] = static_cast<float>(along < 0.0 ? -mag : mag);
              g[1] = 0.0f;
            }
        }
        for (auto& p : d.points)
          p = {detail::round_half_away(s->cx + s->sx * (p.x - s->cx)), detail::round_half_away(s->cy + s->sy * (p.y - s->cy))};
        written.push_back(std::move(d));
      }
    } else if (const auto* e = std::get_if<Erase>(&op)) {
      detail::split_by_selection(current, detail::resolve_checked(current, e->selection, op_index), kept, chosen);
    } else {
      const auto& paste = std::get<Paste>(op);
      if (!paste.source) throw EditError(EditError::Code::kBadOp, op_index, "paste without a source");
      const auto& src = *paste.source;
      if (src.kind != current.kind || src.channels != current.channels)
        throw EditError(EditError::Code::kKindMismatch, op_index, "paste source kind or channel count differs");
      kept = current.contours.contours;
      const auto ids = detail::resolve_checked(src, paste.selection, op_index);
      const std::unordered_set<std::uint32_t> wanted(ids.begin(), ids.end());
      for (const auto& c : src.contours.contours) {
        if (!wanted.count(c.id)) continue;
        auto d = detail::to_draft(c);
        d.id = commit.fresh_id();
        for (auto& p : d.points)
          p = {detail::round_half_away(p.x + paste.dx), detail::round_half_away(p.y + paste.dy)};
        written.push_back(std::move(d));
      }
    }

    const bool reproject = current.kind == FeatureKind::kGradient && std::holds_alternative<Scale>(op);
    current = commit.finish(std::move(kept), std::move(written), options.min_length, reproject);
    next_id = commit.next_id();
  }
  validate(current);
  return current;
}

}  // namespace scif
