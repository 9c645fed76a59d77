#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "scif/edge_detect.hpp"
#include "scif/error.hpp"

namespace scif {

struct Point {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline int chebyshev(const Point& a, const Point& b) {
  return std::max(std::abs(int(a.x) - int(b.x)), std::abs(int(a.y) - int(b.y)));
}

/// Ordered 8-connected chain of pixels. `features` is point-major with a
/// fixed number of values per point (empty until features are attached).
struct Contour {
  std::uint32_t id = 0;
  std::vector<Point> points;
  std::vector<Vec2> normals;
  std::vector<float> features;

  std::size_t size() const noexcept { return points.size(); }
  /// Endpoints touching (and at least 4 points) make the chain a loop.
  bool closed() const noexcept { return points.size() >= 4 && chebyshev(points.front(), points.back()) == 1; }

  friend bool operator==(const Contour&, const Contour&) = default;
};

struct ContourSet {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<Contour> contours;

  std::size_t total_points() const {
    std::size_t n = 0;
    for (const auto& c : contours) n += c.size();
    return n;
  }
  friend bool operator==(const ContourSet&, const ContourSet&) = default;
};

namespace detail {

// Neighbour probe order: E, SE, S, SW, W, NW, N, NE.
inline constexpr std::array<std::array<int, 2>, 8> kProbeOrder = {
    {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

}  // namespace detail

/// Groups mask pixels into simple chains. Pixels with more than two masked
/// neighbours are junctions: a chain that reaches one takes it and stops.
/// Row-major start scan and fixed probe order make the result deterministic.
inline ContourSet trace_contours(const BinaryEdgeMask& mask) {
  const auto w = mask.width, h = mask.height;
  ContourSet out{w, h, {}};
  std::vector<std::uint8_t> visited(std::size_t{w} * h, 0);
  const auto index = [w](int x, int y) { return std::size_t(y) * w + x; };

  const auto is_junction = [&](int x, int y) {
    int n = 0;
    for (auto [dx, dy] : detail::kProbeOrder) n += mask.at(x + dx, y + dy) ? 1 : 0;
    return n > 2;
  };

  // Extends from `from` until no unvisited neighbour is left or a junction is absorbed.
  const auto walk = [&](Point from, std::vector<Point>& chain) {
    for (;;) {
      bool advanced = false;
      for (auto [dx, dy] : detail::kProbeOrder) {
        const int nx = from.x + dx, ny = from.y + dy;
        if (!mask.at(nx, ny) || visited[index(nx, ny)]) continue;
        visited[index(nx, ny)] = 1;
        from = Point{static_cast<std::uint16_t>(nx), static_cast<std::uint16_t>(ny)};
        chain.push_back(from);
        advanced = !is_junction(nx, ny);
        break;
      }
      if (!advanced) return;
    }
  };

  std::uint32_t next_id = 0;
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x) {
      if (!mask.at(x, y) || visited[index(x, y)]) continue;
      visited[index(x, y)] = 1;
      const Point start{static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y)};
      std::vector<Point> forward{start};
      walk(start, forward);
      if (!is_junction(x, y)) {
        std::vector<Point> backward;
        walk(start, backward);
        if (!backward.empty()) {
          std::vector<Point> joined(backward.rbegin(), backward.rend());
          joined.insert(joined.end(), forward.begin(), forward.end());
          forward = std::move(joined);
        }
      }
      out.contours.push_back(Contour{next_id++, std::move(forward), {}, {}});
    }
  return out;
}

/// Drops contours with fewer than `min_length` points; survivors keep their ids.
inline ContourSet filter_short(const ContourSet& set, std::size_t min_length = 10) {
  ContourSet out{set.width, set.height, {}};
  for (const auto& c : set.contours)
    if (c.size() >= min_length) out.contours.push_back(c);
  return out;
}

/// Unit normals from central-difference tangents (one-sided at open ends,
/// wrapped on loops), rotated +90 degrees: (tx,ty) -> (-ty,tx).
inline std::vector<Vec2> contour_normals(const Contour& c) {
  const std::size_t n = c.size();
  if (n < 2) throw DegenerateContour(c.id, "contour " + std::to_string(c.id) + " has fewer than 2 points");
  const bool loop = c.closed();
  std::vector<Vec2> normals(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t a, b;
    if (i == 0) {
      a = loop ? n - 1 : 0;
      b = 1;
    } else if (i == n - 1) {
      a = n - 2;
      b = loop ? 0 : n - 1;
    } else {
      a = i - 1;
      b = i + 1;
    }
    const double tx = double(c.points[b].x) - c.points[a].x;
    const double ty = double(c.points[b].y) - c.points[a].y;
    const double len = std::hypot(tx, ty);
    normals[i] = Vec2{-ty / len, tx / len};
  }
  return normals;
}

inline ContourSet estimate_normals(const ContourSet& set) {
  ContourSet out = set;
  for (auto& c : out.contours) c.normals = contour_normals(c);
  return out;
}

/// Debug dump, one contour per line: `id: (x,y) (x,y) ...`.
inline void write_contour_text(std::ostream& os, const ContourSet& set) {
  for (const auto& c : set.contours) {
    os << c.id << ':';
    for (const auto& p : c.points) os << " (" << p.x << ',' << p.y << ')';
    os << '\n';
  }
}

inline std::string contour_text(const ContourSet& set) {
  std::ostringstream os;
  write_contour_text(os, set);
  return os.str();
}

}  // namespace scif
