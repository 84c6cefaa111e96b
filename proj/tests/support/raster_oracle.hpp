#pragma once

// Brute-force reference rasterizer: every pixel is sampled on a 16x16 grid
// and each sample is tested against every primitive. Vertices are placed
// with plain doubles (no sub-pixel snapping), so agreement with the library
// is expected up to one intensity level on edge pixels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gtda/s2i.hpp"

namespace oracle {

struct Pt {
  double x, y;
};

inline std::vector<Pt> vertices(const std::vector<double>& v, const gtda::S2IParams& p) {
  double lo = *std::min_element(v.begin(), v.end());
  double hi = *std::max_element(v.begin(), v.end());
  std::vector<Pt> out;
  const double n1 = static_cast<double>(v.size() - 1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    double x = p.margin + (p.width - 2.0 * p.margin) * static_cast<double>(i) / n1;
    double y = hi > lo ? (p.height - p.margin) - (p.height - 2.0 * p.margin) * (v[i] - lo) / (hi - lo)
                       : p.height / 2.0;
    out.push_back({x, y});
  }
  return out;
}

inline bool in_segment(Pt q, Pt a, Pt b, double half_width) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return false;
  const double t = ((q.x - a.x) * dx + (q.y - a.y) * dy) / len2;
  if (t < 0.0 || t > 1.0) return false;
  const double cross = (q.x - a.x) * dy - (q.y - a.y) * dx;
  return std::abs(cross) / std::sqrt(len2) <= half_width;
}

inline bool in_disc(Pt q, Pt c, double r) {
  return (q.x - c.x) * (q.x - c.x) + (q.y - c.y) * (q.y - c.y) <= r * r;
}

inline gtda::RasterImage rasterize(const std::vector<double>& v, const gtda::S2IParams& p) {
  const auto pts = vertices(v, p);
  gtda::RasterImage img(p.width, p.height);
  constexpr int G = 16;
  for (int py = 0; py < p.height; ++py) {
    for (int px = 0; px < p.width; ++px) {
      int covered = 0;
      for (int sy = 0; sy < G; ++sy) {
        for (int sx = 0; sx < G; ++sx) {
          const Pt q{px + (sx + 0.5) / G, py + (sy + 0.5) / G};
          bool hit = false;
          if (p.curve == gtda::CurveType::Line) {
            for (std::size_t i = 0; i + 1 < pts.size() && !hit; ++i) hit = in_segment(q, pts[i], pts[i + 1], p.scale / 2);
            for (std::size_t i = 1; i + 1 < pts.size() && !hit; ++i) hit = in_disc(q, pts[i], p.scale / 2);
          } else {
            for (std::size_t i = 0; i < pts.size() && !hit; ++i) hit = in_disc(q, pts[i], p.scale);
          }
          covered += hit;
        }
      }
      img.pixels[static_cast<std::size_t>(py) * p.width + px] =
          static_cast<std::uint8_t>(std::lround(covered * 255.0 / (G * G)));
    }
  }
  return img;
}

}  // namespace oracle
