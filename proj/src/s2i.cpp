#include "gtda/s2i.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "gtda/error.hpp"

namespace gtda {

std::string_view to_string(CurveType c) { return c == CurveType::Line ? "line" : "point"; }

std::string_view to_string(Normalization n) {
  return n == Normalization::Normal ? "normal" : "non-normal";
}

CurveType parse_curve_type(std::string_view text) {
  if (text == "line" || text == "LINE") return CurveType::Line;
  if (text == "point" || text == "POINT") return CurveType::Point;
  throw ConfigError("unknown curve type '" + std::string(text) + "' (expected line|point)");
}

Normalization parse_normalization(std::string_view text) {
  if (text == "normal" || text == "NORMAL") return Normalization::Normal;
  if (text == "non-normal" || text == "non_normal" || text == "NON_NORMAL") return Normalization::NonNormal;
  throw ConfigError("unknown normalization '" + std::string(text) + "' (expected normal|non-normal)");
}

void S2IParams::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("s2i: scale must be > 0");
  if (width < 32 || height < 32) throw ConfigError("s2i: width and height must be >= 32");
  if (margin < 0 || 4 * margin >= std::min(width, height)) {
    throw ConfigError("s2i: margin must be in [0, min(width, height) / 4)");
  }
  if (shared_range && !(shared_range->hi > shared_range->lo)) {
    throw ConfigError("s2i: shared range must have hi > lo");
  }
}

std::string S2IParams::tag() const {
  std::ostringstream os;
  os << scale << '_' << to_string(curve) << '_' << to_string(normalize);
  return os.str();
}

std::uint64_t RasterImage::total_ink() const {
  std::uint64_t sum = 0;
  for (auto p : pixels) sum += p;
  return sum;
}

std::vector<double> minmax_normalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.5);
  if (values.empty()) return out;
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (range > 0.0) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / range;
  }
  return out;
}

TimeSeries minmax_normalize(const TimeSeries& series) {
  return {series.id, minmax_normalize(std::span<const double>(series.values))};
}

std::vector<std::size_t> minmax_decimate(std::span<const double> values, std::size_t buckets) {
  const std::size_t n = values.size();
  std::vector<std::size_t> kept;
  if (buckets == 0 || n == 0) return kept;
  kept.reserve(2 * buckets);
  for (std::size_t b = 0; b < buckets; ++b) {
    const std::size_t begin = b * n / buckets;
    const std::size_t end = (b + 1) * n / buckets;
    if (begin >= end) continue;
    std::size_t imin = begin, imax = begin;
    for (std::size_t i = begin + 1; i < end; ++i) {
      if (values[i] < values[imin]) imin = i;
      if (values[i] > values[imax]) imax = i;
    }
    kept.push_back(std::min(imin, imax));
    if (imin != imax) kept.push_back(std::max(imin, imax));
  }
  return kept;
}

std::vector<FixedPoint> plot_vertices(std::span<const double> raw, const S2IParams& params) {
  params.validate();
  if (raw.size() < 2) throw DataError("rasterize: series length must be >= 2");

  std::vector<double> normalized;
  std::span<const double> values = raw;
  if (params.normalize == Normalization::Normal) {
    normalized = minmax_normalize(raw);
    values = normalized;
  }

  double lo, hi;
  if (params.shared_range) {
    if (params.normalize == Normalization::Normal) {
      lo = 0.0;
      hi = 1.0;
    } else {
      lo = params.shared_range->lo;
      hi = params.shared_range->hi;
    }
  } else {
    auto [a, b] = std::minmax_element(values.begin(), values.end());
    lo = *a;
    hi = *b;
  }

  const std::size_t n = values.size();
  std::vector<std::size_t> indices;
  if (n > 4 * static_cast<std::size_t>(params.width)) {
    indices = minmax_decimate(values, 2 * static_cast<std::size_t>(params.width));
  } else {
    indices.resize(n);
    for (std::size_t i = 0; i < n; ++i) indices[i] = i;
  }

  const double x0 = params.margin;
  const double x_span = params.width - 2.0 * params.margin;
  const double y_bottom = params.height - params.margin;
  const double y_span = params.height - 2.0 * params.margin;
  const double last = static_cast<double>(n - 1);

  std::vector<FixedPoint> pts;
  pts.reserve(indices.size());
  for (std::size_t idx : indices) {
    const double x = x0 + (static_cast<double>(idx) / last) * x_span;
    double y;
    if (hi > lo) {
      const double t = std::clamp((values[idx] - lo) / (hi - lo), 0.0, 1.0);
      y = y_bottom - t * y_span;
    } else {
      y = params.height / 2.0;
    }
    pts.push_back({std::llround(x * kSubpixelScale), std::llround(y * kSubpixelScale)});
  }
  return pts;
}

namespace {

// Points P with 0 <= (P-A).d <= |d|^2 and |(P-A) x d| <= r|d|.
struct Strip {
  double ax, ay, dx, dy, len2, rlen;
};

struct Disc {
  double cx, cy, r2;
};

struct Interval {
  double lo, hi;
  bool empty() const { return !(lo <= hi); }
};

// Solves lo <= a*x + b <= hi for x.
Interval linear_band(double a, double b, double lo, double hi) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (a > 0.0) return {(lo - b) / a, (hi - b) / a};
  if (a < 0.0) return {(hi - b) / a, (lo - b) / a};
  return (b >= lo && b <= hi) ? Interval{-inf, inf} : Interval{inf, -inf};
}

Interval strip_span(const Strip& s, double c) {
  const double ey = c - s.ay;
  Interval along = linear_band(s.dx, ey * s.dy - s.ax * s.dx, 0.0, s.len2);
  Interval across = linear_band(s.dy, -s.ax * s.dy - ey * s.dx, -s.rlen, s.rlen);
  return {std::max(along.lo, across.lo), std::min(along.hi, across.hi)};
}

Interval disc_span(const Disc& d, double c) {
  const double ey = c - d.cy;
  const double rem = d.r2 - ey * ey;
  if (rem < 0.0) return {1.0, -1.0};
  const double half = std::sqrt(rem);
  return {d.cx - half, d.cx + half};
}

struct SampleRange {
  long lo, hi;
};

}  // namespace

RasterImage rasterize(std::span<const double> values, const S2IParams& params) {
  const auto pts = plot_vertices(values, params);
  const int W = params.width;
  const int H = params.height;
  constexpr int G = kCoverageGrid;

  std::vector<Strip> strips;
  std::vector<Disc> discs;
  // Per pixel row: which primitives may touch it. Strips are encoded as
  // non-negative indices, discs as ~index.
  std::vector<std::vector<long>> rows(static_cast<std::size_t>(H));

  auto bucket = [&](double ymin, double ymax, long code) {
    const int r0 = std::max(0, static_cast<int>(std::floor(ymin)));
    const int r1 = std::min(H - 1, static_cast<int>(std::floor(ymax)));
    for (int r = r0; r <= r1; ++r) rows[static_cast<std::size_t>(r)].push_back(code);
  };

  auto add_disc = [&](const FixedPoint& p, double r) {
    const double cy = p.yf();
    discs.push_back({p.xf(), cy, r * r});
    bucket(cy - r, cy + r, ~static_cast<long>(discs.size() - 1));
  };

  if (params.curve == CurveType::Line) {
    const double r = params.scale / 2.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double ax = pts[i].xf(), ay = pts[i].yf();
      const double dx = pts[i + 1].xf() - ax, dy = pts[i + 1].yf() - ay;
      const double len2 = dx * dx + dy * dy;
      if (len2 == 0.0) continue;
      strips.push_back({ax, ay, dx, dy, len2, r * std::sqrt(len2)});
      bucket(std::min(ay, ay + dy) - r, std::max(ay, ay + dy) + r, static_cast<long>(strips.size() - 1));
    }
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) add_disc(pts[i], r);
  } else {
    for (const auto& p : pts) add_disc(p, params.scale);
  }

  RasterImage img(W, H);
  const long max_sample = static_cast<long>(W) * G - 1;
  std::vector<int> counts(static_cast<std::size_t>(W));
  std::vector<SampleRange> ranges;

  for (int py = 0; py < H; ++py) {
    const auto& prims = rows[static_cast<std::size_t>(py)];
    if (prims.empty()) continue;
    std::fill(counts.begin(), counts.end(), 0);
    for (int sy = 0; sy < G; ++sy) {
      const double c = py + (sy + 0.5) / G;
      ranges.clear();
      for (long code : prims) {
        Interval iv = code >= 0 ? strip_span(strips[static_cast<std::size_t>(code)], c)
                                : disc_span(discs[static_cast<std::size_t>(~code)], c);
        if (iv.empty()) continue;
        // Sample i sits at x = (i + 0.5) / G.
        const double first = std::max(0.0, std::ceil(iv.lo * G - 0.5));
        const double last = std::min(static_cast<double>(max_sample), std::floor(iv.hi * G - 0.5));
        if (first > last) continue;
        ranges.push_back({static_cast<long>(first), static_cast<long>(last)});
      }
      if (ranges.empty()) continue;
      std::sort(ranges.begin(), ranges.end(), [](auto a, auto b) { return a.lo < b.lo; });

      auto accumulate = [&](long lo, long hi) {
        const long p0 = lo / G, p1 = hi / G;
        if (p0 == p1) {
          counts[static_cast<std::size_t>(p0)] += static_cast<int>(hi - lo + 1);
          return;
        }
        counts[static_cast<std::size_t>(p0)] += static_cast<int>(G * (p0 + 1) - lo);
        for (long p = p0 + 1; p < p1; ++p) counts[static_cast<std::size_t>(p)] += G;
        counts[static_cast<std::size_t>(p1)] += static_cast<int>(hi - G * p1 + 1);
      };

      long cur_lo = ranges[0].lo, cur_hi = ranges[0].hi;
      for (std::size_t k = 1; k < ranges.size(); ++k) {
        if (ranges[k].lo <= cur_hi + 1) {
          cur_hi = std::max(cur_hi, ranges[k].hi);
        } else {
          accumulate(cur_lo, cur_hi);
          cur_lo = ranges[k].lo;
          cur_hi = ranges[k].hi;
        }
      }
      accumulate(cur_lo, cur_hi);
    }
    auto* row = img.pixels.data() + static_cast<std::size_t>(py) * W;
    for (int px = 0; px < W; ++px) row[px] = coverage_to_ink(counts[static_cast<std::size_t>(px)]);
  }
  return img;
}

RasterImage rasterize(const TimeSeries& series, const S2IParams& params) {
  return rasterize(std::span<const double>(series.values), params);
}

std::vector<S2IParams> param_grid(const S2IParams& base) {
  std::vector<S2IParams> grid;
  for (double scale : {0.5, 1.0, 1.5, 2.0, 2.5}) {
    for (CurveType curve : {CurveType::Line, CurveType::Point}) {
      for (Normalization norm : {Normalization::Normal, Normalization::NonNormal}) {
        S2IParams p = base;
        p.scale = scale;
        p.curve = curve;
        p.normalize = norm;
        grid.push_back(p);
      }
    }
  }
  return grid;
}

std::string encode_pgm(const RasterImage& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.reserve(out.size() + image.pixels.size());
  for (auto ink : image.pixels) out.push_back(static_cast<char>(255 - ink));
  return out;
}

void write_pgm(const RasterImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  const std::string bytes = encode_pgm(image);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

RasterImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  auto fail = [&](const std::string& what) -> void {
    throw DataError(path.string() + ": malformed PGM (" + what + ")");
  };
  auto skip_space = [&] {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_space();
    long v = 0;
    std::size_t start = pos;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) {
      v = v * 10 + (data[pos] - '0');
      ++pos;
    }
    if (pos == start) fail("expected integer");
    return v;
  };

  if (data.size() < 2 || data[0] != 'P' || data[1] != '5') fail("missing P5 magic");
  pos = 2;
  const long w = read_int();
  const long h = read_int();
  const long maxval = read_int();
  if (maxval != 255) fail("maxval must be 255");
  if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos]))) fail("header terminator");
  ++pos;
  if (w <= 0 || h <= 0 || data.size() - pos != static_cast<std::size_t>(w * h)) fail("pixel count");

  RasterImage img(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(255 - static_cast<unsigned char>(data[pos + i]));
  }
  return img;
}

}  // namespace gtda
