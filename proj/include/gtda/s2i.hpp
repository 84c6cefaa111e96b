#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gtda/data.hpp"

namespace gtda {

enum class CurveType : std::uint8_t { Line, Point };
enum class Normalization : std::uint8_t { Normal, NonNormal };

std::string_view to_string(CurveType c);
std::string_view to_string(Normalization n);
CurveType parse_curve_type(std::string_view text);
Normalization parse_normalization(std::string_view text);

/// Value range shared by every sample when plotting on a common y-axis.
struct SharedRange {
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const SharedRange&) const = default;
};

/// Series-to-image parameters. `scale` is the stroke width (LINE) or disc
/// radius (POINT) in output pixels. The defaults are the (1.5, line,
/// non-normal) setting.
struct S2IParams {
  double scale = 1.5;
  CurveType curve = CurveType::Line;
  Normalization normalize = Normalization::NonNormal;
  int width = 224;
  int height = 224;
  int margin = 8;
  /// Off by default: each sample's own min/max fills the plot box.
  std::optional<SharedRange> shared_range;

  void validate() const;
  /// Short tag such as "1.5_line_non-normal", used for report cells and caches.
  std::string tag() const;
  bool operator==(const S2IParams&) const = default;
};

/// Grayscale raster stored as ink density: 0 is background, 255 full ink.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  RasterImage() = default;
  RasterImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint64_t total_ink() const;
  bool operator==(const RasterImage&) const = default;
};

/// (x - min) / (max - min); constant series map to 0.5.
std::vector<double> minmax_normalize(std::span<const double> values);
TimeSeries minmax_normalize(const TimeSeries& series);

/// Sub-pixel precision of plotted vertices: coordinates are integers in
/// units of 1/kSubpixelScale pixel.
inline constexpr int kSubpixelScale = 1 << 16;
/// Coverage samples per pixel along each axis (kCoverageGrid^2 per pixel).
inline constexpr int kCoverageGrid = 16;

struct FixedPoint {
  std::int64_t x = 0;
  std::int64_t y = 0;
  double xf() const { return static_cast<double>(x) / kSubpixelScale; }
  double yf() const { return static_cast<double>(y) / kSubpixelScale; }
};

/// Plot-space vertices of a series after normalization, min/max decimation
/// and the affine map onto the plot box. Pixel (px, py) covers
/// [px, px+1] x [py, py+1]; y grows downwards.
std::vector<FixedPoint> plot_vertices(std::span<const double> values, const S2IParams& params);

/// Min/max-preserving decimation: `buckets` contiguous buckets, each
/// contributing its minimum and maximum sample in time order. Returns the
/// kept indices.
std::vector<std::size_t> minmax_decimate(std::span<const double> values, std::size_t buckets);

/// Coverage-to-intensity rule: covered samples out of kCoverageGrid^2,
/// rounded to the nearest of 256 levels.
constexpr std::uint8_t coverage_to_ink(int covered) {
  constexpr int total = kCoverageGrid * kCoverageGrid;
  return static_cast<std::uint8_t>((covered * 255 + total / 2) / total);
}

/// Renders the series. LINE: union of butt-ended strokes of width `scale`
/// between consecutive vertices, with round joins. POINT: union of discs of
/// radius `scale` at every vertex. Coverage is the exact count of a regular
/// 16x16 sample grid inside the shape, computed per sample row from the
/// analytic span of each primitive.
RasterImage rasterize(std::span<const double> values, const S2IParams& params);
RasterImage rasterize(const TimeSeries& series, const S2IParams& params);

/// The full scale x curve x normalization grid, 20 entries, ordered by scale,
/// then LINE < POINT, then NORMAL < NON_NORMAL. Image geometry is copied from
/// `base`.
std::vector<S2IParams> param_grid(const S2IParams& base = {});

/// Binary PGM (P5, maxval 255) with display inversion: byte = 255 - ink.
void write_pgm(const RasterImage& image, const std::filesystem::path& path);
std::string encode_pgm(const RasterImage& image);
RasterImage read_pgm(const std::filesystem::path& path);

}  // namespace gtda
