#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gtda/error.hpp"
#include "gtda/rng.hpp"
#include "gtda/s2i.hpp"
#include "support/raster_oracle.hpp"
#include "support/temp_dir.hpp"

using namespace gtda;

namespace {

S2IParams small(double scale, CurveType curve, int size = 32) {
  S2IParams p;
  p.scale = scale;
  p.curve = curve;
  p.width = p.height = size;
  p.margin = 2;
  return p;
}

// Fraction of pixels within one intensity level of each other.
double agreement(const RasterImage& a, const RasterImage& b) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) ok += std::abs(int(a.pixels[i]) - int(b.pixels[i])) <= 1;
  return static_cast<double>(ok) / static_cast<double>(a.pixels.size());
}

}  // namespace

TEST_CASE("minmax_normalize") {
  CHECK(minmax_normalize(std::vector<double>{2, 4, 6}) == std::vector<double>{0, 0.5, 1});
  CHECK(minmax_normalize(std::vector<double>{5, 5, 5}) == std::vector<double>{0.5, 0.5, 0.5});
  CHECK(minmax_normalize(std::vector<double>{-1, 0, 3}) == std::vector<double>{0, 0.25, 1});
}

TEST_CASE("constant series draws one horizontal stroke with identical columns") {
  auto p = small(1.5, CurveType::Line);
  // Vertices 1.47 px apart, so no round join reaches past the butt ends.
  auto img = rasterize(std::vector<double>(20, 3.0), p);
  std::vector<int> inked;
  for (int x = 0; x < img.width; ++x) {
    int col = 0;
    for (int y = 0; y < img.height; ++y) col += img.at(x, y);
    if (col > 0) inked.push_back(x);
  }
  REQUIRE(inked.size() == static_cast<std::size_t>(img.width - 2 * p.margin));
  for (int x : inked) {
    for (int y = 0; y < img.height; ++y) CHECK(img.at(x, y) == img.at(inked.front(), y));
  }
  // Centred on the mid-height line: rows 15 and 16 share the 1.5 px stroke.
  CHECK(img.at(inked.front(), 15) == img.at(inked.front(), 16));
  CHECK(img.at(inked.front(), 15) > 0);
}

TEST_CASE("two-point line matches the supersampling oracle") {
  auto p = small(1.0, CurveType::Line);
  std::vector<double> v{0, 1};
  auto got = rasterize(v, p);
  auto want = oracle::rasterize(v, p);
  for (std::size_t i = 0; i < got.pixels.size(); ++i) CHECK(std::abs(int(got.pixels[i]) - int(want.pixels[i])) <= 1);
}

TEST_CASE("random short series agree with the oracle for both curve types") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> v(3 + rng.below(20));
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    for (auto curve : {CurveType::Line, CurveType::Point}) {
      auto p = small(0.5 + 0.5 * static_cast<double>(rng.below(5)), curve);
      CHECK(agreement(rasterize(v, p), oracle::rasterize(v, p)) >= 0.99);
    }
  }
}

TEST_CASE("rasterize is deterministic and PGM bytes repeat") {
  Rng rng(5);
  std::vector<double> v(300);
  for (auto& x : v) x = rng.normal();
  S2IParams p;
  p.width = p.height = 64;
  CHECK(encode_pgm(rasterize(v, p)) == encode_pgm(rasterize(v, p)));
}

TEST_CASE("long series are decimated without losing their extremes") {
  std::vector<double> v(5000, 0.0);
  v[1234] = 10.0;
  v[4321] = -10.0;
  auto idx = minmax_decimate(v, 64);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  CHECK(std::find(idx.begin(), idx.end(), 1234u) != idx.end());
  CHECK(std::find(idx.begin(), idx.end(), 4321u) != idx.end());
  auto p = small(1.0, CurveType::Line);
  auto img = rasterize(v, p);
  // The spike reaches the top of the plot box.
  int top_ink = 0;
  for (int x = 0; x < img.width; ++x) top_ink += img.at(x, p.margin);
  CHECK(top_ink > 0);
}

TEST_CASE("normalization only matters with a shared range") {
  std::vector<double> v{0, 5, 2, 7, 1};
  auto a = small(1.0, CurveType::Line);
  auto b = a;
  b.normalize = Normalization::Normal;
  CHECK(rasterize(v, a) == rasterize(v, b));
  a.shared_range = b.shared_range = SharedRange{-10.0, 10.0};
  CHECK(rasterize(v, a) != rasterize(v, b));
}

TEST_CASE("param_grid") {
  auto g = param_grid();
  REQUIRE(g.size() == 20);
  CHECK(g.front().scale == 0.5);
  CHECK(g.front().curve == CurveType::Line);
  CHECK(g.front().normalize == Normalization::Normal);
  S2IParams selected;
  selected.scale = 1.5;
  selected.curve = CurveType::Line;
  selected.normalize = Normalization::NonNormal;
  CHECK(std::find(g.begin(), g.end(), selected) != g.end());
  CHECK(selected.tag() == "1.5_line_non-normal");
}

TEST_CASE("pgm encoding") {
  RasterImage blank(2, 2);
  CHECK(encode_pgm(blank) == std::string("P5\n2 2\n255\n\xFF\xFF\xFF\xFF", 15));
  RasterImage ink(1, 1);
  ink.pixels[0] = 255;
  CHECK(encode_pgm(ink).back() == '\0');

  TempDir dir;
  Rng rng(3);
  RasterImage img(7, 5);
  for (auto& px : img.pixels) px = static_cast<std::uint8_t>(rng.below(256));
  write_pgm(img, dir / "x.pgm");
  CHECK(read_pgm(dir / "x.pgm") == img);
  dir.write("bad.pgm", "P2\n1 1\n255\n0");
  CHECK_THROWS_AS(read_pgm(dir / "bad.pgm"), DataError);
  dir.write("short.pgm", "P5\n4 4\n255\nab");
  CHECK_THROWS_AS(read_pgm(dir / "short.pgm"), DataError);
}

TEST_CASE("parameter validation") {
  S2IParams p;
  p.scale = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_THROWS_AS(rasterize(std::vector<double>{1.0}, S2IParams{}), DataError);
  CHECK(parse_curve_type(to_string(CurveType::Point)) == CurveType::Point);
  CHECK(parse_normalization(to_string(Normalization::NonNormal)) == Normalization::NonNormal);
}
