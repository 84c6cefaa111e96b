#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <vector>

#include "gtda/kernels.hpp"
#include "gtda/rng.hpp"

using namespace gtda;
namespace k = gtda::kernels;

namespace {

std::vector<double> randn(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
  }
  return m;
}

// Shapes with odd widths, single channels and more than one row tile.
const k::ConvShape kShapes[] = {
    {1, 1, 1, 3, 3}, {2, 1, 8, 16, 16}, {3, 8, 16, 8, 8}, {2, 3, 5, 7, 9}, {4, 16, 32, 4, 4}, {1, 9, 17, 5, 6},
};

}  // namespace

TEST_CASE("conv forward and backward_data match the serial reference exactly") {
  for (int threads : {1, 3}) {
    omp_set_num_threads(threads);
    std::uint64_t seed = 1;
    for (const auto& s : kShapes) {
      auto x = randn(s.input_size(), seed++);
      auto w = randn(s.weight_size(), seed++);
      auto b = randn(s.out_channels, seed++);
      std::vector<double> y(s.output_size()), y_ref(s.output_size());
      k::conv3x3_forward(x, w, b, y, s);
      k::reference::conv3x3_forward(x, w, b, y_ref, s);
      CHECK(y == y_ref);

      auto gy = randn(s.output_size(), seed++);
      std::vector<double> gx(s.input_size()), gx_ref(s.input_size());
      k::conv3x3_backward_data(gy, w, gx, s);
      k::reference::conv3x3_backward_data(gy, w, gx_ref, s);
      CHECK(gx == gx_ref);
    }
  }
  omp_set_num_threads(omp_get_num_procs());
}

TEST_CASE("conv backward_params matches the reference and is thread-count invariant") {
  std::uint64_t seed = 100;
  for (const auto& s : kShapes) {
    auto x = randn(s.input_size(), seed++);
    auto gy = randn(s.output_size(), seed++);
    std::vector<double> gw_ref(s.weight_size()), gb_ref(s.out_channels);
    k::reference::conv3x3_backward_params(x, gy, gw_ref, gb_ref, s);

    std::vector<double> gw1(s.weight_size()), gb1(s.out_channels);
    omp_set_num_threads(1);
    k::conv3x3_backward_params(x, gy, gw1, gb1, s);
    CHECK(max_rel(gw1, gw_ref) < 1e-12);
    CHECK(max_rel(gb1, gb_ref) < 1e-12);

    std::vector<double> gw3(s.weight_size(), 7.0), gb3(s.out_channels, 7.0);
    omp_set_num_threads(3);
    k::conv3x3_backward_params(x, gy, gw3, gb3, s);
    CHECK(gw3 == gw1);
    CHECK(gb3 == gb1);
  }
  omp_set_num_threads(omp_get_num_procs());
}

TEST_CASE("conv backward is the adjoint of forward") {
  // <conv(x), g> == <x, conv_T(g)> for zero bias.
  k::ConvShape s{2, 3, 4, 6, 5};
  auto x = randn(s.input_size(), 1), w = randn(s.weight_size(), 2), g = randn(s.output_size(), 3);
  std::vector<double> zero(s.out_channels, 0.0), y(s.output_size()), gx(s.input_size());
  k::conv3x3_forward(x, w, zero, y, s);
  k::conv3x3_backward_data(g, w, gx, s);
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += y[i] * g[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * gx[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("maxpool matches the reference, ties go to the first element") {
  const std::size_t planes = 5, h = 6, w = 8;
  auto x = randn(planes * h * w, 9);
  x[0] = x[1] = x[w] = x[w + 1] = 2.0;
  std::vector<double> y(planes * h * w / 4), y_ref(y.size());
  std::vector<std::uint32_t> am(y.size()), am_ref(y.size());
  k::maxpool2x2_forward(x, y, am, planes, h, w);
  k::reference::maxpool2x2_forward(x, y_ref, am_ref, planes, h, w);
  CHECK(y == y_ref);
  CHECK(am == am_ref);
  CHECK(am[0] == 0);

  auto gy = randn(y.size(), 10);
  std::vector<double> gx(x.size()), gx_ref(x.size());
  k::maxpool2x2_backward(gy, am, gx, planes, h, w);
  k::reference::maxpool2x2_backward(gy, am_ref, gx_ref, planes, h, w);
  CHECK(gx == gx_ref);
}

TEST_CASE("assign_nearest matches the reference, ties to the lower index") {
  const std::size_t n = 200, d = 7, kc = 5;
  auto pts = randn(n * d, 4);
  auto cen = randn(kc * d, 5);
  std::copy(cen.begin(), cen.begin() + d, cen.begin() + 3 * d);  // centroids 0 and 3 coincide
  std::vector<std::size_t> a(n), a_ref(n);
  std::vector<double> d2(n), d2_ref(n);
  k::assign_nearest(pts, n, d, cen, kc, a, d2);
  k::reference::assign_nearest(pts, n, d, cen, kc, a_ref, d2_ref);
  CHECK(a == a_ref);
  CHECK(d2 == d2_ref);
  for (auto c : a) CHECK(c != 3);
}
