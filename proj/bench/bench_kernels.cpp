// Serial reference vs OpenMP kernels. The second argument of each benchmark
// selects the implementation (0 = reference, 1 = OpenMP); the thread count
// follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <vector>

#include "gtda/kernels.hpp"
#include "gtda/rng.hpp"
#include "gtda/s2i.hpp"

namespace k = gtda::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  gtda::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

// First block of the default network on a batch of 16 64x64 images, or the
// second block when range(0) == 1.
k::ConvShape conv_shape(const benchmark::State& state) {
  if (state.range(0) == 0) return {16, 1, 8, 64, 64};
  return {16, 8, 16, 32, 32};
}

void conv_forward(benchmark::State& state) {
  const auto s = conv_shape(state);
  const auto in = random_vector(s.input_size(), 1), w = random_vector(s.weight_size(), 2),
             b = random_vector(s.out_channels, 3);
  std::vector<double> out(s.output_size());
  for (auto _ : state) {
    if (state.range(1)) {
      k::conv3x3_forward(in, w, b, out, s);
    } else {
      k::reference::conv3x3_forward(in, w, b, out, s);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

void conv_backward_data(benchmark::State& state) {
  const auto s = conv_shape(state);
  const auto g = random_vector(s.output_size(), 1), w = random_vector(s.weight_size(), 2);
  std::vector<double> out(s.input_size());
  for (auto _ : state) {
    if (state.range(1)) {
      k::conv3x3_backward_data(g, w, out, s);
    } else {
      k::reference::conv3x3_backward_data(g, w, out, s);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

void conv_backward_params(benchmark::State& state) {
  const auto s = conv_shape(state);
  const auto in = random_vector(s.input_size(), 1), g = random_vector(s.output_size(), 2);
  std::vector<double> gw(s.weight_size()), gb(s.out_channels);
  for (auto _ : state) {
    if (state.range(1)) {
      k::conv3x3_backward_params(in, g, gw, gb, s);
    } else {
      k::reference::conv3x3_backward_params(in, g, gw, gb, s);
    }
    benchmark::DoNotOptimize(gw.data());
  }
}

void maxpool(benchmark::State& state) {
  const std::size_t planes = 16 * 8, h = 64, w = 64;
  const auto in = random_vector(planes * h * w, 1);
  std::vector<double> out(planes * h * w / 4);
  std::vector<std::uint32_t> arg(out.size());
  for (auto _ : state) {
    if (state.range(0)) {
      k::maxpool2x2_forward(in, out, arg, planes, h, w);
    } else {
      k::reference::maxpool2x2_forward(in, out, arg, planes, h, w);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

// k-means assignment over the flattened 64x64 images of the training set.
void assign(benchmark::State& state) {
  const std::size_t n = 400, dim = 64 * 64, kc = 6;
  const auto pts = random_vector(n * dim, 1), cen = random_vector(kc * dim, 2);
  std::vector<std::size_t> a(n);
  std::vector<double> d(n);
  for (auto _ : state) {
    if (state.range(0)) {
      k::assign_nearest(pts, n, dim, cen, kc, a, d);
    } else {
      k::reference::assign_nearest(pts, n, dim, cen, kc, a, d);
    }
    benchmark::DoNotOptimize(d.data());
  }
}

void rasterize(benchmark::State& state) {
  gtda::S2IParams p;
  p.width = p.height = 64;
  p.curve = state.range(0) ? gtda::CurveType::Point : gtda::CurveType::Line;
  const auto v = random_vector(256, 4);
  for (auto _ : state) benchmark::DoNotOptimize(gtda::rasterize(v, p));
}

}  // namespace

BENCHMARK(conv_forward)->ArgsProduct({{0, 1}, {0, 1}})->ArgNames({"block", "omp"});
BENCHMARK(conv_backward_data)->ArgsProduct({{0, 1}, {0, 1}})->ArgNames({"block", "omp"});
BENCHMARK(conv_backward_params)->ArgsProduct({{0, 1}, {0, 1}})->ArgNames({"block", "omp"});
BENCHMARK(maxpool)->Arg(0)->Arg(1)->ArgName("omp");
BENCHMARK(assign)->Arg(0)->Arg(1)->ArgName("omp");
BENCHMARK(rasterize)->Arg(0)->Arg(1)->ArgName("point");

BENCHMARK_MAIN();
