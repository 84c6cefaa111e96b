#include "gtda/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <vector>

namespace gtda::kernels {

namespace {

// Convolutions run as im2col followed by a small register-blocked matrix
// product. A column matrix has one row per (channel, tap) pair, ordered
// channel-major, and one column per pixel; taps that fall in the padding
// hold zero.

// SIMD vector of doubles at the widest width the target enables. A
// micro-tile always spans kLanes pixels, so the summation order (and every
// result bit) is the same whatever the vector width.
#if defined(__AVX512F__)
typedef double Vec __attribute__((vector_size(64)));
constexpr std::size_t kVec = 8;
#elif defined(__AVX__)
typedef double Vec __attribute__((vector_size(32)));
constexpr std::size_t kVec = 4;
#else
typedef double Vec __attribute__((vector_size(16)));
constexpr std::size_t kVec = 2;
#endif
constexpr std::size_t kLanes = 8;             // pixels per micro-tile
constexpr std::size_t kVecs = kLanes / kVec;  // vectors per micro-tile row
constexpr std::size_t kRows = 8;              // output rows per micro-tile

inline Vec load(const double* p) {
  Vec v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void store(double* p, Vec v) { std::memcpy(p, &v, sizeof v); }

// cols[(c * 9 + tap) * HW + y * W + x] = src[c][y + sign*dy][x + sign*dx].
void im2col(const double* src, std::size_t channels, std::size_t H, std::size_t W, int sign, double* cols) {
  const std::size_t HW = H * W;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* plane = src + c * HW;
    for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
      for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
        const std::ptrdiff_t dy = sign * (ky - 1), dx = sign * (kx - 1);
        double* row = cols + (c * 9 + static_cast<std::size_t>(ky * 3 + kx)) * HW;
        for (std::size_t y = 0; y < H; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
          double* dst = row + y * W;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(H)) {
            std::fill(dst, dst + W, 0.0);
            continue;
          }
          const double* srow = plane + static_cast<std::size_t>(sy) * W;
          // dx is -1, 0 or 1: at most one padded column at either edge.
          const std::size_t lo = dx < 0 ? 1 : 0, hi = dx > 0 ? W - 1 : W;
          if (lo > 0) dst[0] = 0.0;
          if (hi < W) dst[W - 1] = 0.0;
          if (hi > lo) std::copy(srow + static_cast<std::ptrdiff_t>(lo) + dx, srow + static_cast<std::ptrdiff_t>(hi) + dx, dst + lo);
        }
      }
    }
  }
}

// out[r][p] = init[r] + sum_k a[k][r] * cols[k][p], with k ascending.
// `a` is K x R (transposed so one k supplies a contiguous run of rows).
template <std::size_t Rows>
void gemm_tile(const double* a, std::size_t R, std::size_t r0, const double* init, const double* cols,
               std::size_t K, std::size_t HW, double* out) {
  std::size_t p = 0;
  for (; p + kLanes <= HW; p += kLanes) {
    Vec acc[Rows][kVecs];
    for (std::size_t r = 0; r < Rows; ++r) {
      for (std::size_t v = 0; v < kVecs; ++v) acc[r][v] = Vec{} + init[r];
    }
    for (std::size_t k = 0; k < K; ++k) {
      const double* c = cols + k * HW + p;
      const double* ak = a + k * R + r0;
      Vec cv[kVecs];
      for (std::size_t v = 0; v < kVecs; ++v) cv[v] = load(c + v * kVec);
      for (std::size_t r = 0; r < Rows; ++r) {
        const double w = ak[r];
        for (std::size_t v = 0; v < kVecs; ++v) acc[r][v] += w * cv[v];
      }
    }
    for (std::size_t r = 0; r < Rows; ++r) {
      for (std::size_t v = 0; v < kVecs; ++v) store(out + r * HW + p + v * kVec, acc[r][v]);
    }
  }
  for (; p < HW; ++p) {
    for (std::size_t r = 0; r < Rows; ++r) {
      double acc = init[r];
      for (std::size_t k = 0; k < K; ++k) acc += a[k * R + r0 + r] * cols[k * HW + p];
      out[r * HW + p] = acc;
    }
  }
}

void gemm(const double* a, std::size_t R, const double* init, const double* cols, std::size_t K,
          std::size_t HW, double* out) {
  std::size_t r = 0;
  for (; r + kRows <= R; r += kRows) gemm_tile<kRows>(a, R, r, init + r, cols, K, HW, out + r * HW);
  for (; r < R; ++r) gemm_tile<1>(a, R, r, init + r, cols, K, HW, out + r * HW);
}

// lanes[r][k][l] += sum over pixels p with p % kLanes == l of g[r][p] * cols[k][p].
template <std::size_t Rows>
void gram_tile(const double* g, std::size_t r0, const double* cols, std::size_t K, std::size_t HW,
               double* lanes) {
  const std::size_t tail = HW - HW % kLanes;
  for (std::size_t k = 0; k < K; ++k) {
    const double* c = cols + k * HW;
    Vec acc[Rows][kVecs];
    for (std::size_t r = 0; r < Rows; ++r) {
      for (std::size_t v = 0; v < kVecs; ++v) acc[r][v] = load(lanes + ((r0 + r) * K + k) * kLanes + v * kVec);
    }
    for (std::size_t p = 0; p < tail; p += kLanes) {
      Vec cv[kVecs];
      for (std::size_t v = 0; v < kVecs; ++v) cv[v] = load(c + p + v * kVec);
      for (std::size_t r = 0; r < Rows; ++r) {
        for (std::size_t v = 0; v < kVecs; ++v) acc[r][v] += load(g + (r0 + r) * HW + p + v * kVec) * cv[v];
      }
    }
    for (std::size_t r = 0; r < Rows; ++r) {
      double* lk = lanes + ((r0 + r) * K + k) * kLanes;
      for (std::size_t v = 0; v < kVecs; ++v) store(lk + v * kVec, acc[r][v]);
      for (std::size_t p = tail; p < HW; ++p) lk[p % kLanes] += g[(r0 + r) * HW + p] * c[p];
    }
  }
}

// Per-thread scratch that keeps its capacity between calls; large buffers
// reallocated on every batch otherwise cost more in page faults than the
// arithmetic they hold.
enum class Slot { Cols, Lanes };

double* scratch(Slot slot, std::size_t n) {
  thread_local std::vector<double> buffers[2];
  auto& buf = buffers[static_cast<int>(slot)];
  if (buf.size() < n) buf.resize(n);
  return buf.data();
}

}  // namespace

void conv3x3_forward(std::span<const double> input, std::span<const double> weight,
                     std::span<const double> bias, std::span<double> output, const ConvShape& s) {
  const std::size_t HW = s.height * s.width, K = s.in_channels * 9, R = s.out_channels;
  // Weight [out][in*9] transposed to [in*9][out].
  std::vector<double> a(K * R);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t k = 0; k < K; ++k) a[k * R + r] = weight[r * K + k];
  }

#pragma omp parallel
  {
    double* cols = scratch(Slot::Cols, K * HW);
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(s.batch); ++b) {
      const auto bi = static_cast<std::size_t>(b);
      im2col(input.data() + bi * s.in_channels * HW, s.in_channels, s.height, s.width, 1, cols);
      gemm(a.data(), R, bias.data(), cols, K, HW, output.data() + bi * R * HW);
    }
  }
}

void conv3x3_backward_data(std::span<const double> grad_output, std::span<const double> weight,
                           std::span<double> grad_input, const ConvShape& s) {
  // Input pixel (y, x) collects output pixel (y - dy, x - dx) through tap
  // (dy, dx): a convolution of grad_output with shifts negated and the
  // weight viewed as [out*9][in].
  const std::size_t HW = s.height * s.width, K = s.out_channels * 9, R = s.in_channels;
  std::vector<double> a(K * R);
  for (std::size_t co = 0; co < s.out_channels; ++co) {
    for (std::size_t ci = 0; ci < R; ++ci) {
      for (std::size_t t = 0; t < 9; ++t) a[(co * 9 + t) * R + ci] = weight[(co * R + ci) * 9 + t];
    }
  }
  const std::vector<double> zero(R, 0.0);

#pragma omp parallel
  {
    double* cols = scratch(Slot::Cols, K * HW);
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(s.batch); ++b) {
      const auto bi = static_cast<std::size_t>(b);
      im2col(grad_output.data() + bi * s.out_channels * HW, s.out_channels, s.height, s.width, -1, cols);
      gemm(a.data(), R, zero.data(), cols, K, HW, grad_input.data() + bi * R * HW);
    }
  }
}

void conv3x3_backward_params(std::span<const double> input, std::span<const double> grad_output,
                             std::span<double> grad_weight, std::span<double> grad_bias,
                             const ConvShape& s) {
  const std::size_t HW = s.height * s.width, K = s.in_channels * 9, R = s.out_channels;
  // Lane partial sums per (out channel, column row), folded in lane order at
  // the end. Each (r, k) is owned by one thread, so the summation order does
  // not depend on the thread count.
  double* lanes = scratch(Slot::Lanes, R * K * kLanes);
  std::fill(lanes, lanes + R * K * kLanes, 0.0);
  double* cols = scratch(Slot::Cols, K * HW);
  const auto tiles = static_cast<std::ptrdiff_t>((R + kRows - 1) / kRows);

#pragma omp parallel
  for (std::size_t b = 0; b < s.batch; ++b) {
#pragma omp single
    im2col(input.data() + b * s.in_channels * HW, s.in_channels, s.height, s.width, 1, cols);
    const double* g = grad_output.data() + b * R * HW;
#pragma omp for schedule(static)
    for (std::ptrdiff_t t = 0; t < tiles; ++t) {
      const std::size_t r0 = static_cast<std::size_t>(t) * kRows;
      if (r0 + kRows <= R) {
        gram_tile<kRows>(g, r0, cols, K, HW, lanes);
      } else {
        for (std::size_t r = r0; r < R; ++r) gram_tile<1>(g, r, cols, K, HW, lanes);
      }
    }
  }

  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t k = 0; k < K; ++k) {
      double sum = 0.0;
      for (std::size_t l = 0; l < kLanes; ++l) sum += lanes[(r * K + k) * kLanes + l];
      grad_weight[r * K + k] = sum;
    }
    double bsum = 0.0;
    for (std::size_t b = 0; b < s.batch; ++b) {
      const double* g = grad_output.data() + (b * R + r) * HW;
      for (std::size_t p = 0; p < HW; ++p) bsum += g[p];
    }
    grad_bias[r] = bsum;
  }
}

void maxpool2x2_forward(std::span<const double> input, std::span<double> output,
                        std::span<std::uint32_t> argmax, std::size_t planes, std::size_t H, std::size_t W) {
  const std::size_t OH = H / 2, OW = W / 2;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(planes); ++p) {
    const double* in = input.data() + static_cast<std::size_t>(p) * H * W;
    double* out = output.data() + static_cast<std::size_t>(p) * OH * OW;
    std::uint32_t* arg = argmax.data() + static_cast<std::size_t>(p) * OH * OW;
    for (std::size_t oy = 0; oy < OH; ++oy) {
      for (std::size_t ox = 0; ox < OW; ++ox) {
        const std::size_t base = 2 * oy * W + 2 * ox;
        const std::size_t cand[4] = {base, base + 1, base + W, base + W + 1};
        std::size_t best = cand[0];
        for (int c = 1; c < 4; ++c) {
          if (in[cand[c]] > in[best]) best = cand[c];
        }
        out[oy * OW + ox] = in[best];
        arg[oy * OW + ox] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

void maxpool2x2_backward(std::span<const double> grad_output, std::span<const std::uint32_t> argmax,
                         std::span<double> grad_input, std::size_t planes, std::size_t H, std::size_t W) {
  const std::size_t OHW = (H / 2) * (W / 2);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(planes); ++p) {
    double* gin = grad_input.data() + static_cast<std::size_t>(p) * H * W;
    const double* gout = grad_output.data() + static_cast<std::size_t>(p) * OHW;
    const std::uint32_t* arg = argmax.data() + static_cast<std::size_t>(p) * OHW;
    std::fill(gin, gin + H * W, 0.0);
    for (std::size_t i = 0; i < OHW; ++i) gin[arg[i]] += gout[i];
  }
}

void assign_nearest(std::span<const double> points, std::size_t n, std::size_t dim,
                    std::span<const double> centroids, std::size_t k, std::span<std::size_t> assignment,
                    std::span<double> distance2) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const double* x = points.data() + static_cast<std::size_t>(i) * dim;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double* m = centroids.data() + c * dim;
      double d2 = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double diff = x[j] - m[j];
        d2 += diff * diff;
      }
      if (d2 < best) {
        best = d2;
        best_c = c;
      }
    }
    assignment[static_cast<std::size_t>(i)] = best_c;
    distance2[static_cast<std::size_t>(i)] = best;
  }
}

}  // namespace gtda::kernels
