// Straightforward serial versions of the kernels: one loop nest per output
// element, bounds checks instead of precomputed ranges.

#include <limits>

#include "gtda/kernels.hpp"

namespace gtda::kernels::reference {

void conv3x3_forward(std::span<const double> input, std::span<const double> weight,
                     std::span<const double> bias, std::span<double> output, const ConvShape& s) {
  const long H = static_cast<long>(s.height), W = static_cast<long>(s.width);
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t co = 0; co < s.out_channels; ++co) {
      for (long y = 0; y < H; ++y) {
        for (long x = 0; x < W; ++x) {
          double acc = bias[co];
          for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
            for (long ky = 0; ky < 3; ++ky) {
              for (long kx = 0; kx < 3; ++kx) {
                const long iy = y + ky - 1, ix = x + kx - 1;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                acc += weight[(co * s.in_channels + ci) * 9 + static_cast<std::size_t>(ky * 3 + kx)] *
                       input[((b * s.in_channels + ci) * s.height + static_cast<std::size_t>(iy)) * s.width +
                             static_cast<std::size_t>(ix)];
              }
            }
          }
          output[((b * s.out_channels + co) * s.height + static_cast<std::size_t>(y)) * s.width +
                 static_cast<std::size_t>(x)] = acc;
        }
      }
    }
  }
}

void conv3x3_backward_data(std::span<const double> grad_output, std::span<const double> weight,
                           std::span<double> grad_input, const ConvShape& s) {
  const long H = static_cast<long>(s.height), W = static_cast<long>(s.width);
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
      for (long y = 0; y < H; ++y) {
        for (long x = 0; x < W; ++x) {
          double acc = 0.0;
          for (std::size_t co = 0; co < s.out_channels; ++co) {
            for (long ky = 0; ky < 3; ++ky) {
              for (long kx = 0; kx < 3; ++kx) {
                const long oy = y - (ky - 1), ox = x - (kx - 1);
                if (oy < 0 || oy >= H || ox < 0 || ox >= W) continue;
                acc += weight[(co * s.in_channels + ci) * 9 + static_cast<std::size_t>(ky * 3 + kx)] *
                       grad_output[((b * s.out_channels + co) * s.height + static_cast<std::size_t>(oy)) *
                                       s.width +
                                   static_cast<std::size_t>(ox)];
              }
            }
          }
          grad_input[((b * s.in_channels + ci) * s.height + static_cast<std::size_t>(y)) * s.width +
                     static_cast<std::size_t>(x)] = acc;
        }
      }
    }
  }
}

void conv3x3_backward_params(std::span<const double> input, std::span<const double> grad_output,
                             std::span<double> grad_weight, std::span<double> grad_bias,
                             const ConvShape& s) {
  const long H = static_cast<long>(s.height), W = static_cast<long>(s.width);
  for (std::size_t co = 0; co < s.out_channels; ++co) {
    double bsum = 0.0;
    for (std::size_t b = 0; b < s.batch; ++b) {
      for (std::size_t i = 0; i < s.height * s.width; ++i) {
        bsum += grad_output[(b * s.out_channels + co) * s.height * s.width + i];
      }
    }
    grad_bias[co] = bsum;
    for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
      for (long ky = 0; ky < 3; ++ky) {
        for (long kx = 0; kx < 3; ++kx) {
          double acc = 0.0;
          for (std::size_t b = 0; b < s.batch; ++b) {
            for (long y = 0; y < H; ++y) {
              for (long x = 0; x < W; ++x) {
                const long iy = y + ky - 1, ix = x + kx - 1;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                acc += grad_output[((b * s.out_channels + co) * s.height + static_cast<std::size_t>(y)) *
                                       s.width +
                                   static_cast<std::size_t>(x)] *
                       input[((b * s.in_channels + ci) * s.height + static_cast<std::size_t>(iy)) * s.width +
                             static_cast<std::size_t>(ix)];
              }
            }
          }
          grad_weight[(co * s.in_channels + ci) * 9 + static_cast<std::size_t>(ky * 3 + kx)] = acc;
        }
      }
    }
  }
}

void maxpool2x2_forward(std::span<const double> input, std::span<double> output,
                        std::span<std::uint32_t> argmax, std::size_t planes, std::size_t H, std::size_t W) {
  const std::size_t OH = H / 2, OW = W / 2;
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t oy = 0; oy < OH; ++oy) {
      for (std::size_t ox = 0; ox < OW; ++ox) {
        std::size_t best = 2 * oy * W + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (2 * oy + dy) * W + 2 * ox + dx;
            if (input[p * H * W + idx] > input[p * H * W + best]) best = idx;
          }
        }
        output[p * OH * OW + oy * OW + ox] = input[p * H * W + best];
        argmax[p * OH * OW + oy * OW + ox] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

void maxpool2x2_backward(std::span<const double> grad_output, std::span<const std::uint32_t> argmax,
                         std::span<double> grad_input, std::size_t planes, std::size_t H, std::size_t W) {
  const std::size_t OHW = (H / 2) * (W / 2);
  for (std::size_t i = 0; i < planes * H * W; ++i) grad_input[i] = 0.0;
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < OHW; ++i) grad_input[p * H * W + argmax[p * OHW + i]] += grad_output[p * OHW + i];
  }
}

void assign_nearest(std::span<const double> points, std::size_t n, std::size_t dim,
                    std::span<const double> centroids, std::size_t k, std::span<std::size_t> assignment,
                    std::span<double> distance2) {
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double diff = points[i * dim + j] - centroids[c * dim + j];
        d2 += diff * diff;
      }
      if (d2 < best) {
        best = d2;
        assignment[i] = c;
      }
    }
    distance2[i] = best;
  }
}

}  // namespace gtda::kernels::reference
