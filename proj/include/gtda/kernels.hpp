#pragma once

// Data-parallel inner loops of the classifier and of k-means. Every kernel
// has an OpenMP version (namespace gtda::kernels) and a plain serial
// reference (gtda::kernels::reference) kept for tests and benchmarks.
//
// Tensors are dense NCHW arrays of double. Each output element is produced
// by exactly one thread with a fixed summation order, so results do not
// depend on the thread count.

#include <cstddef>
#include <cstdint>
#include <span>

namespace gtda::kernels {

struct ConvShape {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t input_size() const { return batch * in_channels * height * width; }
  std::size_t output_size() const { return batch * out_channels * height * width; }
  std::size_t weight_size() const { return out_channels * in_channels * 9; }
};

/// 3x3 convolution, stride 1, zero padding 1. Weight layout [out][in][3][3].
void conv3x3_forward(std::span<const double> input, std::span<const double> weight,
                     std::span<const double> bias, std::span<double> output, const ConvShape& shape);

/// dL/dinput from dL/doutput.
void conv3x3_backward_data(std::span<const double> grad_output, std::span<const double> weight,
                           std::span<double> grad_input, const ConvShape& shape);

/// dL/dweight and dL/dbias, summed over the batch (overwrites the outputs).
void conv3x3_backward_params(std::span<const double> input, std::span<const double> grad_output,
                             std::span<double> grad_weight, std::span<double> grad_bias,
                             const ConvShape& shape);

/// 2x2 max pooling over `planes` planes of height x width (both even).
/// `argmax` receives the flat in-plane index of each window's maximum; ties
/// keep the first element in row-major order.
void maxpool2x2_forward(std::span<const double> input, std::span<double> output,
                        std::span<std::uint32_t> argmax, std::size_t planes, std::size_t height,
                        std::size_t width);

void maxpool2x2_backward(std::span<const double> grad_output, std::span<const std::uint32_t> argmax,
                         std::span<double> grad_input, std::size_t planes, std::size_t height,
                         std::size_t width);

/// Nearest centroid by squared Euclidean distance (ties to the lower index).
void assign_nearest(std::span<const double> points, std::size_t n, std::size_t dim,
                    std::span<const double> centroids, std::size_t k, std::span<std::size_t> assignment,
                    std::span<double> distance2);

namespace reference {

void conv3x3_forward(std::span<const double> input, std::span<const double> weight,
                     std::span<const double> bias, std::span<double> output, const ConvShape& shape);
void conv3x3_backward_data(std::span<const double> grad_output, std::span<const double> weight,
                           std::span<double> grad_input, const ConvShape& shape);
void conv3x3_backward_params(std::span<const double> input, std::span<const double> grad_output,
                             std::span<double> grad_weight, std::span<double> grad_bias,
                             const ConvShape& shape);
void maxpool2x2_forward(std::span<const double> input, std::span<double> output,
                        std::span<std::uint32_t> argmax, std::size_t planes, std::size_t height,
                        std::size_t width);
void maxpool2x2_backward(std::span<const double> grad_output, std::span<const std::uint32_t> argmax,
                         std::span<double> grad_input, std::size_t planes, std::size_t height,
                         std::size_t width);
void assign_nearest(std::span<const double> points, std::size_t n, std::size_t dim,
                    std::span<const double> centroids, std::size_t k, std::span<std::size_t> assignment,
                    std::span<double> distance2);

}  // namespace reference

}  // namespace gtda::kernels
