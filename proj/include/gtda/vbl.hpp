#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gtda/data.hpp"

namespace gtda {

/// A per-class pair indexed by class_index(): [0] positive, [1] negative.
using ClassPair = std::array<double, 2>;

/// Floor applied to converted weights so the loss never divides by zero.
inline constexpr double kWeightFloor = 1e-8;

/// Max-subtracted softmax of a logit pair.
ClassPair softmax(const ClassPair& logits);

/// Running statistics and weights of the variance-based loss.
///
/// The decay factor is alpha = 1 - steps * gamma. When gamma comes from a
/// batch size and a training-set size it is kept as that integer fraction,
/// so the freeze point lands exactly where batch_size * steps reaches N.
class VblState {
 public:
  /// gamma = batch_size / n_train.
  static VblState for_training(std::size_t batch_size, std::size_t n_train);
  /// Arbitrary positive gamma.
  static VblState with_gamma(double gamma);
  /// A state that never adapts: weights fixed at `omega`.
  static VblState frozen_at(const ClassPair& omega);

  const ClassPair& mean() const { return mean_; }
  const ClassPair& variance() const { return variance_; }
  const ClassPair& omega() const { return omega_; }
  const std::array<std::uint64_t, 2>& count() const { return count_; }
  double alpha() const;
  double gamma() const;
  std::uint64_t steps() const { return steps_; }
  bool frozen() const { return frozen_; }

  /// Folds one batch into the per-class running mean/variance of the
  /// probability assigned to the true class. Each class present in the batch
  /// contributes one observation: its batch mean. No-op once frozen.
  void update_stats(std::span<const ClassPair> logits, std::span<const Label> labels);

  /// Folds a single observation for one class (exposed for tests).
  void observe(Label cls, double probability);

  /// omega_y <- alpha * omega_y + (1 - alpha) * V_y, then alpha <- alpha - gamma;
  /// freezes once alpha <= 0. No-op once frozen.
  void update_weights();

  /// Cross-assigned weights used by the loss (see convert_weights).
  ClassPair loss_weights() const;

 private:
  ClassPair mean_{0.0, 0.0};
  ClassPair variance_{0.0, 0.0};
  ClassPair omega_{1.0, 1.0};
  std::array<std::uint64_t, 2> count_{0, 0};
  std::uint64_t steps_ = 0;
  // gamma = gamma_num / gamma_den when exact, else gamma_real.
  std::uint64_t gamma_num_ = 0;
  std::uint64_t gamma_den_ = 0;
  double gamma_real_ = 0.0;
  bool frozen_ = false;
};

/// One step of the weight recursion: alpha * omega + (1 - alpha) * variance.
double blend_weight(double omega, double alpha, double variance);

/// Swap: the positive label is weighted by the negative class's variance
/// weight and vice versa; floored at kWeightFloor.
ClassPair convert_weights(const ClassPair& omega);

/// -log( w_y e^{z_y} / sum_c w_c e^{z_c} ), evaluated as a log-sum-exp.
double vbl_loss(const ClassPair& logits, Label label, const ClassPair& loss_weights);

/// dL/dz_c = q_c - [c == y] with q = softmax(z + log w).
ClassPair vbl_grad(const ClassPair& logits, Label label, const ClassPair& loss_weights);

struct BatchLoss {
  double loss = 0.0;
  /// Per-sample dL/dz of the batch-mean loss (already divided by the batch size).
  std::vector<ClassPair> grad;
};

BatchLoss vbl_batch(std::span<const ClassPair> logits, std::span<const Label> labels,
                    const ClassPair& loss_weights);

}  // namespace gtda
