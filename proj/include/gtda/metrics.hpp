#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gtda/data.hpp"

namespace gtda {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fn + fp + tn; }
  std::size_t actual_positive() const { return tp + fn; }
  std::size_t actual_negative() const { return fp + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Set when tp + fp == 0 (precision reported as 0).
  bool precision_undefined = false;
  /// Set when tp + fn == 0 (recall reported as 0).
  bool recall_undefined = false;
};

/// A prediction or ground truth keyed by sample id.
struct LabeledId {
  std::string id;
  Label label = Label::Negative;
};

ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> actual);

/// Rows must be aligned: the i-th prediction and truth must carry the same id.
ConfusionMatrix confusion(std::span<const LabeledId> predicted, std::span<const LabeledId> actual);

Metrics metrics(const ConfusionMatrix& cm);

}  // namespace gtda
