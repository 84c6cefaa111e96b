#include "gtda/metrics.hpp"

#include "gtda/error.hpp"

namespace gtda {

ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> actual) {
  if (predicted.size() != actual.size()) {
    throw DataError("confusion: " + std::to_string(predicted.size()) + " predictions for " +
                    std::to_string(actual.size()) + " truths");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool pred_pos = predicted[i] == Label::Positive;
    if (actual[i] == Label::Positive) {
      (pred_pos ? cm.tp : cm.fn) += 1;
    } else {
      (pred_pos ? cm.fp : cm.tn) += 1;
    }
  }
  return cm;
}

ConfusionMatrix confusion(std::span<const LabeledId> predicted, std::span<const LabeledId> actual) {
  if (predicted.size() != actual.size()) {
    throw DataError("confusion: " + std::to_string(predicted.size()) + " predictions for " +
                    std::to_string(actual.size()) + " truths");
  }
  std::vector<Label> p, a;
  p.reserve(predicted.size());
  a.reserve(actual.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i].id != actual[i].id) {
      throw DataError("confusion: id mismatch at row " + std::to_string(i) + " ('" + predicted[i].id +
                      "' vs '" + actual[i].id + "')");
    }
    p.push_back(predicted[i].label);
    a.push_back(actual[i].label);
  }
  return confusion(p, a);
}

Metrics metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw DataError("metrics: empty confusion matrix");
  Metrics m;
  const auto d = [](std::size_t v) { return static_cast<double>(v); };
  m.accuracy = d(cm.tp + cm.tn) / d(cm.total());
  if (cm.tp + cm.fp == 0) {
    m.precision_undefined = true;
  } else {
    m.precision = d(cm.tp) / d(cm.tp + cm.fp);
  }
  if (cm.tp + cm.fn == 0) {
    m.recall_undefined = true;
  } else {
    m.recall = d(cm.tp) / d(cm.tp + cm.fn);
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

}  // namespace gtda
