#include "gtda/vbl.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gtda/error.hpp"

namespace gtda {

ClassPair softmax(const ClassPair& z) {
  const double mx = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - mx);
  const double e1 = std::exp(z[1] - mx);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

VblState VblState::for_training(std::size_t batch_size, std::size_t n_train) {
  if (batch_size == 0 || n_train == 0) throw ConfigError("vbl: batch size and N must be positive");
  VblState s;
  s.gamma_num_ = batch_size;
  s.gamma_den_ = n_train;
  return s;
}

VblState VblState::with_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("vbl: gamma must be > 0");
  VblState s;
  s.gamma_real_ = gamma;
  return s;
}

VblState VblState::frozen_at(const ClassPair& omega) {
  VblState s;
  s.gamma_real_ = 1.0;
  s.omega_ = omega;
  s.frozen_ = true;
  return s;
}

double VblState::gamma() const {
  return gamma_den_ ? static_cast<double>(gamma_num_) / static_cast<double>(gamma_den_) : gamma_real_;
}

double VblState::alpha() const {
  if (gamma_den_) {
    const double remaining = static_cast<double>(gamma_den_) - static_cast<double>(steps_ * gamma_num_);
    return remaining / static_cast<double>(gamma_den_);
  }
  return 1.0 - static_cast<double>(steps_) * gamma_real_;
}

void VblState::observe(Label cls, double x) {
  const std::size_t y = class_index(cls);
  const auto n = ++count_[y];
  if (n == 1) {
    mean_[y] = x;
    variance_[y] = 0.0;
    return;
  }
  const double nd = static_cast<double>(n);
  const double prev = mean_[y];
  const double dev = x - prev;
  variance_[y] = (nd - 1.0) / (nd * nd) * dev * dev + (nd - 1.0) / nd * variance_[y];
  mean_[y] = prev + dev / nd;
}

void VblState::update_stats(std::span<const ClassPair> logits, std::span<const Label> labels) {
  if (frozen_) return;
  if (logits.size() != labels.size()) throw DataError("vbl: logits and labels differ in length");
  ClassPair sum{0.0, 0.0};
  std::array<std::size_t, 2> n{0, 0};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const std::size_t y = class_index(labels[i]);
    sum[y] += softmax(logits[i])[y];
    ++n[y];
  }
  for (Label cls : {Label::Positive, Label::Negative}) {
    const std::size_t y = class_index(cls);
    if (n[y] > 0) observe(cls, sum[y] / static_cast<double>(n[y]));
  }
}

double blend_weight(double omega, double alpha, double variance) {
  return alpha * omega + (1.0 - alpha) * variance;
}

void VblState::update_weights() {
  if (frozen_) return;
  const double a = alpha();
  for (std::size_t y = 0; y < 2; ++y) omega_[y] = blend_weight(omega_[y], a, variance_[y]);
  ++steps_;
  if (alpha() <= 0.0) frozen_ = true;
}

ClassPair VblState::loss_weights() const { return convert_weights(omega_); }

ClassPair convert_weights(const ClassPair& omega) {
  return {std::max(omega[kNegative], kWeightFloor), std::max(omega[kPositive], kWeightFloor)};
}

namespace {

// a_c = z_c + log w_c; returns (logsumexp(a), a).
std::pair<double, ClassPair> shifted(const ClassPair& z, const ClassPair& w) {
  const ClassPair a{z[0] + std::log(w[0]), z[1] + std::log(w[1])};
  const double mx = std::max(a[0], a[1]);
  const double lse = mx + std::log(std::exp(a[0] - mx) + std::exp(a[1] - mx));
  return {lse, a};
}

}  // namespace

double vbl_loss(const ClassPair& z, Label label, const ClassPair& w) {
  const std::size_t y = class_index(label);
  const std::size_t other = 1 - y;
  // log(1 + e^d) with d = a_other - a_y, kept accurate for both signs of d.
  const double d = (z[other] + std::log(w[other])) - (z[y] + std::log(w[y]));
  return d > 0.0 ? d + std::log1p(std::exp(-d)) : std::log1p(std::exp(d));
}

ClassPair vbl_grad(const ClassPair& z, Label label, const ClassPair& w) {
  const auto [lse, a] = shifted(z, w);
  // Two classes: q_y - 1 = -q_other, which avoids cancellation when q_y -> 1.
  const std::size_t y = class_index(label);
  const std::size_t other = 1 - y;
  const double q_other = std::exp(a[other] - lse);
  ClassPair g{};
  g[other] = q_other;
  g[y] = -q_other;
  return g;
}

BatchLoss vbl_batch(std::span<const ClassPair> logits, std::span<const Label> labels, const ClassPair& w) {
  if (logits.size() != labels.size()) throw DataError("vbl: logits and labels differ in length");
  BatchLoss out;
  out.grad.resize(logits.size());
  if (logits.empty()) return out;
  const double inv = 1.0 / static_cast<double>(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    total += vbl_loss(logits[i], labels[i], w);
    auto g = vbl_grad(logits[i], labels[i], w);
    out.grad[i] = {g[0] * inv, g[1] * inv};
  }
  out.loss = total * inv;
  return out;
}

}  // namespace gtda
