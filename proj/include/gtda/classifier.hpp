#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gtda/data.hpp"
#include "gtda/metrics.hpp"
#include "gtda/s2i.hpp"
#include "gtda/vbl.hpp"

namespace gtda {

/// conv3x3 + ReLU + maxpool2x2 blocks, then global average pooling and a
/// dense layer producing the (positive, negative) logit pair.
struct ModelConfig {
  int input_size = 64;
  std::vector<int> channels{8, 16, 32};
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t parameter_count() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Dense NCHW batch.
struct Tensor {
  std::size_t n = 0, c = 0, h = 0, w = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_)
      : n(n_), c(c_), h(h_), w(w_), data(n_ * c_ * h_ * w_, 0.0) {}
  std::size_t size() const { return data.size(); }
  /// Changes the shape; contents are unspecified afterwards. Keeps capacity.
  void reshape(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_) {
    n = n_, c = c_, h = h_, w = w_;
    data.resize(n_ * c_ * h_ * w_);
  }
};

/// Stacks images into an (N, 1, H, W) tensor with ink scaled to [0, 1].
Tensor to_tensor(std::span<const RasterImage* const> images);

/// Activations kept by Network::forward for the matching backward pass.
/// Reusing one cache across batches also reuses its storage.
struct ForwardCache {
  std::size_t batch = 0;
  std::uint64_t version = 0;
  bool valid = false;
  std::vector<Tensor> block_input;
  std::vector<Tensor> preactivation;
  std::vector<std::vector<std::uint32_t>> pool_argmax;
  Tensor pooled;                  // output of the last block
  std::vector<double> features;  // N x C after global average pooling
  mutable Tensor grad_out, grad_pre, grad_in;  // backward scratch
};

class Network {
 public:
  /// All-zero parameters.
  explicit Network(ModelConfig config);
  /// He-scaled normal weights (std = sqrt(2 / fan_in)), zero biases, drawn
  /// from the weight-init stream of config.seed.
  static Network init(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<const double> parameters() const { return params_; }
  /// Mutable access invalidates outstanding forward caches.
  std::span<double> mutable_parameters();
  std::uint64_t version() const { return version_; }

  std::span<double> conv_weight(std::size_t block);
  std::span<double> conv_bias(std::size_t block);
  std::span<double> dense_weight();  // [2][C]
  std::span<double> dense_bias();    // [2]

  std::vector<ClassPair> forward(const Tensor& input, ForwardCache* cache = nullptr) const;

  /// Gradient of sum_i <grad_logits[i], logits[i]> with respect to every
  /// parameter, in parameter order. Throws if `cache` came from a different
  /// parameter version or batch.
  std::vector<double> backward(const ForwardCache& cache, std::span<const ClassPair> grad_logits) const;

  /// params += delta.
  void apply_update(std::span<const double> delta);

 private:
  struct BlockLayout {
    std::size_t in, out, size, weight_offset, bias_offset;
  };

  ModelConfig config_;
  std::vector<BlockLayout> blocks_;
  std::size_t dense_weight_offset_ = 0;
  std::size_t dense_bias_offset_ = 0;
  std::vector<double> params_;
  std::uint64_t version_ = 0;
};

enum class LossKind : std::uint8_t { CrossEntropy, Vbl };

std::string_view to_string(LossKind loss);
LossKind parse_loss_kind(std::string_view text);

struct TrainConfig {
  double learning_rate = 0.0002;
  int epochs = 50;
  std::size_t batch_size = 16;
  double momentum = 0.9;
  LossKind loss = LossKind::CrossEntropy;
  std::uint64_t shuffle_seed = 0;
  /// Evaluate the holdout after every epoch (otherwise only after the last).
  bool eval_each_epoch = true;

  void validate() const;
};

/// Rasterized samples ready for training. Replicas may share an image.
struct ImageSet {
  std::vector<std::string> ids;
  std::vector<Label> labels;
  std::vector<std::shared_ptr<const RasterImage>> images;

  std::size_t size() const { return ids.size(); }
  void add(std::string id, Label label, std::shared_ptr<const RasterImage> image);
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  bool has_eval = false;
  Metrics eval;
  ClassPair omega{1.0, 1.0};
  double alpha = 1.0;
};

/// VBL state after the update of one batch.
struct VblLogRow {
  int epoch = 0;
  std::size_t batch = 0;  // global batch counter
  ClassPair mean{};
  ClassPair variance{};
  ClassPair omega{};
  ClassPair loss_weights{};
  double alpha = 1.0;
  std::array<std::uint64_t, 2> count{};
  bool frozen = false;
};

struct TrainedModel {
  Network network;
  std::vector<EpochRecord> history;
  std::vector<VblLogRow> vbl_log;
};

/// Mini-batch SGD with momentum (v <- mu v + g; p <- p - lr v). With
/// LossKind::Vbl each batch first feeds its logits to the VBL state (until
/// it freezes) and then uses the converted weights for the loss. A fresh
/// state with gamma = batch_size / N is created unless one is supplied.
/// Throws NumericalError on a non-finite loss or parameter.
TrainedModel train(Network network, const ImageSet& train_set, const ImageSet* eval_set,
                   const TrainConfig& config, std::optional<VblState> vbl = std::nullopt);

/// POSITIVE only when its logit is strictly larger.
Label decide(const ClassPair& logits);

struct Prediction {
  std::vector<Label> labels;
  std::vector<ClassPair> probabilities;
};

Prediction predict(const Network& network, const ImageSet& set, std::size_t batch_size = 64);

Metrics evaluate(const Network& network, const ImageSet& set, ConfusionMatrix* cm_out = nullptr);

/// "epoch,loss,acc,precision,recall,f1,omega_P,omega_N,alpha"
std::string history_csv(std::span<const EpochRecord> history);
std::string vbl_log_csv(std::span<const VblLogRow> log);

/// Binary container: "GTDA1", input size, block count, channel widths and
/// seed (uint32/uint64 little-endian), parameter count, then the parameters
/// as little-endian IEEE-754 doubles.
std::string encode_checkpoint(const Network& network);
Network decode_checkpoint(std::string_view bytes);
void save_checkpoint(const Network& network, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace gtda
