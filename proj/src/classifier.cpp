#include "gtda/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gtda/error.hpp"
#include "gtda/kernels.hpp"
#include "gtda/rng.hpp"

namespace gtda {

void ModelConfig::validate() const {
  if (channels.empty()) throw ConfigError("model: at least one block is required");
  for (int c : channels) {
    if (c < 1) throw ConfigError("model: channel widths must be >= 1");
  }
  if (input_size < 2) throw ConfigError("model: input size must be >= 2");
  const int div = 1 << channels.size();
  if (input_size % div != 0) {
    throw ConfigError("model: input size " + std::to_string(input_size) + " is not divisible by 2^" +
                      std::to_string(channels.size()));
  }
}

std::size_t ModelConfig::parameter_count() const {
  std::size_t count = 0;
  std::size_t in = 1;
  for (int c : channels) {
    const auto out = static_cast<std::size_t>(c);
    count += out * in * 9 + out;
    in = out;
  }
  return count + 2 * in + 2;
}

Tensor to_tensor(std::span<const RasterImage* const> images) {
  if (images.empty()) return {};
  const auto h = static_cast<std::size_t>(images.front()->height);
  const auto w = static_cast<std::size_t>(images.front()->width);
  Tensor t(images.size(), 1, h, w);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const RasterImage& img = *images[i];
    if (static_cast<std::size_t>(img.height) != h || static_cast<std::size_t>(img.width) != w) {
      throw DataError("to_tensor: images in a batch differ in size");
    }
    double* dst = t.data.data() + i * h * w;
    for (std::size_t p = 0; p < h * w; ++p) dst[p] = img.pixels[p] / 255.0;
  }
  return t;
}

Network::Network(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  std::size_t offset = 0;
  std::size_t in = 1;
  std::size_t size = static_cast<std::size_t>(config_.input_size);
  for (int c : config_.channels) {
    const auto out = static_cast<std::size_t>(c);
    BlockLayout b{in, out, size, offset, offset + out * in * 9};
    offset = b.bias_offset + out;
    blocks_.push_back(b);
    in = out;
    size /= 2;
  }
  dense_weight_offset_ = offset;
  dense_bias_offset_ = offset + 2 * in;
  params_.assign(dense_bias_offset_ + 2, 0.0);
}

Network Network::init(const ModelConfig& config) {
  Network net(config);
  Rng rng(config.seed, Stream::WeightInit);
  for (const auto& b : net.blocks_) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(b.in * 9));
    for (std::size_t i = 0; i < b.out * b.in * 9; ++i) net.params_[b.weight_offset + i] = stddev * rng.normal();
  }
  const std::size_t features = net.blocks_.back().out;
  const double stddev = std::sqrt(2.0 / static_cast<double>(features));
  for (std::size_t i = 0; i < 2 * features; ++i) net.params_[net.dense_weight_offset_ + i] = stddev * rng.normal();
  return net;
}

std::span<double> Network::mutable_parameters() {
  ++version_;
  return params_;
}

std::span<double> Network::conv_weight(std::size_t block) {
  ++version_;
  const auto& b = blocks_.at(block);
  return {params_.data() + b.weight_offset, b.out * b.in * 9};
}

std::span<double> Network::conv_bias(std::size_t block) {
  ++version_;
  const auto& b = blocks_.at(block);
  return {params_.data() + b.bias_offset, b.out};
}

std::span<double> Network::dense_weight() {
  ++version_;
  return {params_.data() + dense_weight_offset_, dense_bias_offset_ - dense_weight_offset_};
}

std::span<double> Network::dense_bias() {
  ++version_;
  return {params_.data() + dense_bias_offset_, 2};
}

void Network::apply_update(std::span<const double> delta) {
  if (delta.size() != params_.size()) throw ConfigError("apply_update: size mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i] += delta[i];
  ++version_;
}

std::vector<ClassPair> Network::forward(const Tensor& input, ForwardCache* cache) const {
  const auto size = static_cast<std::size_t>(config_.input_size);
  if (input.c != 1 || input.h != size || input.w != size) {
    throw DataError("forward: expected " + std::to_string(size) + "x" + std::to_string(size) +
                    " single-channel input, got " + std::to_string(input.c) + "x" + std::to_string(input.h) +
                    "x" + std::to_string(input.w));
  }
  const std::size_t n = input.n;
  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  const std::size_t nb = blocks_.size();
  fc.valid = false;
  fc.batch = n;
  fc.version = version_;
  fc.block_input.resize(nb);
  fc.preactivation.resize(nb);
  fc.pool_argmax.resize(nb);
  fc.block_input[0] = input;

  for (std::size_t bi = 0; bi < nb; ++bi) {
    const auto& b = blocks_[bi];
    const kernels::ConvShape shape{n, b.in, b.out, b.size, b.size};
    Tensor& pre = fc.preactivation[bi];
    pre.reshape(n, b.out, b.size, b.size);
    kernels::conv3x3_forward(fc.block_input[bi].data, {params_.data() + b.weight_offset, shape.weight_size()},
                             {params_.data() + b.bias_offset, b.out}, pre.data, shape);
    // ReLU commutes with the max, so pool first and rectify the smaller
    // tensor. Where a window's maximum is <= 0 the argmax may differ from
    // pooling after ReLU, but its gradient is masked to zero either way.
    Tensor& out = bi + 1 < nb ? fc.block_input[bi + 1] : fc.pooled;
    out.reshape(n, b.out, b.size / 2, b.size / 2);
    fc.pool_argmax[bi].resize(out.size());
    kernels::maxpool2x2_forward(pre.data, out.data, fc.pool_argmax[bi], n * b.out, b.size, b.size);
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  }

  const Tensor& x = fc.pooled;
  const std::size_t C = x.c, plane = x.h * x.w;
  fc.features.resize(n * C);
  for (std::size_t i = 0; i < n * C; ++i) {
    const double* p = x.data.data() + i * plane;
    double s = 0.0;
    for (std::size_t j = 0; j < plane; ++j) s += p[j];
    fc.features[i] = s / static_cast<double>(plane);
  }

  const double* wd = params_.data() + dense_weight_offset_;
  const double* bd = params_.data() + dense_bias_offset_;
  std::vector<ClassPair> logits(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      double z = bd[k];
      for (std::size_t c = 0; c < C; ++c) z += wd[k * C + c] * fc.features[i * C + c];
      logits[i][k] = z;
    }
  }
  fc.valid = true;
  return logits;
}

std::vector<double> Network::backward(const ForwardCache& fc, std::span<const ClassPair> dz) const {
  if (!fc.valid || fc.version != version_) {
    throw ConfigError("backward: forward cache is stale (parameters changed since the forward pass)");
  }
  if (dz.size() != fc.batch) {
    throw ConfigError("backward: " + std::to_string(dz.size()) + " logit gradients for a batch of " +
                      std::to_string(fc.batch));
  }
  const std::size_t n = fc.batch;
  std::vector<double> grad(params_.size(), 0.0);

  const std::size_t C = fc.pooled.c, plane = fc.pooled.h * fc.pooled.w;
  const double* wd = params_.data() + dense_weight_offset_;
  double* gwd = grad.data() + dense_weight_offset_;
  double* gbd = grad.data() + dense_bias_offset_;
  for (std::size_t k = 0; k < 2; ++k) {
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) gb += dz[i][k];
    gbd[k] = gb;
    for (std::size_t c = 0; c < C; ++c) {
      double g = 0.0;
      for (std::size_t i = 0; i < n; ++i) g += dz[i][k] * fc.features[i * C + c];
      gwd[k * C + c] = g;
    }
  }

  Tensor& gx = fc.grad_out;
  gx.reshape(n, C, fc.pooled.h, fc.pooled.w);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < C; ++c) {
      const double g = (dz[i][0] * wd[c] + dz[i][1] * wd[C + c]) / static_cast<double>(plane);
      std::fill_n(gx.data.data() + (i * C + c) * plane, plane, g);
    }
  }

  Tensor& gpre = fc.grad_pre;
  for (std::size_t bi = blocks_.size(); bi-- > 0;) {
    const auto& b = blocks_[bi];
    const kernels::ConvShape shape{n, b.in, b.out, b.size, b.size};
    gpre.reshape(n, b.out, b.size, b.size);
    kernels::maxpool2x2_backward(gx.data, fc.pool_argmax[bi], gpre.data, n * b.out, b.size, b.size);
    const auto& pre = fc.preactivation[bi].data;
    for (std::size_t i = 0; i < gpre.size(); ++i) {
      if (!(pre[i] > 0.0)) gpre.data[i] = 0.0;
    }
    kernels::conv3x3_backward_params(fc.block_input[bi].data, gpre.data,
                                     {grad.data() + b.weight_offset, shape.weight_size()},
                                     {grad.data() + b.bias_offset, b.out}, shape);
    if (bi > 0) {
      Tensor& gin = fc.grad_in;
      gin.reshape(n, b.in, b.size, b.size);
      kernels::conv3x3_backward_data(gpre.data, {params_.data() + b.weight_offset, shape.weight_size()},
                                     gin.data, shape);
      std::swap(gx, gin);
    }
  }
  return grad;
}

std::string_view to_string(LossKind loss) { return loss == LossKind::Vbl ? "vbl" : "ce"; }

LossKind parse_loss_kind(std::string_view text) {
  if (text == "ce" || text == "CE") return LossKind::CrossEntropy;
  if (text == "vbl" || text == "VBL") return LossKind::Vbl;
  throw ConfigError("unknown loss '" + std::string(text) + "' (expected ce|vbl)");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train: lr must be >= 0");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train: momentum must be in [0, 1)");
}

void ImageSet::add(std::string id, Label label, std::shared_ptr<const RasterImage> image) {
  ids.push_back(std::move(id));
  labels.push_back(label);
  images.push_back(std::move(image));
}

Label decide(const ClassPair& logits) {
  return logits[kPositive] > logits[kNegative] ? Label::Positive : Label::Negative;
}

namespace {

void gather(const ImageSet& set, std::span<const std::size_t> idx, Tensor& out) {
  const RasterImage& first = *set.images[idx.front()];
  const auto h = static_cast<std::size_t>(first.height), w = static_cast<std::size_t>(first.width);
  out.reshape(idx.size(), 1, h, w);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const RasterImage& img = *set.images[idx[i]];
    if (static_cast<std::size_t>(img.height) != h || static_cast<std::size_t>(img.width) != w) {
      throw DataError("images in a batch differ in size");
    }
    double* dst = out.data.data() + i * h * w;
    for (std::size_t p = 0; p < h * w; ++p) dst[p] = img.pixels[p] / 255.0;
  }
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

Prediction predict(const Network& network, const ImageSet& set, std::size_t batch_size) {
  Prediction out;
  out.labels.reserve(set.size());
  out.probabilities.reserve(set.size());
  std::vector<std::size_t> idx;
  ForwardCache cache;
  Tensor input;
  for (std::size_t start = 0; start < set.size(); start += batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(set.size(), start + batch_size); ++i) idx.push_back(i);
    gather(set, idx, input);
    for (const auto& z : network.forward(input, &cache)) {
      out.labels.push_back(decide(z));
      out.probabilities.push_back(softmax(z));
    }
  }
  return out;
}

Metrics evaluate(const Network& network, const ImageSet& set, ConfusionMatrix* cm_out) {
  const auto pred = predict(network, set);
  const auto cm = confusion(pred.labels, set.labels);
  if (cm_out) *cm_out = cm;
  return metrics(cm);
}

TrainedModel train(Network network, const ImageSet& train_set, const ImageSet* eval_set,
                   const TrainConfig& config, std::optional<VblState> vbl) {
  config.validate();
  if (train_set.size() == 0) throw DataError("train: empty training set");
  if (config.loss == LossKind::Vbl && !vbl) vbl = VblState::for_training(config.batch_size, train_set.size());

  TrainedModel result{std::move(network), {}, {}};
  Network& net = result.network;
  std::vector<double> velocity(net.parameter_count(), 0.0);
  std::vector<double> delta(net.parameter_count(), 0.0);
  std::vector<std::size_t> order(train_set.size());
  std::size_t global_batch = 0;
  ForwardCache cache;
  Tensor input;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(config.shuffle_seed, Stream::Shuffle, static_cast<std::uint64_t>(epoch));
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      std::vector<Label> labels;
      labels.reserve(idx.size());
      for (std::size_t i : idx) labels.push_back(train_set.labels[i]);

      gather(train_set, idx, input);
      const auto logits = net.forward(input, &cache);

      ClassPair weights{1.0, 1.0};
      if (config.loss == LossKind::Vbl) {
        if (!vbl->frozen()) {
          vbl->update_stats(logits, labels);
          vbl->update_weights();
        }
        weights = vbl->loss_weights();
        result.vbl_log.push_back({epoch, global_batch, vbl->mean(), vbl->variance(), vbl->omega(), weights,
                                  vbl->alpha(), vbl->count(), vbl->frozen()});
      }

      const auto batch = vbl_batch(logits, labels, weights);
      if (!std::isfinite(batch.loss)) {
        double zmin = std::numeric_limits<double>::infinity(), zmax = -zmin;
        for (const auto& z : logits) {
          zmin = std::min({zmin, z[0], z[1]});
          zmax = std::max({zmax, z[0], z[1]});
        }
        std::ostringstream os;
        os << "train: non-finite loss at epoch " << epoch << ", batch " << batches << " (loss weights "
           << weights[0] << ", " << weights[1] << "; logits in [" << zmin << ", " << zmax << "])";
        throw NumericalError(os.str());
      }

      const auto grad = net.backward(cache, batch.grad);
      for (std::size_t i = 0; i < grad.size(); ++i) {
        velocity[i] = config.momentum * velocity[i] + grad[i];
        delta[i] = -config.learning_rate * velocity[i];
      }
      net.apply_update(delta);
      if (!all_finite(net.parameters())) {
        throw NumericalError("train: non-finite parameter after epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batches));
      }
      loss_sum += batch.loss;
      ++batches;
      ++global_batch;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(batches);
    if (vbl) {
      rec.omega = vbl->omega();
      rec.alpha = vbl->alpha();
    }
    if (eval_set && eval_set->size() > 0 && (config.eval_each_epoch || epoch == config.epochs)) {
      rec.has_eval = true;
      rec.eval = evaluate(net, *eval_set);
    }
    result.history.push_back(rec);
  }
  return result;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string history_csv(std::span<const EpochRecord> history) {
  std::ostringstream os;
  os << "epoch,loss,acc,precision,recall,f1,omega_P,omega_N,alpha\n";
  for (const auto& r : history) {
    os << r.epoch << ',' << fmt(r.loss) << ',';
    if (r.has_eval) {
      os << fmt(r.eval.accuracy) << ',' << fmt(r.eval.precision) << ',' << fmt(r.eval.recall) << ','
         << fmt(r.eval.f1);
    } else {
      os << ",,,";
    }
    os << ',' << fmt(r.omega[kPositive]) << ',' << fmt(r.omega[kNegative]) << ',' << fmt(r.alpha) << '\n';
  }
  return os.str();
}

std::string vbl_log_csv(std::span<const VblLogRow> log) {
  std::ostringstream os;
  os << "epoch,batch,A_P,A_N,V_P,V_N,omega_P,omega_N,weight_P,weight_N,alpha,n_P,n_N,frozen\n";
  for (const auto& r : log) {
    os << r.epoch << ',' << r.batch << ',' << fmt(r.mean[0]) << ',' << fmt(r.mean[1]) << ','
       << fmt(r.variance[0]) << ',' << fmt(r.variance[1]) << ',' << fmt(r.omega[0]) << ',' << fmt(r.omega[1])
       << ',' << fmt(r.loss_weights[0]) << ',' << fmt(r.loss_weights[1]) << ',' << fmt(r.alpha) << ','
       << r.count[0] << ',' << r.count[1] << ',' << (r.frozen ? 1 : 0) << '\n';
  }
  return os.str();
}

namespace {

constexpr std::string_view kMagic = "GTDA1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct Reader {
  std::string_view bytes;
  std::size_t pos = 0;

  std::uint64_t take(int width) {
    if (pos + static_cast<std::size_t>(width) > bytes.size()) throw DataError("checkpoint: truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + static_cast<std::size_t>(i)]))
           << (8 * i);
    }
    pos += static_cast<std::size_t>(width);
    return v;
  }
};

}  // namespace

std::string encode_checkpoint(const Network& network) {
  const auto& cfg = network.config();
  std::string out(kMagic);
  put_u32(out, static_cast<std::uint32_t>(cfg.input_size));
  put_u32(out, static_cast<std::uint32_t>(cfg.channels.size()));
  for (int c : cfg.channels) put_u32(out, static_cast<std::uint32_t>(c));
  put_u64(out, cfg.seed);
  put_u64(out, network.parameter_count());
  for (double p : network.parameters()) put_u64(out, std::bit_cast<std::uint64_t>(p));
  return out;
}

Network decode_checkpoint(std::string_view bytes) {
  if (!bytes.starts_with(kMagic)) throw DataError("checkpoint: bad magic (expected GTDA1)");
  Reader r{bytes, kMagic.size()};
  ModelConfig cfg;
  cfg.input_size = static_cast<int>(r.take(4));
  const auto blocks = r.take(4);
  if (blocks == 0 || blocks > 64) throw DataError("checkpoint: implausible block count");
  cfg.channels.clear();
  for (std::uint64_t i = 0; i < blocks; ++i) cfg.channels.push_back(static_cast<int>(r.take(4)));
  cfg.seed = r.take(8);
  Network net(cfg);
  const auto count = r.take(8);
  if (count != net.parameter_count()) throw DataError("checkpoint: parameter count does not match config");
  auto params = net.mutable_parameters();
  for (auto& p : params) p = std::bit_cast<double>(r.take(8));
  if (r.pos != bytes.size()) throw DataError("checkpoint: trailing bytes");
  return net;
}

void save_checkpoint(const Network& network, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  const auto bytes = encode_checkpoint(network);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing checkpoint '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace gtda
