#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gtda/classifier.hpp"
#include "gtda/crd.hpp"
#include "gtda/data.hpp"
#include "gtda/s2i.hpp"

namespace gtda {

enum class DataSource : std::uint8_t { Synth, Ucr, Csv };

std::string_view to_string(DataSource source);
DataSource parse_data_source(std::string_view text);

struct DataConfig {
  DataSource source = DataSource::Synth;
  /// UCR or CSV files. The test file is optional for train-only stages.
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::optional<long> positive_label;
  std::string label_column = "label";
  std::optional<std::string> id_column;
  SynthParams synth_train{};
  SynthParams synth_test{180, 20, 256, 3.0, 0.1, 8};
};

struct CrdConfig {
  bool enabled = true;
  CrdSettings settings{};
};

struct ExperimentConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  /// Also run the 20 S2I settings (with CRD and VBL on) for every seed.
  bool s2i_grid = false;
};

/// Everything a CLI run needs. Method defaults:
/// m = 1, k = 6, lr = 0.0002, 50 epochs, S2I = (1.5, line, non-normal).
struct RunConfig {
  DataConfig data;
  S2IParams s2i{1.5, CurveType::Line, Normalization::NonNormal, 64, 64, 2, std::nullopt};
  CrdConfig crd;
  ModelConfig model;
  /// `[loss] kind` sets train.loss.
  TrainConfig train{0.0002, 50, 16, 0.9, LossKind::Vbl, 0, true};
  /// Drives every stochastic stage of a single run: CRD clustering and
  /// replicas, weight init (model.seed) and shuffling (train.shuffle_seed).
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";
  ExperimentConfig experiment;

  /// Cross-field checks; with `check_paths` also that input files exist.
  void validate(bool check_paths = true) const;
};

/// Applies `key = value` lines with `[section]` headers and `#` comments on
/// top of `config`. Later keys override earlier ones. `origin` names the
/// source in error messages.
void apply_ini(RunConfig& config, std::string_view text, std::string_view origin = "config");

/// Applies one `section.key=value` override.
void apply_override(RunConfig& config, std::string_view assignment);

RunConfig load_config(const std::filesystem::path& path);

/// Every key with its resolved value, in a fixed order. Feeding the result
/// back through apply_ini reproduces `config`.
std::string to_ini(const RunConfig& config);

}  // namespace gtda
