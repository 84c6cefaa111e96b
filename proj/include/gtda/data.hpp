#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gtda {

/// Binary label. The numeric value doubles as the index into every
/// per-class pair in the library (logits, probabilities, VBL weights):
/// index 0 is the positive (minority, anomalous) class.
enum class Label : std::uint8_t { Positive = 0, Negative = 1 };

inline constexpr std::size_t kPositive = 0;
inline constexpr std::size_t kNegative = 1;

constexpr std::size_t class_index(Label label) { return static_cast<std::size_t>(label); }

enum class Split : std::uint8_t { Train, Test };

std::string_view to_string(Label label);
std::string_view to_string(Split split);
Label parse_label(std::string_view text);
Split parse_split(std::string_view text);

/// A univariate, finite, length >= 2 sequence with a stable identifier.
struct TimeSeries {
  std::string id;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  /// Throws DataError when the invariants (length >= 2, finite) do not hold.
  void validate() const;
};

struct Sample {
  TimeSeries series;
  Label label = Label::Negative;
  /// Id of the original sample when this one is an oversampled replica.
  std::string origin;

  const std::string& id() const { return series.id; }
  bool is_replica() const { return !origin.empty(); }
};

struct LabeledDataset {
  Split split = Split::Train;
  std::vector<Sample> samples;
  /// Raw label that was mapped to POSITIVE; empty for generated data.
  std::string positive_label;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::vector<Label> labels() const;
  /// Checks every series and that ids are unique.
  void validate() const;
};

struct ClassStats {
  std::size_t n_total = 0;
  std::size_t n_majority = 0;
  std::size_t n_minority = 0;
  /// n_majority / n_minority; infinity when there are no minority samples.
  double imbalance_ratio = 0.0;
  std::size_t length_min = 0;
  std::size_t length_max = 0;
  double length_mean = 0.0;
};

struct UcrOptions {
  /// Raw class label treated as POSITIVE; every other label is NEGATIVE.
  /// When unset the rarer of exactly two labels is POSITIVE (ties go to the
  /// numerically larger label).
  std::optional<long> positive_label;
  /// When unset the split is inferred from a `_TRAIN` / `_TEST` file stem.
  std::optional<Split> split;
};

/// Reads a UCR-archive text file: one sample per line, integer class label
/// first, fields separated by tabs or runs of spaces. Trailing NaN fields
/// (the archive's padding for variable-length series) are dropped.
LabeledDataset load_ucr_tsv(const std::filesystem::path& path, const UcrOptions& options = {});

/// RFC-4180 records: quoted fields, doubled quotes, CRLF or LF line ends.
/// `where` prefixes error messages.
std::vector<std::vector<std::string>> parse_csv(const std::string& text, const std::string& where);

struct CsvOptions {
  std::string label_column = "label";
  std::optional<std::string> id_column;
  /// Raw label value treated as POSITIVE; defaults to the rarer value.
  std::optional<std::string> positive_label;
  Split split = Split::Train;
};

/// Reads an RFC-4180 CSV with a header row. Every column other than the
/// label and id columns contributes one series value, in header order.
LabeledDataset load_csv(const std::filesystem::path& path, const CsvOptions& options);

struct SynthParams {
  std::size_t n_majority = 360;
  std::size_t n_minority = 40;
  std::size_t length = 256;
  double anomaly_magnitude = 3.0;
  double noise_sigma = 0.1;
  std::uint64_t seed = 7;
};

/// Sinusoid-mixture series with Gaussian noise; minority samples carry an
/// injected level shift or spike train covering 5-20% of the length.
/// Majority samples come first, then minority samples.
LabeledDataset synth_generate(const SynthParams& params, Split split = Split::Train);

ClassStats dataset_stats(const LabeledDataset& dataset);

/// Linear interpolation onto `target_len` equally spaced positions over
/// [0, size-1]. Endpoints are preserved exactly.
std::vector<double> resample_length(std::span<const double> values, std::size_t target_len);
TimeSeries resample_length(const TimeSeries& series, std::size_t target_len);

}  // namespace gtda
