#include "gtda/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_set>

#include "gtda/error.hpp"
#include "gtda/rng.hpp"

namespace gtda {

std::string_view to_string(Label label) {
  return label == Label::Positive ? "POSITIVE" : "NEGATIVE";
}

std::string_view to_string(Split split) { return split == Split::Train ? "train" : "test"; }

Label parse_label(std::string_view text) {
  if (text == "POSITIVE" || text == "positive" || text == "1") return Label::Positive;
  if (text == "NEGATIVE" || text == "negative" || text == "0") return Label::Negative;
  throw DataError("unrecognised label '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
  if (text == "train" || text == "TRAIN") return Split::Train;
  if (text == "test" || text == "TEST") return Split::Test;
  throw DataError("unrecognised split '" + std::string(text) + "'");
}

void TimeSeries::validate() const {
  if (values.size() < 2) {
    throw DataError("series '" + id + "' has length " + std::to_string(values.size()) +
                    " (need at least 2)");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DataError("series '" + id + "' has a non-finite value at index " + std::to_string(i));
    }
  }
}

std::vector<Label> LabeledDataset::labels() const {
  std::vector<Label> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

void LabeledDataset::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& s : samples) {
    s.series.validate();
    if (!seen.insert(s.id()).second) throw DataError("duplicate sample id '" + s.id() + "'");
  }
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

std::string padded_index(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu", i);
  return buf;
}

// Chooses which raw label is POSITIVE: the explicit one when given, otherwise
// the rarer of exactly two values (ties resolve to the larger key).
template <class Key>
Key choose_positive(const std::map<Key, std::size_t>& counts, const std::optional<Key>& explicit_label,
                    const std::string& where) {
  if (explicit_label) {
    if (!counts.contains(*explicit_label)) {
      throw DataError(where + ": positive class has zero samples after label mapping");
    }
    return *explicit_label;
  }
  if (counts.size() != 2) {
    throw DataError(where + ": expected exactly 2 distinct labels to infer the positive class, found " +
                    std::to_string(counts.size()));
  }
  auto first = counts.begin();
  auto second = std::next(first);
  return first->second < second->second ? first->first : second->first;
}

}  // namespace

LabeledDataset load_ucr_tsv(const std::filesystem::path& path, const UcrOptions& options) {
  const std::string text = read_file(path);
  const std::string where = path.string();

  struct Row {
    long label;
    std::vector<double> values;
    std::size_t line;
  };
  std::vector<Row> rows;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    auto fields = split_fields(line);
    if (fields.empty()) continue;

    auto fail = [&](std::size_t col, std::string_view tok, const char* what) {
      throw DataError(where + ": line " + std::to_string(line_no) + ", column " + std::to_string(col) +
                      ": " + what + " '" + std::string(tok) + "'");
    };

    Row row{0, {}, line_no};
    double label_value = 0.0;
    if (!parse_double(fields[0], label_value) || !std::isfinite(label_value) ||
        label_value != std::floor(label_value)) {
      fail(1, fields[0], "cannot parse class label");
    }
    row.label = static_cast<long>(label_value);
    row.values.reserve(fields.size() - 1);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      double v = 0.0;
      if (!parse_double(fields[c], v)) fail(c + 1, fields[c], "cannot parse value");
      if (std::isinf(v)) fail(c + 1, fields[c], "non-finite value");
      row.values.push_back(v);
    }
    while (!row.values.empty() && std::isnan(row.values.back())) row.values.pop_back();
    for (std::size_t c = 0; c < row.values.size(); ++c) {
      if (std::isnan(row.values[c])) fail(c + 2, fields[c + 1], "interior missing value");
    }
    if (row.values.size() < 2) {
      throw DataError(where + ": line " + std::to_string(line_no) + ": series shorter than 2 values");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(where + ": empty file");

  std::map<long, std::size_t> counts;
  for (const auto& r : rows) ++counts[r.label];
  const long positive = choose_positive(counts, options.positive_label, where);

  LabeledDataset ds;
  if (options.split) {
    ds.split = *options.split;
  } else {
    const std::string stem = path.stem().string();
    ds.split = stem.ends_with("_TEST") ? Split::Test : Split::Train;
  }
  ds.positive_label = std::to_string(positive);
  const std::string stem = path.stem().string();
  ds.samples.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Sample s;
    s.series.id = stem + "_" + padded_index(i);
    s.series.values = std::move(rows[i].values);
    s.label = rows[i].label == positive ? Label::Positive : Label::Negative;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text, const std::string& where) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    bool blank = record.size() == 1 && record[0].empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started || !field.empty()) {
          throw DataError(where + ": line " + std::to_string(line) + ": stray quote");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw DataError(where + ": unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

LabeledDataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  const std::string where = path.string();
  auto records = parse_csv(read_file(path), where);
  if (records.empty()) throw DataError(where + ": empty file");

  const auto& header = records.front();
  auto find_column = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };

  auto label_col = find_column(options.label_column);
  if (!label_col) throw DataError(where + ": missing label column '" + options.label_column + "'");
  std::optional<std::size_t> id_col;
  if (options.id_column) {
    id_col = find_column(*options.id_column);
    if (!id_col) throw DataError(where + ": missing id column '" + *options.id_column + "'");
  }
  std::vector<std::size_t> value_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i != *label_col && (!id_col || i != *id_col)) value_cols.push_back(i);
  }
  if (records.size() < 2) throw DataError(where + ": no data rows");

  std::map<std::string, std::size_t> counts;
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != header.size()) {
      throw DataError(where + ": row " + std::to_string(r + 1) + " has " +
                      std::to_string(records[r].size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    ++counts[trim(records[r][*label_col])];
  }
  if (counts.size() > 2) {
    throw DataError(where + ": label column '" + options.label_column + "' is not binary (" +
                    std::to_string(counts.size()) + " distinct values)");
  }
  const std::string positive = choose_positive(counts, options.positive_label, where);

  LabeledDataset ds;
  ds.split = options.split;
  ds.positive_label = positive;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    Sample s;
    s.series.id = id_col ? trim(rec[*id_col]) : "row_" + padded_index(r - 1);
    if (!seen.insert(s.series.id).second) {
      throw DataError(where + ": duplicate id '" + s.series.id + "' at row " + std::to_string(r + 1));
    }
    s.label = trim(rec[*label_col]) == positive ? Label::Positive : Label::Negative;
    s.series.values.reserve(value_cols.size());
    for (std::size_t c : value_cols) {
      std::string cell = trim(rec[c]);
      double v = 0.0;
      if (!parse_double(cell, v) || !std::isfinite(v)) {
        throw DataError(where + ": row " + std::to_string(r + 1) + ", column '" + trim(header[c]) +
                        "': non-numeric series cell '" + cell + "'");
      }
      s.series.values.push_back(v);
    }
    s.series.validate();
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

LabeledDataset synth_generate(const SynthParams& p, Split split) {
  if (p.n_majority < 1 || p.n_minority < 1) throw ConfigError("synth_generate: counts must be >= 1");
  if (p.length < 16) throw ConfigError("synth_generate: length must be >= 16");
  if (!(p.noise_sigma >= 0.0) || !std::isfinite(p.anomaly_magnitude)) {
    throw ConfigError("synth_generate: noise_sigma must be >= 0 and magnitude finite");
  }

  const std::size_t n = p.n_majority + p.n_minority;
  const double len = static_cast<double>(p.length);
  LabeledDataset ds;
  ds.split = split;
  ds.samples.resize(n);

  // One stream per sample index: sample i never depends on how many others
  // were requested.
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(p.seed, Stream::Generation, i);
    Sample& s = ds.samples[i];
    s.label = i < p.n_majority ? Label::Negative : Label::Positive;
    s.series.id = "syn_" + padded_index(i);
    s.series.values.assign(p.length, 0.0);

    for (int c = 0; c < 2; ++c) {
      const double amp = rng.uniform(0.5, 1.5);
      const double cycles = rng.uniform(1.0, 6.0);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::size_t t = 0; t < p.length; ++t) {
        s.series.values[t] +=
            amp * std::sin(2.0 * std::numbers::pi * cycles * static_cast<double>(t) / len + phase);
      }
    }
    for (auto& v : s.series.values) v += p.noise_sigma * rng.normal();

    if (s.label == Label::Positive) {
      std::size_t width = static_cast<std::size_t>(std::llround(len * rng.uniform(0.05, 0.20)));
      width = std::clamp<std::size_t>(width, 1, p.length);
      const std::size_t start = rng.below(p.length - width + 1);
      const bool level_shift = rng.below(2) == 0;
      const double sign = rng.below(2) == 0 ? 1.0 : -1.0;
      for (std::size_t t = start; t < start + width; ++t) {
        if (level_shift) {
          s.series.values[t] += sign * p.anomaly_magnitude;
        } else if ((t - start) % 4 == 0) {
          s.series.values[t] += sign * p.anomaly_magnitude;
        }
      }
    }
  }
  return ds;
}

ClassStats dataset_stats(const LabeledDataset& dataset) {
  if (dataset.empty()) throw DataError("dataset_stats: empty dataset");
  ClassStats st;
  st.n_total = dataset.size();
  st.length_min = dataset.samples.front().series.size();
  double length_sum = 0.0;
  for (const auto& s : dataset.samples) {
    (s.label == Label::Positive ? st.n_minority : st.n_majority) += 1;
    st.length_min = std::min(st.length_min, s.series.size());
    st.length_max = std::max(st.length_max, s.series.size());
    length_sum += static_cast<double>(s.series.size());
  }
  st.length_mean = length_sum / static_cast<double>(st.n_total);
  st.imbalance_ratio = st.n_minority > 0
                           ? static_cast<double>(st.n_majority) / static_cast<double>(st.n_minority)
                           : std::numeric_limits<double>::infinity();
  return st;
}

std::vector<double> resample_length(std::span<const double> values, std::size_t target_len) {
  if (target_len < 2) throw ConfigError("resample_length: target length must be >= 2");
  if (values.size() < 2) throw DataError("resample_length: series length must be >= 2");
  if (values.size() == target_len) return {values.begin(), values.end()};

  const std::size_t last = values.size() - 1;
  const double span = static_cast<double>(last);
  const double denom = static_cast<double>(target_len - 1);
  std::vector<double> out(target_len);
  for (std::size_t j = 0; j < target_len; ++j) {
    const double pos = static_cast<double>(j) * span / denom;
    std::size_t i = static_cast<std::size_t>(pos);
    if (i >= last) {
      out[j] = values[last];
      continue;
    }
    const double frac = pos - static_cast<double>(i);
    out[j] = frac == 0.0 ? values[i] : values[i] + frac * (values[i + 1] - values[i]);
  }
  out.front() = values.front();
  out.back() = values.back();
  return out;
}

TimeSeries resample_length(const TimeSeries& series, std::size_t target_len) {
  return {series.id, resample_length(std::span<const double>(series.values), target_len)};
}

}  // namespace gtda
