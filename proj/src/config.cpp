#include "gtda/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "gtda/error.hpp"

namespace gtda {

std::string_view to_string(DataSource source) {
  switch (source) {
    case DataSource::Synth: return "synth";
    case DataSource::Ucr: return "ucr";
    case DataSource::Csv: return "csv";
  }
  return "synth";
}

DataSource parse_data_source(std::string_view text) {
  if (text == "synth") return DataSource::Synth;
  if (text == "ucr") return DataSource::Ucr;
  if (text == "csv") return DataSource::Csv;
  throw ConfigError("unknown data source '" + std::string(text) + "' (expected synth|ucr|csv)");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

template <class Int>
Int to_int(std::string_view key, std::string_view v) {
  Int out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(std::string(key) + ": expected true|false, got '" + std::string(v) + "'");
}

template <class Int>
std::vector<Int> to_list(std::string_view key, std::string_view v) {
  std::vector<Int> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(to_int<Int>(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError(std::string(key) + ": expected a comma-separated list");
  return out;
}

template <class Int>
std::string join(const std::vector<Int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

struct Field {
  const char* section;
  const char* key;
  std::function<void(RunConfig&, std::string_view name, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define GTDA_DOUBLE(sec, k, member)                                                           \
  Field {                                                                                     \
    sec, k, [](RunConfig& c, std::string_view n, std::string_view v) { member = to_double(n, v); }, \
        [](const RunConfig& c) { return fmt_double(member); }                                  \
  }
#define GTDA_INT(sec, k, member)                                                                       \
  Field {                                                                                              \
    sec, k,                                                                                            \
        [](RunConfig& c, std::string_view n, std::string_view v) {                                     \
          member = to_int<std::remove_cvref_t<decltype(member)>>(n, v);                                \
        },                                                                                             \
        [](const RunConfig& c) { return std::to_string(member); }                                      \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"data", "source", [](RunConfig& c, auto, auto v) { c.data.source = parse_data_source(v); },
       [](const RunConfig& c) { return std::string(to_string(c.data.source)); }},
      {"data", "train_path", [](RunConfig& c, auto, auto v) { c.data.train_path = std::string(v); },
       [](const RunConfig& c) { return c.data.train_path.string(); }},
      {"data", "test_path", [](RunConfig& c, auto, auto v) { c.data.test_path = std::string(v); },
       [](const RunConfig& c) { return c.data.test_path.string(); }},
      {"data", "positive_label",
       [](RunConfig& c, auto n, auto v) {
         if (v.empty() || v == "auto") {
           c.data.positive_label.reset();
         } else {
           c.data.positive_label = to_int<long>(n, v);
         }
       },
       [](const RunConfig& c) {
         return c.data.positive_label ? std::to_string(*c.data.positive_label) : std::string("auto");
       }},
      {"data", "label_column", [](RunConfig& c, auto, auto v) { c.data.label_column = std::string(v); },
       [](const RunConfig& c) { return c.data.label_column; }},
      {"data", "id_column",
       [](RunConfig& c, auto, auto v) {
         if (v.empty()) {
           c.data.id_column.reset();
         } else {
           c.data.id_column = std::string(v);
         }
       },
       [](const RunConfig& c) { return c.data.id_column.value_or(""); }},
      GTDA_INT("data", "train_majority", c.data.synth_train.n_majority),
      GTDA_INT("data", "train_minority", c.data.synth_train.n_minority),
      GTDA_INT("data", "test_majority", c.data.synth_test.n_majority),
      GTDA_INT("data", "test_minority", c.data.synth_test.n_minority),
      {"data", "length",
       [](RunConfig& c, auto n, auto v) {
         c.data.synth_train.length = c.data.synth_test.length = to_int<std::size_t>(n, v);
       },
       [](const RunConfig& c) { return std::to_string(c.data.synth_train.length); }},
      {"data", "anomaly_magnitude",
       [](RunConfig& c, auto n, auto v) {
         c.data.synth_train.anomaly_magnitude = c.data.synth_test.anomaly_magnitude = to_double(n, v);
       },
       [](const RunConfig& c) { return fmt_double(c.data.synth_train.anomaly_magnitude); }},
      {"data", "noise_sigma",
       [](RunConfig& c, auto n, auto v) {
         c.data.synth_train.noise_sigma = c.data.synth_test.noise_sigma = to_double(n, v);
       },
       [](const RunConfig& c) { return fmt_double(c.data.synth_train.noise_sigma); }},
      GTDA_INT("data", "train_seed", c.data.synth_train.seed),
      GTDA_INT("data", "test_seed", c.data.synth_test.seed),

      GTDA_DOUBLE("s2i", "scale", c.s2i.scale),
      {"s2i", "curve", [](RunConfig& c, auto, auto v) { c.s2i.curve = parse_curve_type(v); },
       [](const RunConfig& c) { return std::string(to_string(c.s2i.curve)); }},
      {"s2i", "normalization", [](RunConfig& c, auto, auto v) { c.s2i.normalize = parse_normalization(v); },
       [](const RunConfig& c) { return std::string(to_string(c.s2i.normalize)); }},
      GTDA_INT("s2i", "width", c.s2i.width),
      GTDA_INT("s2i", "height", c.s2i.height),
      GTDA_INT("s2i", "margin", c.s2i.margin),

      {"crd", "enabled", [](RunConfig& c, auto n, auto v) { c.crd.enabled = to_bool(n, v); },
       [](const RunConfig& c) { return std::string(c.crd.enabled ? "true" : "false"); }},
      {"crd", "mode", [](RunConfig& c, auto, auto v) { c.crd.settings.mode = parse_crd_mode(v); },
       [](const RunConfig& c) { return std::string(to_string(c.crd.settings.mode)); }},
      GTDA_DOUBLE("crd", "m", c.crd.settings.m),
      GTDA_INT("crd", "k", c.crd.settings.k),
      GTDA_INT("crd", "feature_length", c.crd.settings.feature_length),

      {"loss", "kind", [](RunConfig& c, auto, auto v) { c.train.loss = parse_loss_kind(v); },
       [](const RunConfig& c) { return std::string(to_string(c.train.loss)); }},

      GTDA_INT("model", "input_size", c.model.input_size),
      {"model", "channels", [](RunConfig& c, auto n, auto v) { c.model.channels = to_list<int>(n, v); },
       [](const RunConfig& c) { return join(c.model.channels); }},

      GTDA_DOUBLE("train", "lr", c.train.learning_rate),
      GTDA_INT("train", "epochs", c.train.epochs),
      GTDA_INT("train", "batch_size", c.train.batch_size),
      GTDA_DOUBLE("train", "momentum", c.train.momentum),
      {"train", "eval_each_epoch", [](RunConfig& c, auto n, auto v) { c.train.eval_each_epoch = to_bool(n, v); },
       [](const RunConfig& c) { return std::string(c.train.eval_each_epoch ? "true" : "false"); }},

      GTDA_INT("run", "seed", c.seed),
      {"run", "out", [](RunConfig& c, auto, auto v) { c.out_dir = std::string(v); },
       [](const RunConfig& c) { return c.out_dir.string(); }},

      {"experiment", "seeds",
       [](RunConfig& c, auto n, auto v) { c.experiment.seeds = to_list<std::uint64_t>(n, v); },
       [](const RunConfig& c) { return join(c.experiment.seeds); }},
      {"experiment", "s2i_grid", [](RunConfig& c, auto n, auto v) { c.experiment.s2i_grid = to_bool(n, v); },
       [](const RunConfig& c) { return std::string(c.experiment.s2i_grid ? "true" : "false"); }},
  };
  return table;
}

#undef GTDA_DOUBLE
#undef GTDA_INT

void set_field(RunConfig& config, std::string_view section, std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (section == f.section && key == f.key) {
      f.set(config, std::string(section) + "." + std::string(key), value);
      return;
    }
  }
  throw ConfigError("unknown key '" + std::string(section) + "." + std::string(key) + "'");
}

}  // namespace

void apply_ini(RunConfig& config, std::string_view text, std::string_view origin) {
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = [&] { return std::string(origin) + ":" + std::to_string(line_no) + ": "; };
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where() + "expected 'key = value'");
    if (section.empty()) throw ConfigError(where() + "key outside of a [section]");
    try {
      set_field(config, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where() + e.what());
    }
  }
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto key = trim(assignment.substr(0, eq));
  const auto dot = key.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "': expected section.key=value");
  }
  set_field(config, key.substr(0, dot), key.substr(dot + 1), trim(assignment.substr(eq + 1)));
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig config;
  apply_ini(config, ss.str(), path.string());
  return config;
}

std::string to_ini(const RunConfig& config) {
  std::string out;
  std::string_view section;
  for (const auto& f : fields()) {
    if (section != f.section) {
      if (!section.empty()) out += '\n';
      section = f.section;
      out += "[" + std::string(section) + "]\n";
    }
    out += std::string(f.key) + " = " + f.get(config) + "\n";
  }
  return out;
}

void RunConfig::validate(bool check_paths) const {
  s2i.validate();
  model.validate();
  train.validate();
  if (s2i.width != model.input_size || s2i.height != model.input_size) {
    throw ConfigError("s2i image size " + std::to_string(s2i.width) + "x" + std::to_string(s2i.height) +
                      " does not match model.input_size " + std::to_string(model.input_size));
  }
  if (crd.enabled) {
    if (!(crd.settings.m > 0.0)) throw ConfigError("crd.m must be > 0");
    if (crd.settings.k < 1) throw ConfigError("crd.k must be >= 1");
    if (crd.settings.mode == CrdMode::Weighted && crd.settings.k < 2) {
      throw ConfigError("crd.k must be >= 2 in weighted mode");
    }
    if (crd.settings.feature_length < 2) throw ConfigError("crd.feature_length must be >= 2");
  }
  if (experiment.seeds.empty()) throw ConfigError("experiment.seeds must not be empty");
  if (data.source == DataSource::Synth) {
    for (const auto* p : {&data.synth_train, &data.synth_test}) {
      if (p->n_majority < 1 || p->n_minority < 1) throw ConfigError("data: synthetic class counts must be >= 1");
      if (p->length < 16) throw ConfigError("data.length must be >= 16");
      if (!(p->anomaly_magnitude >= 0.0) || !(p->noise_sigma >= 0.0)) {
        throw ConfigError("data: anomaly_magnitude and noise_sigma must be >= 0");
      }
    }
  } else {
    if (data.train_path.empty()) throw ConfigError("data.train_path is required for source " +
                                                   std::string(to_string(data.source)));
    if (check_paths) {
      for (const auto* p : {&data.train_path, &data.test_path}) {
        if (!p->empty() && !std::filesystem::exists(*p)) {
          throw ConfigError("data path '" + p->string() + "' does not exist");
        }
      }
    }
  }
}

}  // namespace gtda
