#include "gtda/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "gtda/crd.hpp"
#include "gtda/error.hpp"
#include "gtda/s2i.hpp"

namespace gtda {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write '" + path.string() + "'");
}

std::string csv_field(const std::string& s) {
  bool quote = s.find_first_of(",\"\n\r") != std::string::npos ||
               (!s.empty() && (s.front() == ' ' || s.back() == ' '));
  if (!quote) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

// The resolved keys of the given sections plus the run seed. An artifact
// directory is reused only while its stamp matches.
std::string stamp(const RunConfig& config, std::initializer_list<std::string_view> sections, bool with_seed) {
  std::istringstream in(to_ini(config));
  std::string line;
  std::string out;
  bool keep = false;
  while (std::getline(in, line)) {
    if (line.starts_with("[")) {
      const std::string name = line.substr(1, line.find(']') - 1);
      keep = false;
      for (auto s : sections) keep = keep || name == s;
    }
    if (keep && !line.empty()) out += line + '\n';
  }
  if (with_seed) out += "seed = " + std::to_string(config.seed) + '\n';
  return out;
}

bool fresh(const fs::path& artifact, const fs::path& stamp_file, const std::string& expected) {
  if (!fs::exists(artifact) || !fs::exists(stamp_file)) return false;
  return read_text(stamp_file) == expected;
}

std::string images_stamp(const RunConfig& c) { return stamp(c, {"data", "s2i"}, false); }
std::string resample_stamp(const RunConfig& c) { return stamp(c, {"data", "s2i", "crd"}, true); }
std::string train_stamp(const RunConfig& c) {
  return stamp(c, {"data", "s2i", "crd", "loss", "model", "train"}, true);
}

fs::path stamp_path(const fs::path& dir) { return dir / "stamp.ini"; }

void ensure_images(const RunConfig& config, std::ostream& log) {
  const OutputLayout out{config.out_dir};
  if (!fresh(out.image_manifest(), stamp_path(out.images()), images_stamp(config))) stage_rasterize(config, log);
}

void ensure_resample(const RunConfig& config, std::ostream& log) {
  const OutputLayout out{config.out_dir};
  ensure_images(config, log);
  if (!fresh(out.resample_manifest(), stamp_path(out.resample()), resample_stamp(config))) {
    stage_resample(config, log);
  }
}

void ensure_model(const RunConfig& config, std::ostream& log) {
  const OutputLayout out{config.out_dir};
  ensure_resample(config, log);
  if (!fresh(out.checkpoint(), stamp_path(out.train()), train_stamp(config))) stage_train(config, log);
}

ImageSet test_images(const OutputLayout& out) {
  return load_image_set(rows_for_split(read_manifest(out.image_manifest()), Split::Test), out.images());
}

}  // namespace

std::optional<LabeledDataset> load_split(const RunConfig& config, Split split) {
  const DataConfig& d = config.data;
  if (d.source == DataSource::Synth) {
    return synth_generate(split == Split::Train ? d.synth_train : d.synth_test, split);
  }
  const fs::path& path = split == Split::Train ? d.train_path : d.test_path;
  if (path.empty()) {
    if (split == Split::Train) throw ConfigError("data.train_path is not set");
    return std::nullopt;
  }

  // An inferred positive label comes from the training file, so both splits
  // agree even when the test file has a different class balance.
  std::optional<std::string> positive;
  if (d.positive_label) positive = std::to_string(*d.positive_label);
  if (!positive && split == Split::Test) positive = load_split(config, Split::Train)->positive_label;

  LabeledDataset ds;
  if (d.source == DataSource::Ucr) {
    UcrOptions opt;
    if (positive) opt.positive_label = std::stol(*positive);
    opt.split = split;
    ds = load_ucr_tsv(path, opt);
  } else {
    CsvOptions opt;
    opt.label_column = d.label_column;
    opt.id_column = d.id_column;
    opt.positive_label = positive;
    opt.split = split;
    ds = load_csv(path, opt);
  }
  ds.validate();
  return ds;
}

std::string file_stem(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '_' || c == '-';
    if (!ok) c = '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  const std::string where = path.string();
  auto records = parse_csv(read_text(path), where);
  if (records.empty()) throw DataError(where + ": empty manifest");
  const auto& header = records.front();
  const bool with_origin = header.size() == 4 && header[3] == "origin";
  if (header.size() < 3 || header[0] != "id" || header[1] != "label" || header[2] != "path" ||
      (header.size() == 4 && !with_origin) || header.size() > 4) {
    throw DataError(where + ": expected header id,label,path[,origin]");
  }
  std::vector<ManifestRow> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      throw DataError(where + ": row " + std::to_string(r + 1) + " has " + std::to_string(rec.size()) +
                      " fields, expected " + std::to_string(header.size()));
    }
    ManifestRow row;
    row.id = rec[0];
    try {
      row.label = parse_label(rec[1]);
    } catch (const DataError& e) {
      throw DataError(where + ": row " + std::to_string(r + 1) + ": " + e.what());
    }
    row.path = rec[2];
    if (with_origin) row.origin = rec[3];
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_manifest(const fs::path& path, const std::vector<ManifestRow>& rows, bool with_origin) {
  std::string text = with_origin ? "id,label,path,origin\n" : "id,label,path\n";
  for (const auto& r : rows) {
    text += csv_field(r.id) + ',' + std::string(to_string(r.label)) + ',' + csv_field(r.path);
    if (with_origin) text += ',' + csv_field(r.origin);
    text += '\n';
  }
  write_text(path, text);
}

std::vector<ManifestRow> rows_for_split(const std::vector<ManifestRow>& rows, Split split) {
  const std::string prefix = std::string(to_string(split)) + "/";
  std::vector<ManifestRow> out;
  for (const auto& r : rows) {
    if (r.path.starts_with(prefix)) out.push_back(r);
  }
  return out;
}

ImageSet load_image_set(const std::vector<ManifestRow>& rows, const fs::path& base) {
  std::map<std::string, std::shared_ptr<const RasterImage>> loaded;
  ImageSet set;
  for (const auto& r : rows) {
    auto& image = loaded[r.path];
    if (!image) image = std::make_shared<const RasterImage>(read_pgm(base / r.path));
    set.add(r.id, r.label, image);
  }
  return set;
}

void write_snapshot(const RunConfig& config) { write_text(OutputLayout{config.out_dir}.snapshot(), to_ini(config)); }

void stage_rasterize(const RunConfig& config, std::ostream& log) {
  config.validate();
  write_snapshot(config);
  const OutputLayout out{config.out_dir};
  std::vector<ManifestRow> rows;
  for (Split split : {Split::Train, Split::Test}) {
    auto ds = load_split(config, split);
    if (!ds) continue;
    const std::string dir(to_string(split));
    fs::create_directories(out.images() / dir);
    std::set<std::string> stems;
    for (const auto& s : ds->samples) {
      const std::string stem = file_stem(s.id());
      if (!stems.insert(stem).second) {
        throw DataError("ids in the " + dir + " split map to the same file name '" + stem + ".pgm'");
      }
      const std::string rel = dir + "/" + stem + ".pgm";
      write_pgm(rasterize(s.series, config.s2i), out.images() / rel);
      rows.push_back({s.id(), s.label, rel, {}});
    }
    const auto st = dataset_stats(*ds);
    log << "rasterize: " << dir << " " << st.n_total << " images (" << st.n_minority << " positive), "
        << config.s2i.tag() << " " << config.s2i.width << "x" << config.s2i.height << "\n";
  }
  write_manifest(out.image_manifest(), rows, false);
  write_text(stamp_path(out.images()), images_stamp(config));
}

void stage_resample(const RunConfig& config, std::ostream& log) {
  config.validate();
  write_snapshot(config);
  const OutputLayout out{config.out_dir};
  ensure_images(config, log);

  const auto images = read_manifest(out.image_manifest());
  std::map<std::string, std::string> image_of;
  for (const auto& r : rows_for_split(images, Split::Train)) image_of[r.id] = r.path;
  auto path_of = [&](const std::string& id) {
    auto it = image_of.find(id);
    if (it == image_of.end()) throw DataError("no rasterized image for training sample '" + id + "'");
    return it->second;
  };

  // Training rows are replaced by the resampled set; test rows pass through.
  const LabeledDataset train = *load_split(config, Split::Train);
  std::vector<ManifestRow> rows;
  if (config.crd.enabled) {
    const CrdResult result = crd_resample(train, config.crd.settings, config.seed);
    write_text(out.crd_plan(), format_plan(result.plan));
    for (const auto& w : result.plan.warnings) log << "resample: warning: " << w << "\n";
    for (const auto& s : result.resampled.samples) {
      rows.push_back({s.id(), s.label, path_of(s.is_replica() ? s.origin : s.id()), s.origin});
    }
    log << "resample: " << train.size() << " -> " << result.resampled.size() << " training samples, "
        << result.plan.total_minority() << " -> " << result.plan.total_target() << " positive, k = "
        << result.plan.k << "\n";
  } else {
    write_text(out.crd_plan(), "# CRD disabled: training set passed through unchanged\n");
    for (const auto& r : rows_for_split(images, Split::Train)) rows.push_back(r);
    log << "resample: CRD disabled, " << rows.size() << " training samples\n";
  }
  for (const auto& r : rows_for_split(images, Split::Test)) rows.push_back(r);
  write_manifest(out.resample_manifest(), rows, config.crd.enabled);
  write_text(stamp_path(out.resample()), resample_stamp(config));
}

TrainedModel stage_train(const RunConfig& config, std::ostream& log) {
  config.validate(false);  // raw files are needed only to refresh stale upstream stages
  write_snapshot(config);
  const OutputLayout out{config.out_dir};
  ensure_resample(config, log);

  const ImageSet train_set = load_image_set(rows_for_split(read_manifest(out.resample_manifest()), Split::Train), out.images());
  const ImageSet eval_set = test_images(out);
  const ImageSet* eval = config.train.eval_each_epoch && eval_set.size() > 0 ? &eval_set : nullptr;

  ModelConfig model = config.model;
  model.seed = config.seed;
  TrainConfig tc = config.train;
  tc.shuffle_seed = config.seed;
  log << "train: " << train_set.size() << " samples, " << to_string(tc.loss) << ", " << tc.epochs
      << " epochs, lr " << tc.learning_rate << "\n";
  TrainedModel trained = gtda::train(Network::init(model), train_set, eval, tc);

  for (const auto& e : trained.history) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "train: epoch %d loss %.6f", e.epoch, e.loss);
    log << buf;
    if (e.has_eval) {
      std::snprintf(buf, sizeof buf, " acc %.4f recall %.4f f1 %.4f", e.eval.accuracy, e.eval.recall, e.eval.f1);
      log << buf;
    }
    log << "\n";
  }

  fs::create_directories(out.train());
  save_checkpoint(trained.network, out.checkpoint());
  write_text(out.history(), history_csv(trained.history));
  if (tc.loss == LossKind::Vbl) {
    write_text(out.vbl_log(), vbl_log_csv(trained.vbl_log));
  } else {
    fs::remove(out.vbl_log());
  }
  write_text(stamp_path(out.train()), train_stamp(config));
  return trained;
}

Metrics stage_evaluate(const RunConfig& config, std::ostream& log) {
  config.validate(false);  // raw files are needed only to refresh stale upstream stages
  write_snapshot(config);
  const OutputLayout out{config.out_dir};
  ensure_model(config, log);

  const ImageSet test_set = test_images(out);
  if (test_set.size() == 0) throw DataError("evaluate: no test split configured");
  const Network network = load_checkpoint(out.checkpoint());
  if (network.config().input_size != config.model.input_size) {
    throw DataError("evaluate: checkpoint input size does not match the configured model");
  }
  const Prediction pred = predict(network, test_set);
  const ConfusionMatrix cm = confusion(pred.labels, test_set.labels);
  const Metrics m = metrics(cm);

  char buf[256];
  std::string text = "accuracy,precision,recall,f1,tp,fn,fp,tn\n";
  std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%zu,%zu,%zu,%zu\n", m.accuracy, m.precision, m.recall, m.f1,
                cm.tp, cm.fn, cm.fp, cm.tn);
  text += buf;
  write_text(out.metrics(), text);

  std::string preds = "id,label,predicted,p_positive,p_negative\n";
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    std::snprintf(buf, sizeof buf, ",%s,%s,%.6f,%.6f\n", std::string(to_string(test_set.labels[i])).c_str(),
                  std::string(to_string(pred.labels[i])).c_str(), pred.probabilities[i][0],
                  pred.probabilities[i][1]);
    preds += csv_field(test_set.ids[i]) + buf;
  }
  write_text(out.predictions(), preds);

  std::snprintf(buf, sizeof buf, "evaluate: acc %.4f precision %.4f recall %.4f f1 %.4f (tp %zu fn %zu fp %zu tn %zu)\n",
                m.accuracy, m.precision, m.recall, m.f1, cm.tp, cm.fn, cm.fp, cm.tn);
  log << buf;
  if (m.precision_undefined) log << "evaluate: warning: no positive predictions, precision reported as 0\n";
  if (m.recall_undefined) log << "evaluate: warning: no positive samples, recall reported as 0\n";
  return m;
}

AblationReport stage_experiment(const RunConfig& config, std::ostream& log) {
  config.validate();
  write_snapshot(config);
  const OutputLayout out{config.out_dir};
  const LabeledDataset train = *load_split(config, Split::Train);
  const auto test = load_split(config, Split::Test);
  if (!test) throw DataError("experiment: no test split configured");

  const AblationReport report = run_ablation(config, train, *test, [&](const RunRow& row) {
    char buf[160];
    if (row.failed) {
      log << "experiment: " << row.cell << " seed " << row.seed << " FAILED: " << row.error << "\n";
      return;
    }
    std::snprintf(buf, sizeof buf, " seed %llu acc %.4f recall %.4f f1 %.4f\n",
                  static_cast<unsigned long long>(row.seed), row.metrics.accuracy, row.metrics.recall,
                  row.metrics.f1);
    log << "experiment: " << row.cell << buf << std::flush;
  });
  write_text(out.report(), report_csv(report));
  write_text(out.summary(), summary_table(report));
  log << summary_table(report);
  return report;
}

}  // namespace gtda
