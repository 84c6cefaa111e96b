#pragma once

// Stages of a CLI run. Each stage reads its inputs from the output
// directory, producing missing upstream artifacts first, and writes:
//
//   config.resolved.ini                 every key, defaults expanded
//   images/manifest.csv                 id,label,path (path relative to images/)
//   images/{train,test}/<id>.pgm
//   resample/manifest.csv               training rows after CRD (plus an origin
//                                       column), test rows unchanged
//   resample/crd_plan.txt
//   train/model.gtda, history.csv, vbl_log.csv
//   eval/metrics.csv, predictions.csv
//   experiment/report.csv, summary.txt

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gtda/classifier.hpp"
#include "gtda/config.hpp"
#include "gtda/data.hpp"
#include "gtda/experiment.hpp"

namespace gtda {

struct OutputLayout {
  std::filesystem::path root;

  std::filesystem::path snapshot() const { return root / "config.resolved.ini"; }
  std::filesystem::path images() const { return root / "images"; }
  std::filesystem::path image_manifest() const { return images() / "manifest.csv"; }
  std::filesystem::path resample() const { return root / "resample"; }
  std::filesystem::path resample_manifest() const { return resample() / "manifest.csv"; }
  std::filesystem::path crd_plan() const { return resample() / "crd_plan.txt"; }
  std::filesystem::path train() const { return root / "train"; }
  std::filesystem::path checkpoint() const { return train() / "model.gtda"; }
  std::filesystem::path history() const { return train() / "history.csv"; }
  std::filesystem::path vbl_log() const { return train() / "vbl_log.csv"; }
  std::filesystem::path eval() const { return root / "eval"; }
  std::filesystem::path metrics() const { return eval() / "metrics.csv"; }
  std::filesystem::path predictions() const { return eval() / "predictions.csv"; }
  std::filesystem::path experiment() const { return root / "experiment"; }
  std::filesystem::path report() const { return experiment() / "report.csv"; }
  std::filesystem::path summary() const { return experiment() / "summary.txt"; }
};

/// Loads one split of the configured source. Returns nullopt for a test
/// split that a file-based source does not provide.
std::optional<LabeledDataset> load_split(const RunConfig& config, Split split);

/// Maps an id to a file stem: characters outside [A-Za-z0-9._-] become '_'.
std::string file_stem(const std::string& id);

struct ManifestRow {
  std::string id;
  Label label = Label::Negative;
  std::string path;
  std::string origin;
};

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows, bool with_origin);

/// Rows whose path lies under `<split>/`.
std::vector<ManifestRow> rows_for_split(const std::vector<ManifestRow>& rows, Split split);

/// Reads the PGMs behind manifest rows (paths relative to `base`), sharing
/// one image between rows that point at the same file.
ImageSet load_image_set(const std::vector<ManifestRow>& rows, const std::filesystem::path& base);

/// Writes config.resolved.ini.
void write_snapshot(const RunConfig& config);

void stage_rasterize(const RunConfig& config, std::ostream& log);
void stage_resample(const RunConfig& config, std::ostream& log);
TrainedModel stage_train(const RunConfig& config, std::ostream& log);
Metrics stage_evaluate(const RunConfig& config, std::ostream& log);
AblationReport stage_experiment(const RunConfig& config, std::ostream& log);

}  // namespace gtda
