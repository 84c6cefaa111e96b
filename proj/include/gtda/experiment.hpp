#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "gtda/classifier.hpp"
#include "gtda/config.hpp"
#include "gtda/data.hpp"
#include "gtda/metrics.hpp"
#include "gtda/s2i.hpp"

namespace gtda {

/// Rasterized images keyed by (S2I setting, split, sample id). A replica
/// resolves to its origin, so oversampling never renders anything twice.
class ImageCache {
 public:
  std::shared_ptr<const RasterImage> get(const S2IParams& params, Split split, const Sample& sample);
  std::size_t size() const { return images_.size(); }

 private:
  std::map<std::tuple<std::string, Split, std::string>, std::shared_ptr<const RasterImage>> images_;
};

ImageSet make_image_set(const LabeledDataset& dataset, const S2IParams& params, ImageCache& cache);

/// One configuration of the grid.
struct CellSpec {
  std::string name;
  bool crd = false;
  LossKind loss = LossKind::CrossEntropy;
  S2IParams s2i;
};

/// baseline, crd, vbl, crd+vbl; then, if enabled, one CRD+VBL cell per S2I
/// setting named "s2i:<tag>".
std::vector<CellSpec> ablation_cells(const RunConfig& base);

struct RunRow {
  std::string cell;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  ConfusionMatrix cm;
  Metrics metrics;
};

struct CellSummary {
  std::string cell;
  std::size_t runs = 0;
  std::size_t failures = 0;
  Metrics mean;
  Metrics sd;  // population standard deviation over the successful runs
};

struct AblationReport {
  std::vector<RunRow> rows;  // cell-major, seeds in config order
  std::vector<CellSummary> summary;
};

/// Trains and evaluates every cell for every seed in base.experiment.seeds.
/// For one seed all cells share the weight init, the shuffle order and (for
/// CRD cells) the resampled training set. A cell that throws is recorded as
/// failed and the grid continues.
AblationReport run_ablation(const RunConfig& base, const LabeledDataset& train, const LabeledDataset& test,
                            const std::function<void(const RunRow&)>& on_row = {});

std::vector<CellSummary> summarize(const std::vector<RunRow>& rows);

/// "cell,seed,acc,precision,recall,f1"; failed runs carry FAILED in the acc
/// column and empty metric fields.
std::string report_csv(const AblationReport& report);

/// Fixed-width table, one line per cell: mean and sd of each metric.
std::string summary_table(const AblationReport& report);

}  // namespace gtda
