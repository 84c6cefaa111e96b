#include "gtda/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

#include "gtda/crd.hpp"
#include "gtda/error.hpp"

namespace gtda {

std::shared_ptr<const RasterImage> ImageCache::get(const S2IParams& params, Split split, const Sample& sample) {
  const std::string& id = sample.is_replica() ? sample.origin : sample.id();
  auto key = std::make_tuple(params.tag() + "_" + std::to_string(params.width) + "x" +
                                 std::to_string(params.height) + "_" + std::to_string(params.margin),
                             split, id);
  auto it = images_.find(key);
  if (it != images_.end()) return it->second;
  auto image = std::make_shared<const RasterImage>(rasterize(sample.series.values, params));
  images_.emplace(std::move(key), image);
  return image;
}

ImageSet make_image_set(const LabeledDataset& dataset, const S2IParams& params, ImageCache& cache) {
  ImageSet set;
  for (const auto& s : dataset.samples) set.add(s.id(), s.label, cache.get(params, dataset.split, s));
  return set;
}

std::vector<CellSpec> ablation_cells(const RunConfig& base) {
  std::vector<CellSpec> cells = {
      {"baseline", false, LossKind::CrossEntropy, base.s2i},
      {"crd", true, LossKind::CrossEntropy, base.s2i},
      {"vbl", false, LossKind::Vbl, base.s2i},
      {"crd+vbl", true, LossKind::Vbl, base.s2i},
  };
  if (base.experiment.s2i_grid) {
    for (const auto& p : param_grid(base.s2i)) cells.push_back({"s2i:" + p.tag(), true, LossKind::Vbl, p});
  }
  return cells;
}

AblationReport run_ablation(const RunConfig& base, const LabeledDataset& train, const LabeledDataset& test,
                            const std::function<void(const RunRow&)>& on_row) {
  base.validate(false);
  if (train.empty() || test.empty()) throw DataError("run_ablation: train and test splits are required");
  const auto cells = ablation_cells(base);
  ImageCache cache;

  std::vector<std::vector<RunRow>> by_cell(cells.size());
  for (std::uint64_t seed : base.experiment.seeds) {
    // CRD depends only on the raw training series and the seed, so every
    // CRD cell of this seed shares one resampled set.
    std::optional<LabeledDataset> resampled;
    std::string crd_error;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const CellSpec& cell = cells[c];
      RunRow row;
      row.cell = cell.name;
      row.seed = seed;
      try {
        if (cell.crd && !resampled && crd_error.empty()) {
          try {
            resampled = crd_resample(train, base.crd.settings, seed).resampled;
          } catch (const Error& e) {
            crd_error = e.what();
          }
        }
        if (cell.crd && !crd_error.empty()) throw DataError(crd_error);
        const ImageSet train_set = make_image_set(cell.crd ? *resampled : train, cell.s2i, cache);
        const ImageSet test_set = make_image_set(test, cell.s2i, cache);

        ModelConfig model = base.model;
        model.seed = seed;
        TrainConfig tc = base.train;
        tc.loss = cell.loss;
        tc.shuffle_seed = seed;
        tc.eval_each_epoch = false;
        const auto trained = gtda::train(Network::init(model), train_set, nullptr, tc);
        row.metrics = evaluate(trained.network, test_set, &row.cm);
      } catch (const Error& e) {
        row.failed = true;
        row.error = e.what();
      }
      if (on_row) on_row(row);
      by_cell[c].push_back(std::move(row));
    }
  }

  AblationReport report;
  for (auto& rows : by_cell) {
    for (auto& r : rows) report.rows.push_back(std::move(r));
  }
  report.summary = summarize(report.rows);
  return report;
}

std::vector<CellSummary> summarize(const std::vector<RunRow>& rows) {
  std::vector<CellSummary> out;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const CellSummary& s) { return s.cell == row.cell; });
    if (it == out.end()) {
      out.push_back({row.cell, 0, 0, {}, {}});
      it = out.end() - 1;
    }
    ++it->runs;
    if (row.failed) ++it->failures;
  }
  for (auto& s : out) {
    std::vector<const Metrics*> ok;
    for (const auto& row : rows) {
      if (row.cell == s.cell && !row.failed) ok.push_back(&row.metrics);
    }
    if (ok.empty()) continue;
    const double n = static_cast<double>(ok.size());
    auto stat = [&](double Metrics::*field, double& mean, double& sd) {
      double sum = 0.0;
      for (const auto* m : ok) sum += m->*field;
      mean = sum / n;
      double sq = 0.0;
      for (const auto* m : ok) sq += (m->*field - mean) * (m->*field - mean);
      sd = std::sqrt(sq / n);
    };
    stat(&Metrics::accuracy, s.mean.accuracy, s.sd.accuracy);
    stat(&Metrics::precision, s.mean.precision, s.sd.precision);
    stat(&Metrics::recall, s.mean.recall, s.sd.recall);
    stat(&Metrics::f1, s.mean.f1, s.sd.f1);
  }
  return out;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string report_csv(const AblationReport& report) {
  std::ostringstream os;
  os << "cell,seed,acc,precision,recall,f1\n";
  for (const auto& r : report.rows) {
    os << r.cell << ',' << r.seed << ',';
    if (r.failed) {
      os << "FAILED,,,\n";
      continue;
    }
    os << fixed(r.metrics.accuracy, 6) << ',' << fixed(r.metrics.precision, 6) << ','
       << fixed(r.metrics.recall, 6) << ',' << fixed(r.metrics.f1, 6) << '\n';
  }
  return os.str();
}

std::string summary_table(const AblationReport& report) {
  std::size_t width = 8;
  for (const auto& s : report.summary) width = std::max(width, s.cell.size());
  std::ostringstream os;
  auto pad = [&](const std::string& text) { return text + std::string(width - text.size(), ' '); };
  os << pad("cell") << "  runs  accuracy       precision      recall         f1\n";
  for (const auto& s : report.summary) {
    const std::string runs = std::to_string(s.runs - s.failures) + "/" + std::to_string(s.runs);
    std::string line = pad(s.cell) + "  " + runs + std::string(runs.size() < 6 ? 6 - runs.size() : 1, ' ');
    if (s.failures == s.runs) {
      os << line << "FAILED\n";
      continue;
    }
    for (auto [mean, sd] : {std::pair{s.mean.accuracy, s.sd.accuracy}, std::pair{s.mean.precision, s.sd.precision},
                            std::pair{s.mean.recall, s.sd.recall}, std::pair{s.mean.f1, s.sd.f1}}) {
      line += fixed(mean, 3) + " +- " + fixed(sd, 3) + "  ";
    }
    line.resize(line.size() - 2);
    os << line << '\n';
  }
  return os.str();
}

}  // namespace gtda
