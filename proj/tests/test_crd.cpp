#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "gtda/crd.hpp"
#include "gtda/error.hpp"
#include "gtda/rng.hpp"

using namespace gtda;

namespace {

FeatureMatrix two_blobs(std::size_t per_blob, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix f{2 * per_blob, 2, {}};
  for (std::size_t i = 0; i < 2 * per_blob; ++i) {
    const double cx = i < per_blob ? -5.0 : 5.0;
    f.data.push_back(cx + rng.normal());
    f.data.push_back(rng.normal());
  }
  return f;
}

double sse(const FeatureMatrix& f, const std::vector<int>& part) {
  double total = 0;
  for (int g = 0; g < 2; ++g) {
    double mx = 0, my = 0;
    int n = 0;
    for (std::size_t i = 0; i < f.rows; ++i) {
      if (part[i] != g) continue;
      mx += f.data[2 * i];
      my += f.data[2 * i + 1];
      ++n;
    }
    if (n == 0) return std::numeric_limits<double>::infinity();
    mx /= n;
    my /= n;
    for (std::size_t i = 0; i < f.rows; ++i) {
      if (part[i] == g) total += std::pow(f.data[2 * i] - mx, 2) + std::pow(f.data[2 * i + 1] - my, 2);
    }
  }
  return total;
}

bool same_partition(const std::vector<std::size_t>& a, const std::vector<int>& b) {
  bool direct = true, swapped = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    direct = direct && static_cast<int>(a[i]) == b[i];
    swapped = swapped && static_cast<int>(a[i]) == 1 - b[i];
  }
  return direct || swapped;
}

// Series whose shape (after min-max normalisation) identifies the cluster:
// rising ramps versus falling ramps.
LabeledDataset two_shape_dataset(std::size_t up_neg, std::size_t up_pos, std::size_t down_neg,
                                 std::size_t down_pos) {
  LabeledDataset ds;
  Rng rng(99);
  auto add = [&](bool up, Label label, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      Sample s;
      s.label = label;
      s.series.id = "x" + std::to_string(ds.size());
      for (int t = 0; t < 64; ++t) s.series.values.push_back((up ? t : 64 - t) + 0.5 * rng.normal());
      ds.samples.push_back(std::move(s));
    }
  };
  add(true, Label::Negative, up_neg);
  add(true, Label::Positive, up_pos);
  add(false, Label::Negative, down_neg);
  add(false, Label::Positive, down_pos);
  return ds;
}

}  // namespace

TEST_CASE("kmeans: k = n distinct points gives zero inertia") {
  FeatureMatrix f{5, 1, {0, 1, 3, 7, 15}};
  auto m = kmeans(f, {.k = 5, .seed = 1});
  CHECK(m.inertia == 0.0);
  CHECK(std::set<std::size_t>(m.assignment.begin(), m.assignment.end()).size() == 5);
}

TEST_CASE("kmeans: two blobs match the exhaustive best 2-partition") {
  auto f = two_blobs(50, 3);
  auto m = kmeans(f, {.k = 2, .seed = 7});
  std::vector<int> blob(100);
  for (int i = 0; i < 100; ++i) blob[i] = i < 50 ? 0 : 1;
  CHECK(same_partition(m.assignment, blob));

  // Ten points, five from each blob, every 2-partition enumerated.
  FeatureMatrix sub{10, 2, {}};
  for (int i : {0, 7, 13, 21, 40, 55, 61, 77, 80, 99}) {
    sub.data.push_back(f.data[2 * i]);
    sub.data.push_back(f.data[2 * i + 1]);
  }
  std::vector<int> best;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int mask = 1; mask < (1 << 9); ++mask) {
    std::vector<int> part(10, 0);
    for (int i = 0; i < 9; ++i) part[i + 1] = (mask >> i) & 1;
    double s = sse(sub, part);
    if (s < best_sse) {
      best_sse = s;
      best = part;
    }
  }
  auto ms = kmeans(sub, {.k = 2, .seed = 2});
  CHECK(same_partition(ms.assignment, best));
  CHECK(ms.inertia == doctest::Approx(best_sse).epsilon(1e-9));
}

TEST_CASE("kmeans: determinism and non-increasing inertia") {
  Rng rng(4);
  FeatureMatrix f{300, 6, {}};
  for (int i = 0; i < 300 * 6; ++i) f.data.push_back(rng.normal());
  auto a = kmeans(f, {.k = 6, .seed = 11});
  auto b = kmeans(f, {.k = 6, .seed = 11});
  CHECK(a.centroids == b.centroids);
  CHECK(a.assignment == b.assignment);
  for (std::size_t i = 1; i < a.inertia_history.size(); ++i) {
    CHECK(a.inertia_history[i] <= a.inertia_history[i - 1]);
  }
  CHECK_THROWS_AS(kmeans(f, {.k = 0, .seed = 1}), ConfigError);
  CHECK_THROWS_AS(kmeans(FeatureMatrix{2, 1, {0, 1}}, {.k = 3, .seed = 1}), DataError);
}

TEST_CASE("cluster_counts matches a direct recount") {
  Rng rng(8);
  ClusterModel m;
  m.k = 3;
  std::vector<Label> labels;
  for (int i = 0; i < 500; ++i) {
    m.assignment.push_back(rng.below(3));
    labels.push_back(rng.below(5) == 0 ? Label::Positive : Label::Negative);
  }
  auto counts = cluster_counts(m, labels);
  for (std::size_t c = 0; c < 3; ++c) {
    std::size_t ma = 0, mi = 0;
    for (int i = 0; i < 500; ++i) {
      if (m.assignment[i] != c) continue;
      (labels[i] == Label::Positive ? mi : ma)++;
    }
    CHECK(counts[c] == ClusterCount{ma, mi});
  }
  ClusterModel one;
  one.k = 1;
  one.assignment.assign(labels.size(), 0);
  auto all = cluster_counts(one, labels);
  CHECK(all[0].n_majority + all[0].n_minority == 500);
}

TEST_CASE("weights over clusters sum to one") {
  Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> r(2 + rng.below(9));
    for (auto& x : r) x = rng.uniform(0.01, 50.0);
    auto w = crd_weights(r);
    CHECK(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) <= 1e-12);
  }
}

TEST_CASE("targets for the two-cluster example") {
  const std::vector<ClusterCount> counts{{60, 20}, {40, 5}};
  // Direct evaluation: 60 * 2 * (1 - 3/11) and 40 * 2 * (1 - 8/11).
  const double w1 = 60.0 * 2.0 * (1.0 - 3.0 / 11.0), w2 = 40.0 * 2.0 * (1.0 - 8.0 / 11.0);
  auto weighted = crd_targets(counts, 1.0, CrdMode::Weighted);
  CHECK(weighted.clusters[0].target == static_cast<std::size_t>(std::round(w1)));
  CHECK(weighted.clusters[1].target == static_cast<std::size_t>(std::round(w2)));
  CHECK(weighted.clusters[0].target == 87);
  CHECK(weighted.clusters[1].target == 22);
  auto literal = crd_targets(counts, 1.0, CrdMode::Literal);
  CHECK(literal.clusters[0].target == 60);
  CHECK(literal.clusters[1].target == 40);
}

TEST_CASE("equal ratios make both modes agree") {
  const std::vector<ClusterCount> counts{{30, 10}, {60, 20}, {90, 30}};
  auto w = crd_targets(counts, 1.0, CrdMode::Weighted);
  auto l = crd_targets(counts, 1.0, CrdMode::Literal);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(w.clusters[i].target == l.clusters[i].target);
    CHECK(l.clusters[i].target == counts[i].n_majority);
  }
  auto half = crd_targets(counts, 2.0, CrdMode::Literal);
  CHECK(half.clusters[1].target == 30);
}

TEST_CASE("literal mode keeps the global ratio near m") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng.below(8);
    const double m = rng.uniform(0.5, 3.0);
    std::vector<ClusterCount> counts;
    for (std::size_t i = 0; i < k; ++i) counts.push_back({20 + rng.below(100), 1 + rng.below(10)});
    auto plan = crd_targets(counts, m, CrdMode::Literal);
    bool floored = false;
    for (std::size_t i = 0; i < k; ++i) floored = floored || plan.clusters[i].target == counts[i].n_minority;
    if (floored) continue;
    const double exact = static_cast<double>(plan.total_majority()) / m;
    CHECK(std::abs(static_cast<double>(plan.total_target()) - exact) <= 0.5 * static_cast<double>(k));
  }
}

TEST_CASE("zero-minority clusters") {
  const std::vector<ClusterCount> counts{{50, 0}, {30, 5}, {20, 10}};
  auto w = crd_targets(counts, 1.0, CrdMode::Weighted);
  CHECK(w.clusters[0].target == 0);
  CHECK_FALSE(w.clusters[0].ratio.has_value());
  CHECK(w.warnings.size() == 1);
  auto l = crd_targets(counts, 1.0, CrdMode::Literal);
  CHECK(l.clusters[0].target == 50);

  ClusterModel model;
  model.k = 3;
  LabeledDataset ds;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < counts[c].n_majority + counts[c].n_minority; ++i) {
      Sample s;
      s.series = {"c" + std::to_string(c) + "_" + std::to_string(i), {0.0, 1.0}};
      s.label = i < counts[c].n_minority ? Label::Positive : Label::Negative;
      ds.samples.push_back(s);
      model.assignment.push_back(c);
    }
  }
  CHECK_THROWS_AS(ros_oversample(ds, model, l, 1), DataError);
  auto out = ros_oversample(ds, model, w, 1);
  CHECK(dataset_stats(out).n_minority == w.total_target());
  // A single cluster with minority samples cannot be weighted.
  CHECK_THROWS_AS(crd_targets(std::vector<ClusterCount>{{50, 0}, {30, 5}}, 1.0, CrdMode::Weighted), ConfigError);
}

TEST_CASE("ros: identity plan and replica bookkeeping") {
  ClusterModel model;
  model.k = 2;
  LabeledDataset ds;
  for (int i = 0; i < 10; ++i) {
    Sample s;
    s.series = {"s" + std::to_string(i), {double(i), 0.0}};
    s.label = i < 2 || i == 9 ? Label::Positive : Label::Negative;
    ds.samples.push_back(s);
    model.assignment.push_back(i < 5 ? 0 : 1);
  }
  CrdPlan plan;
  plan.k = 2;
  plan.clusters = {{3, 2, 1.5, 2}, {4, 1, 4.0, 1}};
  auto same = ros_oversample(ds, model, plan, 3);
  std::multiset<std::string> a, b;
  for (auto& s : ds.samples) a.insert(s.id());
  for (auto& s : same.samples) b.insert(s.id());
  CHECK(a == b);

  plan.clusters[0].target = 5;
  auto grown = ros_oversample(ds, model, plan, 3);
  CHECK(grown.size() == 13);
  std::size_t replicas = 0;
  for (auto& s : grown.samples) {
    if (!s.is_replica()) continue;
    ++replicas;
    CHECK((s.origin == "s0" || s.origin == "s1"));
    CHECK(s.label == Label::Positive);
    const auto& src = ds.samples[s.origin == "s0" ? 0 : 1];
    CHECK(s.series.values == src.series.values);
    CHECK(s.id().starts_with(s.origin + "~r"));
  }
  CHECK(replicas == 3);
  grown.validate();
}

TEST_CASE("crd_resample on the two-cluster example") {
  auto ds = two_shape_dataset(60, 20, 40, 5);
  auto r = crd_resample(ds, {.k = 2, .m = 1.0, .mode = CrdMode::Weighted, .feature_length = 32}, 5);
  auto st = dataset_stats(r.resampled);
  CHECK(st.n_majority == 100);
  CHECK(st.n_minority == 87 + 22);
  auto again = crd_resample(ds, {.k = 2, .m = 1.0, .mode = CrdMode::Weighted, .feature_length = 32}, 5);
  REQUIRE(again.resampled.size() == r.resampled.size());
  for (std::size_t i = 0; i < r.resampled.size(); ++i) CHECK(again.resampled.samples[i].id() == r.resampled.samples[i].id());
}

TEST_CASE("format_plan has one row per cluster") {
  auto plan = crd_targets(std::vector<ClusterCount>{{60, 20}, {40, 5}, {7, 0}}, 1.0, CrdMode::Weighted);
  auto text = format_plan(plan);
  std::size_t rows = 0, pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (text[pos] != '#') ++rows;
    pos = eol + 1;
  }
  CHECK(rows == 3);
  CHECK(text.find("undefined") != std::string::npos);
  CHECK(parse_crd_mode(to_string(CrdMode::Literal)) == CrdMode::Literal);
}

TEST_CASE("clustering features are length-independent and normalised") {
  LabeledDataset ds;
  ds.samples.push_back({{"a", {0, 1, 2, 3}}, Label::Negative, {}});
  ds.samples.push_back({{"b", {0, 10, 20, 30, 40, 50, 60, 70}}, Label::Positive, {}});
  auto f = clustering_features(ds, 16);
  CHECK(f.rows == 2);
  CHECK(f.cols == 16);
  for (std::size_t j = 0; j < 16; ++j) CHECK(f.row(0)[j] == doctest::Approx(f.row(1)[j]).epsilon(1e-12));
  CHECK(f.row(0)[0] == 0.0);
  CHECK(f.row(0)[15] == 1.0);
}
