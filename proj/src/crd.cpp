#include "gtda/crd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "gtda/error.hpp"
#include "gtda/kernels.hpp"
#include "gtda/rng.hpp"
#include "gtda/s2i.hpp"

namespace gtda {

FeatureMatrix clustering_features(const LabeledDataset& dataset, std::size_t dim) {
  FeatureMatrix fm;
  fm.rows = dataset.size();
  fm.cols = dim;
  fm.data.reserve(fm.rows * dim);
  for (const auto& s : dataset.samples) {
    auto row = minmax_normalize(resample_length(std::span<const double>(s.series.values), dim));
    fm.data.insert(fm.data.end(), row.begin(), row.end());
  }
  return fm;
}

namespace {

std::vector<double> kmeanspp_init(const FeatureMatrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows, d = x.cols;
  std::vector<double> centroids;
  centroids.reserve(k * d);
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  auto take = [&](std::size_t i) {
    chosen[i] = true;
    auto r = x.row(i);
    centroids.insert(centroids.end(), r.begin(), r.end());
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      auto rj = x.row(j);
      for (std::size_t t = 0; t < d; ++t) {
        const double diff = rj[t] - r[t];
        s += diff * diff;
      }
      d2[j] = std::min(d2[j], s);
    }
  };

  take(rng.below(n));
  while (centroids.size() < k * d) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += d2[j];
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      std::size_t pick = n;
      std::size_t last_positive = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (d2[j] <= 0.0) continue;
        last_positive = j;
        cum += d2[j];
        if (cum > target) {
          pick = j;
          break;
        }
      }
      take(pick < n ? pick : last_positive);
    } else {
      // Every remaining point coincides with a centroid.
      std::vector<std::size_t> free;
      for (std::size_t j = 0; j < n; ++j) {
        if (!chosen[j]) free.push_back(j);
      }
      take(free[rng.below(free.size())]);
    }
  }
  return centroids;
}

}  // namespace

ClusterModel kmeans(const FeatureMatrix& x, const KMeansOptions& opt) {
  const std::size_t n = x.rows, d = x.cols, k = opt.k;
  if (k < 1) throw ConfigError("kmeans: k must be >= 1");
  if (n < k) {
    throw DataError("kmeans: need at least k=" + std::to_string(k) + " samples, got " + std::to_string(n));
  }
  if (d == 0 || x.data.size() != n * d) throw DataError("kmeans: malformed feature matrix");
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    if (!std::isfinite(x.data[i])) {
      throw DataError("kmeans: non-finite feature at row " + std::to_string(i / d) + ", column " +
                      std::to_string(i % d));
    }
  }

  Rng rng(opt.seed, Stream::Clustering);
  ClusterModel model;
  model.k = k;
  model.dim = d;
  model.centroids = kmeanspp_init(x, k, rng);
  model.assignment.assign(n, 0);
  std::vector<double> dist2(n);
  std::vector<double> sums(k * d);
  std::vector<std::size_t> sizes(k);

  for (std::size_t iter = 0;; ++iter) {
    kernels::assign_nearest(x.data, n, d, model.centroids, k, model.assignment, dist2);
    double inertia = 0.0;
    for (double v : dist2) inertia += v;
    const double prev = model.inertia_history.empty() ? inertia : model.inertia_history.back();
    model.inertia_history.push_back(inertia);
    model.inertia = inertia;
    model.iterations = iter + 1;

    const bool converged = inertia == 0.0 || (iter > 0 && prev - inertia <= opt.tol * prev);
    if (converged || iter + 1 >= opt.max_iter) break;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = model.assignment[i];
      ++sizes[c];
      auto r = x.row(i);
      for (std::size_t t = 0; t < d; ++t) sums[c * d + t] += r[t];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;
      for (std::size_t t = 0; t < d; ++t) {
        model.centroids[c * d + t] = sums[c * d + t] / static_cast<double>(sizes[c]);
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[model.assignment[i]] < 2) continue;
        if (far == n || dist2[i] > dist2[far]) far = i;
      }
      if (far == n) continue;
      --sizes[model.assignment[far]];
      ++sizes[c];
      dist2[far] = 0.0;
      auto r = x.row(far);
      std::copy(r.begin(), r.end(), model.centroids.begin() + static_cast<std::ptrdiff_t>(c * d));
    }
  }
  return model;
}

std::vector<ClusterCount> cluster_counts(const ClusterModel& model, std::span<const Label> labels) {
  if (labels.size() != model.assignment.size()) {
    throw DataError("cluster_counts: " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(model.assignment.size()) + " assigned samples");
  }
  std::vector<ClusterCount> counts(model.k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& c = counts[model.assignment[i]];
    (labels[i] == Label::Positive ? c.n_minority : c.n_majority) += 1;
  }
  return counts;
}

std::string_view to_string(CrdMode mode) { return mode == CrdMode::Literal ? "literal" : "weighted"; }

CrdMode parse_crd_mode(std::string_view text) {
  if (text == "literal" || text == "LITERAL") return CrdMode::Literal;
  if (text == "weighted" || text == "WEIGHTED") return CrdMode::Weighted;
  throw ConfigError("unknown crd mode '" + std::string(text) + "' (expected literal|weighted)");
}

std::size_t CrdPlan::total_majority() const {
  std::size_t s = 0;
  for (const auto& c : clusters) s += c.n_majority;
  return s;
}

std::size_t CrdPlan::total_minority() const {
  std::size_t s = 0;
  for (const auto& c : clusters) s += c.n_minority;
  return s;
}

std::size_t CrdPlan::total_target() const {
  std::size_t s = 0;
  for (const auto& c : clusters) s += c.target;
  return s;
}

std::vector<double> crd_weights(std::span<const double> ratios) {
  const std::size_t k = ratios.size();
  if (k < 2) throw ConfigError("crd: weighting needs at least 2 clusters with minority samples");
  double sum = 0.0;
  for (double r : ratios) sum += r;
  std::vector<double> w(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double share = sum > 0.0 ? ratios[i] / sum : 1.0 / static_cast<double>(k);
    w[i] = (1.0 - share) / static_cast<double>(k - 1);
  }
  return w;
}

CrdPlan crd_targets(std::span<const ClusterCount> counts, double m, CrdMode mode) {
  if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("crd: m must be > 0");
  if (counts.empty()) throw ConfigError("crd: no clusters");

  CrdPlan plan;
  plan.mode = mode;
  plan.m = m;
  plan.k = counts.size();
  plan.clusters.resize(counts.size());

  std::vector<double> ratios;
  std::vector<std::size_t> with_minority;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    auto& c = plan.clusters[i];
    c.n_majority = counts[i].n_majority;
    c.n_minority = counts[i].n_minority;
    if (c.n_minority > 0) {
      c.ratio = static_cast<double>(c.n_majority) / static_cast<double>(c.n_minority);
      ratios.push_back(*c.ratio);
      with_minority.push_back(i);
    } else if (c.n_majority > 0) {
      plan.warnings.push_back("cluster " + std::to_string(i) + " has no minority samples (" +
                              std::to_string(c.n_majority) + " majority); excluded from the ratio sum");
    }
  }

  auto base = [&](const ClusterTarget& c) { return static_cast<double>(c.n_majority) / m; };

  if (mode == CrdMode::Literal) {
    for (auto& c : plan.clusters) c.target = static_cast<std::size_t>(std::round(base(c)));
  } else {
    const auto w = crd_weights(ratios);
    const double kv = static_cast<double>(ratios.size());
    for (std::size_t j = 0; j < with_minority.size(); ++j) {
      auto& c = plan.clusters[with_minority[j]];
      c.target = static_cast<std::size_t>(std::round(base(c) * kv * w[j]));
    }
  }
  for (auto& c : plan.clusters) c.target = std::max(c.target, c.n_minority);
  return plan;
}

LabeledDataset ros_oversample(const LabeledDataset& dataset, const ClusterModel& model, const CrdPlan& plan,
                              std::uint64_t seed) {
  if (model.assignment.size() != dataset.size()) {
    throw DataError("ros_oversample: cluster assignment does not match the dataset");
  }
  if (plan.clusters.size() != model.k) throw DataError("ros_oversample: plan and model disagree on k");

  std::vector<std::vector<std::size_t>> minority(model.k);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.samples[i].label == Label::Positive) minority[model.assignment[i]].push_back(i);
  }

  Rng rng(seed, Stream::Oversample);
  LabeledDataset out;
  out.split = dataset.split;
  out.samples = dataset.samples;
  std::map<std::size_t, std::size_t> replica_count;

  for (std::size_t c = 0; c < model.k; ++c) {
    const auto& members = minority[c];
    const auto& target = plan.clusters[c];
    if (members.size() != target.n_minority) {
      throw DataError("ros_oversample: plan counts for cluster " + std::to_string(c) +
                      " do not match the dataset");
    }
    if (target.target <= members.size()) continue;
    if (members.empty()) {
      throw DataError("ros_oversample: cluster " + std::to_string(c) + " needs " +
                      std::to_string(target.target) + " minority samples but has none to replicate");
    }
    for (std::size_t r = members.size(); r < target.target; ++r) {
      const std::size_t src = members[rng.below(members.size())];
      Sample copy = dataset.samples[src];
      copy.origin = dataset.samples[src].id();
      copy.series.id = copy.origin + "~r" + std::to_string(++replica_count[src]);
      out.samples.push_back(std::move(copy));
    }
  }
  rng.shuffle(out.samples);
  return out;
}

std::string format_plan(const CrdPlan& plan) {
  std::ostringstream os;
  os << "# crd plan mode=" << to_string(plan.mode) << " m=" << plan.m << " k=" << plan.k << '\n';
  for (const auto& w : plan.warnings) os << "# warning: " << w << '\n';
  os << "# cluster n_majority n_minority ratio target\n";
  char buf[64];
  for (std::size_t i = 0; i < plan.clusters.size(); ++i) {
    const auto& c = plan.clusters[i];
    os << i << ' ' << c.n_majority << ' ' << c.n_minority << ' ';
    if (c.ratio) {
      std::snprintf(buf, sizeof buf, "%.6f", *c.ratio);
      os << buf;
    } else {
      os << "undefined";
    }
    os << ' ' << c.target << '\n';
  }
  return os.str();
}

CrdResult crd_resample(const LabeledDataset& train, const CrdSettings& settings, std::uint64_t seed) {
  CrdResult result;
  const auto features = clustering_features(train, settings.feature_length);
  result.model = kmeans(features, {.k = settings.k, .seed = seed});
  const auto labels = train.labels();
  const auto counts = cluster_counts(result.model, labels);
  result.plan = crd_targets(counts, settings.m, settings.mode);
  result.resampled = ros_oversample(train, result.model, result.plan, seed);
  return result;
}

}  // namespace gtda
