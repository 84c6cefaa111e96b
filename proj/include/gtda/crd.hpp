#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gtda/data.hpp"

namespace gtda {

/// Dense row-major n x dim matrix of clustering features.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

/// Each series resampled to `dim` points and then min-max normalised.
FeatureMatrix clustering_features(const LabeledDataset& dataset, std::size_t dim = 128);

struct ClusterModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;  // k x dim
  std::vector<std::size_t> assignment;
  double inertia = 0.0;
  /// Inertia after every assignment step; non-increasing.
  std::vector<double> inertia_history;
  std::size_t iterations = 0;

  std::span<const double> centroid(std::size_t c) const { return {centroids.data() + c * dim, dim}; }
};

struct KMeansOptions {
  std::size_t k = 6;
  std::uint64_t seed = 0;
  std::size_t max_iter = 100;
  double tol = 1e-6;
};

/// Lloyd's algorithm with k-means++ seeding under squared Euclidean
/// distance. Stops when the relative inertia improvement drops below `tol`
/// or after `max_iter` assignment steps. A cluster left empty by an update
/// is reseeded at the point farthest from its own centroid.
ClusterModel kmeans(const FeatureMatrix& features, const KMeansOptions& options);

struct ClusterCount {
  std::size_t n_majority = 0;
  std::size_t n_minority = 0;
  bool operator==(const ClusterCount&) const = default;
};

std::vector<ClusterCount> cluster_counts(const ClusterModel& model, std::span<const Label> labels);

/// LITERAL is the printed per-cluster formula, whose inner sum collapses to
/// k-1 and leaves round(N_MA^i / m). WEIGHTED keeps the per-cluster factor
/// (k/(k-1)) * (1 - r_i / sum_j r_j), whose mean over clusters is 1.
enum class CrdMode : std::uint8_t { Literal, Weighted };

std::string_view to_string(CrdMode mode);
CrdMode parse_crd_mode(std::string_view text);

struct ClusterTarget {
  std::size_t n_majority = 0;
  std::size_t n_minority = 0;
  /// N_MA^i / N_MI^i; empty when the cluster has no minority samples.
  std::optional<double> ratio;
  /// Minority count after oversampling (>= n_minority).
  std::size_t target = 0;
};

struct CrdPlan {
  CrdMode mode = CrdMode::Weighted;
  double m = 1.0;
  std::size_t k = 0;
  std::vector<ClusterTarget> clusters;
  std::vector<std::string> warnings;

  std::size_t total_majority() const;
  std::size_t total_minority() const;
  std::size_t total_target() const;
};

/// Per-cluster oversampling weight (1/(k-1)) * (1 - r_i / sum_j r_j).
/// Sums to 1 over the clusters for any positive ratios.
std::vector<double> crd_weights(std::span<const double> ratios);

/// Target minority count per cluster. Clusters without minority samples
/// are left out of sum_j r_j, receive round(N_MA^i/m) in LITERAL mode and no
/// new samples in WEIGHTED mode, and add a warning. WEIGHTED mode needs at
/// least two clusters with minority samples.
CrdPlan crd_targets(std::span<const ClusterCount> counts, double m, CrdMode mode);

/// Random oversampling within clusters: each cluster's minority members are
/// drawn uniformly with replacement until it holds `target` of them.
/// Replicas get ids "<origin>~r<counter>". Output is originals then
/// replicas, then a seeded global shuffle.
LabeledDataset ros_oversample(const LabeledDataset& dataset, const ClusterModel& model, const CrdPlan& plan,
                              std::uint64_t seed);

/// Plain-text audit: a comment header, then one line per cluster
/// "i N_MA N_MI r NN_MI".
std::string format_plan(const CrdPlan& plan);

struct CrdSettings {
  std::size_t k = 6;
  double m = 1.0;
  CrdMode mode = CrdMode::Weighted;
  std::size_t feature_length = 128;
};

struct CrdResult {
  ClusterModel model;
  CrdPlan plan;
  LabeledDataset resampled;
};

/// Cluster, count, plan and oversample in one call. Cluster seeding and
/// replica draws use separate streams derived from `seed`.
CrdResult crd_resample(const LabeledDataset& train, const CrdSettings& settings, std::uint64_t seed);

}  // namespace gtda
