#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfpaced/matrix.hpp"
#include "selfpaced/rng.hpp"

namespace selfpaced {

struct Cluster {
  std::size_t class_id = 0;
  std::vector<std::size_t> members;  // ascending sample indices
  std::vector<double> centroid;
  double mean_loss = 1.0;
};

struct ClusteringOptions {
  std::size_t max_iters = 100;
  double tol = 1e-6;
};

/// Per-class K-cluster partition of a sample set, with a per-sample loss table.
///
/// Cluster c * K + k is the k-th cluster of class c. Every sample belongs to
/// exactly one cluster of its own class. Indices refer to rows of the matrix
/// the index was built from.
class ClusterIndex {
 public:
  std::size_t class_count() const { return class_count_; }
  std::size_t clusters_per_class() const { return clusters_per_class_; }
  std::size_t cluster_count() const { return clusters_.size(); }
  std::size_t sample_count() const { return cluster_of_.size(); }

  const std::vector<Cluster>& clusters() const { return clusters_; }
  const Cluster& cluster(std::size_t id) const { return clusters_.at(id); }
  std::size_t cluster_of(std::size_t sample) const { return cluster_of_.at(sample); }
  std::span<const std::size_t> assignments() const { return cluster_of_; }
  std::span<const std::size_t> labels() const { return labels_; }
  std::span<const double> sample_losses() const { return losses_; }

  /// Sum over classes of the final Lloyd objective.
  double objective() const { return objective_; }
  std::size_t empty_repairs() const { return empty_repairs_; }

  Matrix centroids() const;

  /// Overwrites per-sample losses and refreshes the affected cluster means.
  /// A sample listed twice keeps its last value.
  void record_losses(std::span<const std::size_t> samples, std::span<const double> losses);

  /// FNV-1a over assignments, centroids and losses.
  std::uint64_t checksum() const;

  /// Debug dump: centroids, member counts and mean losses per cluster.
  std::string to_json() const;

 private:
  friend ClusterIndex build_index(const Matrix&, std::span<const std::size_t>, std::size_t, std::size_t,
                                  std::span<const double>, Rng&, const ClusteringOptions&);
  void refresh_mean(std::size_t cluster_id);

  std::size_t class_count_ = 0;
  std::size_t clusters_per_class_ = 0;
  std::vector<Cluster> clusters_;
  std::vector<std::size_t> cluster_of_;
  std::vector<std::size_t> labels_;
  std::vector<double> losses_;
  double objective_ = 0.0;
  std::size_t empty_repairs_ = 0;
};

/// K-Means++ seeding followed by Lloyd, independently for every class, in class
/// order on one generator. `losses` may be empty, in which case every sample
/// starts at 1.0.
ClusterIndex build_index(const Matrix& reps, std::span<const std::size_t> labels, std::size_t class_count,
                         std::size_t k, std::span<const double> losses, Rng& rng,
                         const ClusteringOptions& options = {});

/// Re-clusters from scratch in a new representation space. The loss table is
/// carried over per sample.
ClusterIndex refresh(const ClusterIndex& index, const Matrix& new_reps, Rng& rng,
                     const ClusteringOptions& options = {});

class InsufficientImpostersError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SeedMode { loss, uniform };

/// M clusters x B samples. cluster_ids[0] is the seed; samples are row-major
/// by cluster slot.
struct NeighborhoodBatch {
  std::vector<std::size_t> cluster_ids;
  std::size_t per_cluster = 0;
  std::vector<std::size_t> samples;
  std::size_t clusters_with_replacement = 0;

  std::size_t sample(std::size_t slot, std::size_t b) const { return samples[slot * per_cluster + b]; }
};

/// Seed cluster drawn with probability proportional to its mean loss (uniform
/// in SeedMode::uniform or when all mean losses are zero), then the M - 1
/// clusters of a different class whose centroids are nearest to the seed's,
/// ties to the lower id. B samples per cluster, without replacement unless the
/// cluster has fewer than B members.
NeighborhoodBatch sample_neighborhood(const ClusterIndex& index, std::size_t m, std::size_t b, Rng& rng,
                                      SeedMode mode = SeedMode::loss);

/// Fraction of samples whose cluster's majority ground-truth group equals their
/// own group. Majority ties go to the lower group id.
double cluster_purity(std::span<const std::size_t> cluster_of, std::span<const std::size_t> truth);

}  // namespace selfpaced
