#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "selfpaced/cluster_index.hpp"
#include "selfpaced/dataset.hpp"
#include "selfpaced/rng.hpp"

namespace selfpaced {

/// Binary per-sample selection, with per-cluster selected counts.
struct WeightVector {
  std::vector<unsigned char> weights;
  std::vector<std::size_t> selected_per_cluster;

  std::size_t selected_count() const;
  std::vector<std::size_t> selected_indices() const;
};

struct SampleLoss {
  std::size_t sample = 0;
  double loss = 0.0;
};

using ClusterLosses = std::vector<std::vector<SampleLoss>>;

enum class PaceUpdate { growth, as_written };

/// Pacing parameters. lambda admits easy samples; gamma admits additional
/// samples from clusters that have few selections so far.
struct PaceSchedule {
  double lambda = 1.0;
  double gamma = 0.0;
  double beta1 = 0.1;
  double beta2 = 0.1;
  PaceUpdate update_mode = PaceUpdate::growth;
};

/// Rank-i threshold within a cluster (i starts at 1):
///   lambda + gamma / (sqrt(i) + sqrt(i - 1))
double selection_threshold(double lambda, double gamma, std::size_t rank);

/// Exact minimiser over W in {0,1}^N of
///   sum_i W_i L_i - lambda * sum_i W_i - gamma * sum_k ||W^k||_2.
/// Each cluster is sorted by (loss, sample id); the rank-i sample is selected
/// iff its loss is strictly below selection_threshold(lambda, gamma, i).
WeightVector solve_weights(const ClusterLosses& clusters, const PaceSchedule& pace, std::size_t sample_count);

/// The minimised objective for a given selection.
double self_paced_objective(const ClusterLosses& clusters, std::span<const unsigned char> weights, double lambda,
                            double gamma);

/// growth:     lambda *= 1 + beta1, gamma *= 1 + beta2
/// as_written: lambda  = beta1 * lambda, gamma = beta2 * lambda (pre-update lambda)
PaceSchedule update_pace(const PaceSchedule& pace);

/// lambda = q-th percentile of `losses`; gamma = gamma_ratio * lambda.
PaceSchedule init_pace(std::span<const double> losses, double percentile_q, double gamma_ratio, double beta1,
                       double beta2, PaceUpdate mode);

enum class SamplerKind { random, spl, spld, spl_advise };

std::string_view to_string(SamplerKind kind);
std::optional<SamplerKind> parse_sampler(std::string_view name);

class PaceTooStrictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Samples with W_i = 1, ascending. Throws PaceTooStrictError when none are.
std::vector<std::size_t> selection_pool(const WeightVector& w);

/// Walks a pool in epochs: each epoch is a fresh uniform shuffle, cut into
/// batches of batch_size; the last batch of an epoch holds the remainder.
class BatchSelector {
 public:
  BatchSelector(std::vector<std::size_t> pool, std::size_t batch_size);

  std::vector<std::size_t> next(Rng& rng);
  bool at_epoch_start() const { return cursor_ == 0; }
  std::size_t batches_per_epoch() const;
  std::size_t pool_size() const { return pool_.size(); }

 private:
  std::vector<std::size_t> pool_;
  std::size_t batch_size_;
  std::size_t cursor_ = 0;
};

/// All batches of one epoch over the pool.
std::vector<std::vector<std::size_t>> epoch_batches(std::vector<std::size_t> pool, std::size_t batch_size, Rng& rng);

/// Fixed raw-feature grouping for the SPLD baseline: per-class K-Means++ and
/// Lloyd on the input features, computed once and never refreshed.
ClusterIndex spld_raw_clusters(const Dataset& train, std::size_t k, Rng& rng, const ClusteringOptions& options = {});

/// Per-cluster loss lists for the solver.
ClusterLosses group_losses(const ClusterIndex& index, std::span<const double> losses);
/// Everything in one cluster (plain SPL).
ClusterLosses single_group_losses(std::span<const double> losses);

}  // namespace selfpaced
