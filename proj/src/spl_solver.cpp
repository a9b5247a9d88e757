#include "selfpaced/spl_solver.hpp"

#include <algorithm>
#include <cmath>

#include "selfpaced/numerics.hpp"

namespace selfpaced {

std::size_t WeightVector::selected_count() const {
  std::size_t n = 0;
  for (unsigned char w : weights) n += w;
  return n;
}

std::vector<std::size_t> WeightVector::selected_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (weights[i]) out.push_back(i);
  return out;
}

double selection_threshold(double lambda, double gamma, std::size_t rank) {
  const double i = static_cast<double>(rank);
  return lambda + gamma / (std::sqrt(i) + std::sqrt(i - 1.0));
}

WeightVector solve_weights(const ClusterLosses& clusters, const PaceSchedule& pace, std::size_t sample_count) {
  WeightVector out;
  out.weights.assign(sample_count, 0);
  out.selected_per_cluster.assign(clusters.size(), 0);
  std::vector<SampleLoss> sorted;
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    sorted = clusters[k];
    std::sort(sorted.begin(), sorted.end(), [](const SampleLoss& a, const SampleLoss& b) {
      return a.loss < b.loss || (a.loss == b.loss && a.sample < b.sample);
    });
    for (std::size_t r = 0; r < sorted.size(); ++r) {
      const auto& s = sorted[r];
      if (s.sample >= sample_count) throw std::out_of_range("solve_weights: sample id beyond sample_count");
      if (s.loss < selection_threshold(pace.lambda, pace.gamma, r + 1)) {
        out.weights[s.sample] = 1;
        ++out.selected_per_cluster[k];
      }
    }
  }
  return out;
}

double self_paced_objective(const ClusterLosses& clusters, std::span<const unsigned char> weights, double lambda,
                            double gamma) {
  double total = 0.0;
  for (const auto& cluster : clusters) {
    double count = 0.0;
    for (const auto& s : cluster) {
      if (!weights[s.sample]) continue;
      total += s.loss - lambda;
      count += 1.0;
    }
    total -= gamma * std::sqrt(count);
  }
  return total;
}

PaceSchedule update_pace(const PaceSchedule& pace) {
  PaceSchedule next = pace;
  if (pace.update_mode == PaceUpdate::growth) {
    next.lambda = pace.lambda * (1.0 + pace.beta1);
    next.gamma = pace.gamma * (1.0 + pace.beta2);
  } else {
    next.lambda = pace.beta1 * pace.lambda;
    next.gamma = pace.beta2 * pace.lambda;
  }
  return next;
}

PaceSchedule init_pace(std::span<const double> losses, double percentile_q, double gamma_ratio, double beta1,
                       double beta2, PaceUpdate mode) {
  PaceSchedule pace;
  pace.lambda = percentile(losses, percentile_q);
  pace.gamma = gamma_ratio * pace.lambda;
  pace.beta1 = beta1;
  pace.beta2 = beta2;
  pace.update_mode = mode;
  return pace;
}

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::random: return "random";
    case SamplerKind::spl: return "spl";
    case SamplerKind::spld: return "spld";
    case SamplerKind::spl_advise: return "spl-advise";
  }
  return "unknown";
}

std::optional<SamplerKind> parse_sampler(std::string_view name) {
  for (auto kind : {SamplerKind::random, SamplerKind::spl, SamplerKind::spld, SamplerKind::spl_advise})
    if (to_string(kind) == name) return kind;
  return std::nullopt;
}

std::vector<std::size_t> selection_pool(const WeightVector& w) {
  auto pool = w.selected_indices();
  if (pool.empty()) throw PaceTooStrictError("no sample passed the self-paced threshold");
  return pool;
}

BatchSelector::BatchSelector(std::vector<std::size_t> pool, std::size_t batch_size)
    : pool_(std::move(pool)), batch_size_(batch_size) {
  if (pool_.empty()) throw PaceTooStrictError("BatchSelector: empty pool");
  if (batch_size_ == 0) throw std::invalid_argument("BatchSelector: batch_size must be >= 1");
}

std::size_t BatchSelector::batches_per_epoch() const { return (pool_.size() + batch_size_ - 1) / batch_size_; }

std::vector<std::size_t> BatchSelector::next(Rng& rng) {
  if (cursor_ == 0) rng.shuffle(std::span(pool_));
  const std::size_t end = std::min(cursor_ + batch_size_, pool_.size());
  std::vector<std::size_t> batch(pool_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 pool_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end == pool_.size() ? 0 : end;
  return batch;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::vector<std::size_t> pool, std::size_t batch_size, Rng& rng) {
  BatchSelector selector(std::move(pool), batch_size);
  std::vector<std::vector<std::size_t>> out;
  do {
    out.push_back(selector.next(rng));
  } while (!selector.at_epoch_start());
  return out;
}

ClusterIndex spld_raw_clusters(const Dataset& train, std::size_t k, Rng& rng, const ClusteringOptions& options) {
  return build_index(train.features, train.labels, train.class_count, k, {}, rng, options);
}

ClusterLosses group_losses(const ClusterIndex& index, std::span<const double> losses) {
  if (losses.size() != index.sample_count()) {
    throw DimensionError("group_losses: " + std::to_string(losses.size()) + " losses for " +
                         std::to_string(index.sample_count()) + " indexed samples");
  }
  ClusterLosses out(index.cluster_count());
  for (std::size_t c = 0; c < index.cluster_count(); ++c)
    for (std::size_t s : index.cluster(c).members) out[c].push_back({s, losses[s]});
  return out;
}

ClusterLosses single_group_losses(std::span<const double> losses) {
  ClusterLosses out(1);
  out[0].reserve(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) out[0].push_back({i, losses[i]});
  return out;
}

}  // namespace selfpaced
