#include "selfpaced/cluster_index.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string_view>
#include <utility>

#include "json.hpp"
#include "selfpaced/kmeans.hpp"
#include "selfpaced/log.hpp"
#include "selfpaced/numerics.hpp"

namespace selfpaced {

Matrix ClusterIndex::centroids() const {
  const std::size_t dim = clusters_.empty() ? 0 : clusters_.front().centroid.size();
  Matrix out(clusters_.size(), dim);
  for (std::size_t c = 0; c < clusters_.size(); ++c)
    std::copy(clusters_[c].centroid.begin(), clusters_[c].centroid.end(), out.row(c).begin());
  return out;
}

void ClusterIndex::refresh_mean(std::size_t cluster_id) {
  auto& cl = clusters_[cluster_id];
  if (cl.members.empty()) {
    cl.mean_loss = 0.0;
    return;
  }
  double acc = 0.0;
  for (std::size_t s : cl.members) acc += losses_[s];
  cl.mean_loss = acc / static_cast<double>(cl.members.size());
}

void ClusterIndex::record_losses(std::span<const std::size_t> samples, std::span<const double> losses) {
  if (samples.size() != losses.size()) {
    throw DimensionError("record_losses: " + std::to_string(samples.size()) + " samples, " +
                         std::to_string(losses.size()) + " losses");
  }
  std::vector<std::size_t> touched;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    losses_.at(samples[i]) = losses[i];
    touched.push_back(cluster_of_[samples[i]]);
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  for (std::size_t c : touched) refresh_mean(c);
}

std::uint64_t ClusterIndex::checksum() const {
  auto bytes = [](const auto& vec) {
    return std::string_view(reinterpret_cast<const char*>(vec.data()), vec.size() * sizeof(vec[0]));
  };
  std::uint64_t h = fnv1a64(bytes(cluster_of_));
  h = fnv1a64(bytes(losses_), h);
  for (const auto& cl : clusters_) h = fnv1a64(bytes(cl.centroid), h);
  return h;
}

std::string ClusterIndex::to_json() const {
  nlohmann::json doc;
  doc["class_count"] = class_count_;
  doc["clusters_per_class"] = clusters_per_class_;
  doc["objective"] = objective_;
  auto& arr = doc["clusters"] = nlohmann::json::array();
  for (std::size_t c = 0; c < clusters_.size(); ++c) {
    const auto& cl = clusters_[c];
    arr.push_back({{"id", c},
                   {"class", cl.class_id},
                   {"members", cl.members.size()},
                   {"mean_loss", cl.mean_loss},
                   {"centroid", cl.centroid}});
  }
  return doc.dump(2);
}

ClusterIndex build_index(const Matrix& reps, std::span<const std::size_t> labels, std::size_t class_count,
                         std::size_t k, std::span<const double> losses, Rng& rng,
                         const ClusteringOptions& options) {
  if (k == 0) throw std::invalid_argument("build_index: K must be >= 1");
  if (labels.size() != reps.rows()) {
    throw DimensionError("build_index: " + std::to_string(labels.size()) + " labels for representations " +
                         reps.shape());
  }
  if (!losses.empty() && losses.size() != reps.rows()) {
    throw DimensionError("build_index: " + std::to_string(losses.size()) + " losses for " +
                         std::to_string(reps.rows()) + " samples");
  }

  std::vector<std::vector<std::size_t>> by_class(class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_count) throw std::invalid_argument("build_index: label out of range");
    by_class[labels[i]].push_back(i);
  }

  ClusterIndex index;
  index.class_count_ = class_count;
  index.clusters_per_class_ = k;
  index.cluster_of_.assign(reps.rows(), 0);
  index.labels_.assign(labels.begin(), labels.end());
  if (losses.empty()) {
    index.losses_.assign(reps.rows(), 1.0);
  } else {
    index.losses_.assign(losses.begin(), losses.end());
  }

  for (std::size_t c = 0; c < class_count; ++c) {
    const auto& members = by_class[c];
    if (members.empty()) throw std::invalid_argument("build_index: class " + std::to_string(c) + " has no samples");
    if (members.size() < k) {
      throw std::invalid_argument("build_index: class " + std::to_string(c) + " has " +
                                  std::to_string(members.size()) + " samples for K = " + std::to_string(k));
    }
    const Matrix points = gather_rows(reps, members);
    const LloydResult fit = lloyd(points, kmeanspp_init(points, k, rng), options.max_iters, options.tol);
    index.objective_ += fit.objective();
    index.empty_repairs_ += fit.empty_repairs;

    const std::size_t base = index.clusters_.size();
    for (std::size_t j = 0; j < k; ++j) {
      Cluster cl;
      cl.class_id = c;
      auto row = fit.centers.row(j);
      cl.centroid.assign(row.begin(), row.end());
      index.clusters_.push_back(std::move(cl));
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      const std::size_t id = base + fit.assignments[i];
      index.cluster_of_[members[i]] = id;
      index.clusters_[id].members.push_back(members[i]);
    }
  }
  for (std::size_t id = 0; id < index.clusters_.size(); ++id) index.refresh_mean(id);
  return index;
}

ClusterIndex refresh(const ClusterIndex& index, const Matrix& new_reps, Rng& rng, const ClusteringOptions& options) {
  if (new_reps.rows() != index.sample_count()) {
    throw DimensionError("refresh: " + new_reps.shape() + " representations for " +
                         std::to_string(index.sample_count()) + " indexed samples");
  }
  return build_index(new_reps, index.labels(), index.class_count(), index.clusters_per_class(),
                     index.sample_losses(), rng, options);
}

NeighborhoodBatch sample_neighborhood(const ClusterIndex& index, std::size_t m, std::size_t b, Rng& rng,
                                      SeedMode mode) {
  const auto& clusters = index.clusters();
  if (m < 1 || b < 1) throw std::invalid_argument("sample_neighborhood: M and B must be >= 1");
  if (m > clusters.size()) {
    throw InsufficientImpostersError("sample_neighborhood: M = " + std::to_string(m) + " exceeds " +
                                     std::to_string(clusters.size()) + " clusters");
  }

  std::vector<double> weights(clusters.size(), 1.0);
  if (mode == SeedMode::loss) {
    double total = 0.0;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      weights[c] = clusters[c].members.empty() ? 0.0 : clusters[c].mean_loss;
      total += weights[c];
    }
    if (!(total > 0.0)) {
      for (std::size_t c = 0; c < clusters.size(); ++c) weights[c] = clusters[c].members.empty() ? 0.0 : 1.0;
    }
  }
  const std::size_t seed = rng.discrete(weights);
  const auto& seed_cl = clusters[seed];

  std::vector<std::pair<double, std::size_t>> candidates;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    if (clusters[c].class_id == seed_cl.class_id || clusters[c].members.empty()) continue;
    candidates.emplace_back(sq_dist(clusters[c].centroid, seed_cl.centroid), c);
  }
  if (candidates.size() + 1 < m) {
    throw InsufficientImpostersError("sample_neighborhood: seed cluster " + std::to_string(seed) + " has " +
                                     std::to_string(candidates.size()) + " imposter clusters, need " +
                                     std::to_string(m - 1));
  }
  std::sort(candidates.begin(), candidates.end());

  NeighborhoodBatch batch;
  batch.per_cluster = b;
  batch.cluster_ids.push_back(seed);
  for (std::size_t i = 0; i + 1 < m; ++i) batch.cluster_ids.push_back(candidates[i].second);

  batch.samples.reserve(m * b);
  for (std::size_t id : batch.cluster_ids) {
    const auto& members = clusters[id].members;
    if (members.size() < b) {
      ++batch.clusters_with_replacement;
      for (std::size_t j = 0; j < b; ++j) batch.samples.push_back(members[rng.uniform_index(members.size())]);
      continue;
    }
    std::vector<std::size_t> pool = members;
    for (std::size_t j = 0; j < b; ++j) {
      std::swap(pool[j], pool[j + rng.uniform_index(pool.size() - j)]);
      batch.samples.push_back(pool[j]);
    }
  }
  if (batch.clusters_with_replacement > 0) {
    log_warning_once("sample_neighborhood",
                     "cluster smaller than B = " + std::to_string(b) + "; sampling with replacement");
  }
  return batch;
}

double cluster_purity(std::span<const std::size_t> cluster_of, std::span<const std::size_t> truth) {
  if (cluster_of.size() != truth.size()) throw DimensionError("cluster_purity: length mismatch");
  if (cluster_of.empty()) return 1.0;
  std::map<std::size_t, std::map<std::size_t, std::size_t>> tally;
  for (std::size_t i = 0; i < cluster_of.size(); ++i) ++tally[cluster_of[i]][truth[i]];
  std::map<std::size_t, std::size_t> majority;
  for (const auto& [cl, counts] : tally) {
    std::size_t best = counts.begin()->first;
    for (const auto& [group, count] : counts)
      if (count > counts.at(best)) best = group;
    majority[cl] = best;
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < cluster_of.size(); ++i) hits += majority[cluster_of[i]] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(cluster_of.size());
}

}  // namespace selfpaced
