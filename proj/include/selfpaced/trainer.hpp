#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "selfpaced/cluster_index.hpp"
#include "selfpaced/dataset.hpp"
#include "selfpaced/magnet.hpp"
#include "selfpaced/mlp.hpp"
#include "selfpaced/optim.hpp"
#include "selfpaced/spl_solver.hpp"

namespace selfpaced {

struct DatasetConfig {
  std::string kind = "blobs";  // blobs | idx | csv
  BlobsSpec blobs;
  std::string images_path;
  std::string labels_path;
  std::string csv_path;
  std::string label_column = "label";
  double test_fraction = 0.2;
  bool standardize = true;
  bool hflip = false;
};

struct ClusterConfig {
  std::size_t k = 3;  // clusters per class
  std::size_t max_iters = 100;
  double tol = 1e-6;
};

struct EmbeddingConfig {
  std::vector<std::size_t> hidden{32};
  std::size_t dim = 8;
  std::size_t iterations = 1000;        // E
  std::size_t refresh_interval = 100;   // R
  std::size_t warmup_iterations = 0;    // run before the first student iteration
  std::size_t clusters_per_batch = 8;   // M
  std::size_t samples_per_cluster = 8;  // B
  double alpha = 1.0;
  VarianceMode variance_mode = VarianceMode::variance;
  DenominatorScope scope = DenominatorScope::batch;
  SeedMode seed_mode = SeedMode::loss;
  AdamConfig adam;
};

struct StudentConfig {
  std::vector<std::size_t> hidden{32};
  std::size_t outer_iterations = 30;  // E'
  std::size_t epochs_per_iteration = 1;
  std::size_t batch_size = 64;
  SgdConfig sgd;
  std::vector<std::size_t> lr_milestones;  // outer iterations
  double lr_drop = 0.1;
};

struct PaceConfig {
  double beta1 = 0.1;
  double beta2 = 0.1;
  double init_percentile = 50.0;
  double gamma_ratio = 0.5;
  PaceUpdate update_mode = PaceUpdate::growth;
};

struct TrainConfig {
  DatasetConfig dataset;
  ClusterConfig cluster;
  EmbeddingConfig embedding;
  StudentConfig student;
  PaceConfig pace;
  SamplerKind sampler = SamplerKind::spl_advise;
  std::vector<SamplerKind> compare_samplers{SamplerKind::random, SamplerKind::spl, SamplerKind::spld,
                                            SamplerKind::spl_advise};
  std::uint64_t seed = 1;
  std::size_t runs = 5;
  bool parallel = false;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// Seed splitting. Every stream derives from TrainConfig::seed:
//   dataset      derive_seed(seed, "dataset")
//   split        derive_seed(seed, "split")
//   run r        derive_seed(seed, "run", r)
// and within a run:
//   student init derive_seed(run, "student-init")   (shared by all samplers)
//   batches      derive_seed(run, "student-batches")
//   embedding    derive_seed(run, "embedding-init"), "embedding-steps", "embedding-cluster"
//   SPLD groups  derive_seed(run, "spld-clusters")
std::uint64_t run_seed(const TrainConfig& config, std::size_t run);

struct PreparedData {
  Dataset full;
  Split split;
  Dataset train;
  Dataset test;
};

PreparedData prepare_data(const TrainConfig& config);

/// Embedding parameters and the cluster index built from them, published
/// together. `checksum` is computed at publication.
struct EmbeddingSnapshot {
  std::size_t version = 0;
  std::size_t step = 0;
  Mlp model;
  ClusterIndex index;
  double magnet_loss = 0.0;  // mean step loss since the previous snapshot; NaN for the first
  std::uint64_t checksum = 0;

  std::uint64_t compute_checksum() const;
};

using SnapshotPtr = std::shared_ptr<const EmbeddingSnapshot>;

class TornSnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Single-slot latest-value channel. Readers never block once a value exists.
class SnapshotChannel {
 public:
  void publish(SnapshotPtr snapshot);
  SnapshotPtr latest() const;
  SnapshotPtr wait_first() const;
  void close();
  std::size_t published() const;

 private:
  mutable std::mutex mutex_;
  mutable std::condition_variable ready_;
  SnapshotPtr value_;
  std::size_t published_ = 0;
  bool closed_ = false;
};

/// Embedding network training with a periodically refreshed cluster index.
class EmbeddingTrainer {
 public:
  using Sink = std::function<void(SnapshotPtr)>;

  EmbeddingTrainer(const TrainConfig& config, const Dataset& train, std::uint64_t seed, Sink sink = {});

  /// Extracts initial representations, clusters them and publishes snapshot 0.
  SnapshotPtr initialize();

  /// One magnet step; every refresh_interval steps re-embeds all samples,
  /// re-clusters and publishes. No-op once all iterations are done.
  void step();
  void run_until(std::size_t target_step);
  void run_all();

  std::size_t steps_done() const { return steps_; }
  std::size_t total_steps() const { return config_.embedding.iterations; }
  SnapshotPtr latest() const { return latest_; }
  const Mlp& model() const { return model_; }
  const Mlp& initial_model() const { return initial_model_; }
  const std::vector<double>& loss_trace() const { return trace_; }
  std::size_t degenerate_batches() const { return degenerate_; }
  std::size_t snapshots_published() const { return published_; }

 private:
  void publish();
  Matrix embed_all() const;

  TrainConfig config_;
  const Dataset& train_;
  Sink sink_;
  Mlp model_;
  Mlp initial_model_;
  AdamState optimizer_;
  Rng step_rng_;
  Rng cluster_rng_;
  std::optional<ClusterIndex> index_;
  SnapshotPtr latest_;
  std::vector<double> trace_;
  std::size_t steps_ = 0;
  std::size_t trace_mark_ = 0;
  std::size_t degenerate_ = 0;
  std::size_t published_ = 0;
};

/// Runs all E steps; returns every published snapshot in order.
std::vector<SnapshotPtr> train_embedding_loop(const TrainConfig& config, const Dataset& train, std::uint64_t seed);

struct IterationRecord {
  std::size_t outer_iter = 0;
  std::size_t minibatch_updates = 0;  // cumulative
  double train_acc = 0.0;
  double test_acc = 0.0;
  double mean_ce = 0.0;
  std::size_t selected_count = 0;
  double lambda = 0.0;
  double gamma = 0.0;
  double magnet_loss = 0.0;
  double wallclock_ms = 0.0;
  std::vector<std::size_t> selected_per_cluster;
  std::size_t snapshot_version = 0;
};

struct RunMetrics {
  std::string sampler;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::vector<IterationRecord> iterations;  // [0] is the untrained model
  std::vector<double> magnet_trace;
  std::size_t fallback_iterations = 0;  // all-zero selections recovered
  std::size_t degenerate_batches = 0;
  std::size_t snapshots_seen = 0;
};

/// Supplies the snapshot the student reads at the start of each outer iteration.
class SnapshotSource {
 public:
  virtual ~SnapshotSource() = default;
  virtual SnapshotPtr before_iteration(std::size_t outer_iter) = 0;
};

/// Advances an EmbeddingTrainer on the calling thread so that E steps are
/// spread evenly over E' student iterations after the warm-up.
class InterleavedSource : public SnapshotSource {
 public:
  InterleavedSource(EmbeddingTrainer& trainer, std::size_t outer_iterations, std::size_t warmup);
  SnapshotPtr before_iteration(std::size_t outer_iter) override;

 private:
  EmbeddingTrainer& trainer_;
  std::size_t outer_iterations_;
  std::size_t warmup_;
};

class ChannelSource : public SnapshotSource {
 public:
  explicit ChannelSource(const SnapshotChannel& channel) : channel_(channel) {}
  SnapshotPtr before_iteration(std::size_t) override { return channel_.wait_first(); }

 private:
  const SnapshotChannel& channel_;
};

struct StudentResult {
  Mlp model;
  RunMetrics metrics;
};

/// Self-paced student training. `source` is required for spl-advise only.
/// `spld_groups` is required for spld only.
StudentResult train_student_loop(const TrainConfig& config, SamplerKind sampler, const Dataset& train,
                                 const Dataset& test, std::uint64_t seed, SnapshotSource* source,
                                 const ClusterIndex* spld_groups = nullptr);

struct RunResult {
  RunMetrics metrics;
  Mlp student;
  std::optional<Mlp> embedding_initial;
  std::optional<Mlp> embedding_final;
  std::vector<double> timings_ms;
};

/// One sampler, one seed: wires embedding and student per config.parallel.
RunResult run_single(const TrainConfig& config, SamplerKind sampler, std::size_t run, const PreparedData& data);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> values;
};

struct CurvePoint {
  std::size_t outer_iter = 0;
  double minibatch_updates = 0.0;
  double test_acc_mean = 0.0;
  double test_acc_std = 0.0;
  double train_acc_mean = 0.0;
};

struct SamplerSummary {
  std::string sampler;
  MeanStd final_test_acc;
  MeanStd final_train_acc;
  MeanStd total_updates;
  std::vector<CurvePoint> curve;
};

struct ExperimentResult {
  std::vector<RunResult> runs;
  std::vector<SamplerSummary> summaries;
};

std::vector<SamplerSummary> summarize(const std::vector<RunResult>& runs);

/// First curve point whose mean test accuracy reaches `target`; nullopt if none.
std::optional<double> updates_to_reach(const std::vector<CurvePoint>& curve, double target);

/// Every requested sampler for config.runs seeds. With an output directory,
/// each run's files are written as soon as it finishes, and the summary is
/// written even when a later run fails.
ExperimentResult run_experiment(const TrainConfig& config, const std::vector<SamplerKind>& samplers,
                                const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace selfpaced
