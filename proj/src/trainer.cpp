#include "selfpaced/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "selfpaced/checkpoint.hpp"
#include "selfpaced/log.hpp"
#include "selfpaced/metrics.hpp"
#include "selfpaced/numerics.hpp"

namespace selfpaced {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw std::invalid_argument("config: " + field + " " + what);
}

std::size_t class_count_of(const TrainConfig& c) {
  return c.dataset.kind == "blobs" ? c.dataset.blobs.classes : 0;
}

std::vector<std::size_t> sizes_of(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

void TrainConfig::validate() const {
  const auto& d = dataset;
  require(d.kind == "blobs" || d.kind == "idx" || d.kind == "csv", "dataset.kind", "must be blobs, idx or csv");
  if (d.kind == "blobs") {
    require(d.blobs.classes >= 2, "dataset.classes", "must be >= 2");
    require(d.blobs.subclusters_per_class >= 1, "dataset.subclusters_per_class", "must be >= 1");
    require(d.blobs.samples_per_subcluster >= 1, "dataset.samples_per_subcluster", "must be >= 1");
    require(d.blobs.dim >= 1, "dataset.dim", "must be >= 1");
    require(d.blobs.cluster_std >= 0.0, "dataset.cluster_std", "must be >= 0");
  } else if (d.kind == "idx") {
    require(!d.images_path.empty(), "dataset.images_path", "is required for idx data");
    require(!d.labels_path.empty(), "dataset.labels_path", "is required for idx data");
  } else {
    require(!d.csv_path.empty(), "dataset.csv_path", "is required for csv data");
  }
  require(d.test_fraction > 0.0 && d.test_fraction < 1.0, "dataset.test_fraction", "must lie in (0, 1)");

  require(cluster.k >= 1, "cluster.k", "must be >= 1");
  require(cluster.max_iters >= 1, "cluster.max_iters", "must be >= 1");
  require(cluster.tol >= 0.0, "cluster.tol", "must be >= 0");

  const auto& e = embedding;
  require(e.dim >= 1, "embedding.dim", "must be >= 1");
  for (std::size_t h : e.hidden) require(h >= 1, "embedding.hidden", "entries must be >= 1");
  require(e.refresh_interval >= 1, "embedding.refresh_interval", "must be >= 1");
  require(e.warmup_iterations <= e.iterations, "embedding.warmup_iterations", "must not exceed embedding.iterations");
  require(e.clusters_per_batch >= 2, "embedding.clusters_per_batch", "must be >= 2");
  require(e.samples_per_cluster >= 2, "embedding.samples_per_cluster", "must be >= 2");
  require(e.alpha >= 0.0, "embedding.alpha", "must be >= 0");
  require(e.adam.learning_rate > 0.0, "embedding.learning_rate", "must be > 0");
  if (const std::size_t classes = class_count_of(*this); classes > 0) {
    require((classes - 1) * cluster.k >= e.clusters_per_batch - 1, "embedding.clusters_per_batch",
            "needs M - 1 imposter clusters of a different class; have " + std::to_string((classes - 1) * cluster.k));
  }

  const auto& s = student;
  for (std::size_t h : s.hidden) require(h >= 1, "student.hidden", "entries must be >= 1");
  require(s.outer_iterations >= 1, "student.outer_iterations", "must be >= 1");
  require(s.epochs_per_iteration >= 1, "student.epochs_per_iteration", "must be >= 1");
  require(s.batch_size >= 1, "student.batch_size", "must be >= 1");
  require(s.sgd.learning_rate > 0.0, "student.learning_rate", "must be > 0");
  require(s.sgd.momentum >= 0.0 && s.sgd.momentum < 1.0, "student.momentum", "must lie in [0, 1)");
  require(s.lr_drop > 0.0, "student.lr_drop", "must be > 0");

  require(pace.init_percentile >= 0.0 && pace.init_percentile <= 100.0, "pace.init_percentile",
          "must lie in [0, 100]");
  require(pace.beta1 >= 0.0 && pace.beta2 >= 0.0, "pace.beta1/beta2", "must be >= 0");
  require(pace.gamma_ratio >= 0.0, "pace.gamma_ratio", "must be >= 0");

  require(runs >= 1, "experiment.runs", "must be >= 1");
  require(!compare_samplers.empty(), "experiment.compare", "must list at least one sampler");
}

std::uint64_t run_seed(const TrainConfig& config, std::size_t run) { return derive_seed(config.seed, "run", run); }

PreparedData prepare_data(const TrainConfig& config) {
  PreparedData out;
  const auto& d = config.dataset;
  if (d.kind == "blobs") {
    Rng rng(derive_seed(config.seed, "dataset"));
    out.full = gen_gaussian_blobs(d.blobs, rng);
  } else if (d.kind == "idx") {
    out.full = load_idx(d.images_path, d.labels_path);
  } else {
    out.full = load_csv(d.csv_path, d.label_column);
  }
  Rng split_rng(derive_seed(config.seed, "split"));
  out.split = split(out.full.size(), d.test_fraction, split_rng);
  if (d.standardize) out.full = standardize(out.full, out.split);
  out.train = out.full.subset(out.split.train);
  out.test = out.full.subset(out.split.test);
  const auto counts = out.train.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < config.cluster.k) {
      throw std::invalid_argument("class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                                  " training samples, fewer than cluster.k = " + std::to_string(config.cluster.k));
    }
  }
  return out;
}

std::uint64_t EmbeddingSnapshot::compute_checksum() const {
  std::uint64_t h = fnv1a64(std::to_string(version) + ":" + std::to_string(step));
  for (auto t : model.tensors()) {
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(t.data()), t.size_bytes()), h);
  }
  const std::uint64_t ix = index.checksum();
  return fnv1a64(std::string_view(reinterpret_cast<const char*>(&ix), sizeof(ix)), h);
}

void SnapshotChannel::publish(SnapshotPtr snapshot) {
  {
    std::lock_guard lock(mutex_);
    value_ = std::move(snapshot);
    ++published_;
  }
  ready_.notify_all();
}

SnapshotPtr SnapshotChannel::latest() const {
  std::lock_guard lock(mutex_);
  return value_;
}

SnapshotPtr SnapshotChannel::wait_first() const {
  std::unique_lock lock(mutex_);
  ready_.wait(lock, [&] { return value_ || closed_; });
  if (!value_) throw std::runtime_error("snapshot channel closed before the first snapshot");
  return value_;
}

void SnapshotChannel::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  ready_.notify_all();
}

std::size_t SnapshotChannel::published() const {
  std::lock_guard lock(mutex_);
  return published_;
}

EmbeddingTrainer::EmbeddingTrainer(const TrainConfig& config, const Dataset& train, std::uint64_t seed, Sink sink)
    : config_(config),
      train_(train),
      sink_(std::move(sink)),
      step_rng_(derive_seed(seed, "embedding-steps")),
      cluster_rng_(derive_seed(seed, "embedding-cluster")) {
  Rng init_rng(derive_seed(seed, "embedding-init"));
  model_ = init_mlp(sizes_of(train.dim(), config.embedding.hidden, config.embedding.dim), init_rng);
  initial_model_ = model_;
  optimizer_.config = config.embedding.adam;
}

Matrix EmbeddingTrainer::embed_all() const { return predict(model_, train_.features); }

SnapshotPtr EmbeddingTrainer::initialize() {
  if (latest_) return latest_;
  const ClusteringOptions opts{config_.cluster.max_iters, config_.cluster.tol};
  index_ = build_index(embed_all(), train_.labels, train_.class_count, config_.cluster.k, {}, cluster_rng_, opts);
  publish();
  return latest_;
}

void EmbeddingTrainer::step() {
  if (!latest_) initialize();
  if (steps_ >= total_steps()) return;
  const auto& e = config_.embedding;
  const MagnetStepConfig step_config{e.clusters_per_batch, e.samples_per_cluster, e.alpha,
                                     e.variance_mode,      e.scope,               e.seed_mode};
  const auto result = magnet_training_step(model_, optimizer_, train_.features, *index_, step_config, step_rng_);
  if (result.degenerate) {
    ++degenerate_;
  } else {
    trace_.push_back(result.loss);
  }
  ++steps_;
  if (steps_ % e.refresh_interval == 0) {
    const ClusteringOptions opts{config_.cluster.max_iters, config_.cluster.tol};
    index_ = refresh(*index_, embed_all(), cluster_rng_, opts);
    publish();
  }
}

void EmbeddingTrainer::run_until(std::size_t target_step) {
  target_step = std::min(target_step, total_steps());
  while (steps_ < target_step) step();
}

void EmbeddingTrainer::run_all() { run_until(total_steps()); }

void EmbeddingTrainer::publish() {
  auto snap = std::make_shared<EmbeddingSnapshot>();
  snap->version = published_;
  snap->step = steps_;
  snap->model = model_;
  snap->index = *index_;
  if (trace_.size() > trace_mark_) {
    double sum = 0.0;
    for (std::size_t i = trace_mark_; i < trace_.size(); ++i) sum += trace_[i];
    snap->magnet_loss = sum / static_cast<double>(trace_.size() - trace_mark_);
  } else {
    snap->magnet_loss = kNaN;
  }
  trace_mark_ = trace_.size();
  snap->checksum = snap->compute_checksum();
  latest_ = std::move(snap);
  ++published_;
  if (sink_) sink_(latest_);
}

std::vector<SnapshotPtr> train_embedding_loop(const TrainConfig& config, const Dataset& train, std::uint64_t seed) {
  std::vector<SnapshotPtr> out;
  EmbeddingTrainer trainer(config, train, seed, [&](SnapshotPtr s) { out.push_back(std::move(s)); });
  trainer.initialize();
  trainer.run_all();
  return out;
}

InterleavedSource::InterleavedSource(EmbeddingTrainer& trainer, std::size_t outer_iterations, std::size_t warmup)
    : trainer_(trainer), outer_iterations_(std::max<std::size_t>(outer_iterations, 1)), warmup_(warmup) {}

SnapshotPtr InterleavedSource::before_iteration(std::size_t outer_iter) {
  trainer_.initialize();
  // Iteration t (1-based) sees the embedding after warmup + (E - warmup) * (t - 1) / E' steps.
  const std::size_t total = trainer_.total_steps();
  const std::size_t span = total > warmup_ ? total - warmup_ : 0;
  const std::size_t t = outer_iter > 0 ? outer_iter - 1 : 0;
  trainer_.run_until(warmup_ + span * t / outer_iterations_);
  return trainer_.latest();
}

namespace {

struct Evaluation {
  double train_acc = 0.0;
  double test_acc = 0.0;
  double mean_ce = 0.0;
  std::vector<double> train_losses;
};

double acc_from(const Matrix& logits, std::span<const std::size_t> labels) {
  const auto pred = argmax_rows(logits);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i] ? 1 : 0;
  return pred.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(pred.size());
}

Evaluation evaluate(const Mlp& model, const Dataset& train, const Dataset& test) {
  Evaluation ev;
  const Matrix train_logits = predict(model, train.features);
  auto ce = ce_loss_per_sample(train_logits, train.labels);
  ev.train_losses = std::move(ce.losses);
  ev.mean_ce = mean(ev.train_losses);
  ev.train_acc = acc_from(train_logits, train.labels);
  ev.test_acc = acc_from(predict(model, test.features), test.labels);
  return ev;
}

Matrix assemble_batch(const Dataset& train, std::span<const std::size_t> batch, Rng& aug_rng, bool hflip) {
  Matrix x = gather_rows(train.features, batch);
  if (hflip && train.is_image()) {
    for (std::size_t r = 0; r < x.rows(); ++r)
      if (aug_rng.uniform() < 0.5) horizontal_flip(x.row(r), train.image_height, train.image_width);
  }
  return x;
}

void sgd_update(Mlp& model, SgdState& opt, const Matrix& x, std::span<const std::size_t> labels) {
  auto fwd = forward(model, x);
  auto ce = ce_loss_per_sample(fwd.output, labels);
  Matrix grad = std::move(ce.grad_logits);
  const double scale = 1.0 / static_cast<double>(x.rows());
  for (double& v : grad.values()) v *= scale;
  const auto back = backward(model, fwd.tape, grad);
  sgd_step(model, back.grads, opt);
}

// Smallest (loss, id) sample of every non-empty cluster.
WeightVector fallback_selection(const ClusterLosses& groups, std::size_t n) {
  WeightVector w;
  w.weights.assign(n, 0);
  w.selected_per_cluster.assign(groups.size(), 0);
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (groups[k].empty()) continue;
    const auto best = std::min_element(groups[k].begin(), groups[k].end(), [](const auto& a, const auto& b) {
      return a.loss < b.loss || (a.loss == b.loss && a.sample < b.sample);
    });
    w.weights[best->sample] = 1;
    w.selected_per_cluster[k] = 1;
  }
  return w;
}

}  // namespace

StudentResult train_student_loop(const TrainConfig& config, SamplerKind sampler, const Dataset& train,
                                 const Dataset& test, std::uint64_t seed, SnapshotSource* source,
                                 const ClusterIndex* spld_groups) {
  if (sampler == SamplerKind::spl_advise && !source)
    throw std::invalid_argument("train_student_loop: spl-advise needs a snapshot source");
  if (sampler == SamplerKind::spld && !spld_groups)
    throw std::invalid_argument("train_student_loop: spld needs a fixed grouping");

  const auto& sc = config.student;
  Rng init_rng(derive_seed(seed, "student-init"));
  Rng batch_rng(derive_seed(seed, "student-batches"));
  Rng aug_rng(derive_seed(seed, "student-augment"));

  StudentResult result;
  result.model = init_mlp(sizes_of(train.dim(), sc.hidden, train.class_count), init_rng);
  auto& metrics = result.metrics;
  metrics.sampler = std::string(to_string(sampler));
  metrics.seed = seed;

  SgdState opt{sc.sgd, {}};
  const std::size_t n = train.size();
  std::optional<PaceSchedule> pace;
  std::size_t updates = 0;
  std::size_t last_version = std::numeric_limits<std::size_t>::max();

  {
    const auto start = std::chrono::steady_clock::now();
    const auto ev = evaluate(result.model, train, test);
    IterationRecord r0;
    r0.train_acc = ev.train_acc;
    r0.test_acc = ev.test_acc;
    r0.mean_ce = ev.mean_ce;
    r0.lambda = r0.gamma = r0.magnet_loss = kNaN;
    r0.wallclock_ms = elapsed_ms(start);
    metrics.iterations.push_back(std::move(r0));
  }

  for (std::size_t t = 1; t <= sc.outer_iterations; ++t) {
    const auto start = std::chrono::steady_clock::now();
    IterationRecord rec;
    rec.outer_iter = t;
    rec.lambda = rec.gamma = rec.magnet_loss = kNaN;

    std::size_t drops = 0;
    for (std::size_t m : sc.lr_milestones) drops += m < t ? 1 : 0;
    opt.config.learning_rate = sc.sgd.learning_rate * std::pow(sc.lr_drop, static_cast<double>(drops));

    SnapshotPtr snap;
    if (sampler == SamplerKind::spl_advise) {
      snap = source->before_iteration(t);
      if (!snap) throw std::runtime_error("snapshot source returned no snapshot");
      if (snap->compute_checksum() != snap->checksum)
        throw TornSnapshotError("snapshot " + std::to_string(snap->version) + " failed its checksum");
      if (snap->index.sample_count() != n)
        throw DimensionError("snapshot index covers " + std::to_string(snap->index.sample_count()) +
                             " samples, training set has " + std::to_string(n));
      if (snap->version != last_version) ++metrics.snapshots_seen;
      last_version = snap->version;
      rec.snapshot_version = snap->version;
      rec.magnet_loss = snap->magnet_loss;
    }

    std::vector<std::size_t> pool;
    if (sampler == SamplerKind::random) {
      pool.resize(n);
      for (std::size_t i = 0; i < n; ++i) pool[i] = i;
      rec.selected_per_cluster = {n};
    } else {
      const auto losses = evaluate(result.model, train, test).train_losses;
      ClusterLosses groups;
      switch (sampler) {
        case SamplerKind::spl: groups = single_group_losses(losses); break;
        case SamplerKind::spld: groups = group_losses(*spld_groups, losses); break;
        default: groups = group_losses(snap->index, losses); break;
      }
      if (!pace) {
        const double ratio = sampler == SamplerKind::spl ? 0.0 : config.pace.gamma_ratio;
        pace = init_pace(losses, config.pace.init_percentile, ratio, config.pace.beta1, config.pace.beta2,
                         config.pace.update_mode);
      }
      auto w = solve_weights(groups, *pace, n);
      if (w.selected_count() == 0) {
        log_warning_once("all-zero-selection", "no sample passed the pace thresholds; taking the easiest per cluster");
        ++metrics.fallback_iterations;
        w = fallback_selection(groups, n);
      }
      pool = selection_pool(w);
      rec.selected_per_cluster = w.selected_per_cluster;
      rec.lambda = pace->lambda;
      rec.gamma = pace->gamma;
    }
    rec.selected_count = pool.size();

    BatchSelector selector(std::move(pool), sc.batch_size);
    const std::size_t per_epoch = selector.batches_per_epoch();
    for (std::size_t epoch = 0; epoch < sc.epochs_per_iteration; ++epoch) {
      for (std::size_t b = 0; b < per_epoch; ++b) {
        const auto batch = selector.next(batch_rng);
        std::vector<std::size_t> labels(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) labels[i] = train.labels[batch[i]];
        sgd_update(result.model, opt, assemble_batch(train, batch, aug_rng, config.dataset.hflip), labels);
        ++updates;
      }
    }
    if (!result.model.all_finite()) throw std::runtime_error("student parameters became non-finite");

    const auto ev = evaluate(result.model, train, test);
    rec.minibatch_updates = updates;
    rec.train_acc = ev.train_acc;
    rec.test_acc = ev.test_acc;
    rec.mean_ce = ev.mean_ce;
    rec.wallclock_ms = elapsed_ms(start);
    metrics.iterations.push_back(std::move(rec));

    if (pace) pace = update_pace(*pace);
  }
  return result;
}

RunResult run_single(const TrainConfig& config, SamplerKind sampler, std::size_t run, const PreparedData& data) {
  const std::uint64_t seed = run_seed(config, run);
  const ClusteringOptions opts{config.cluster.max_iters, config.cluster.tol};
  RunResult out;

  StudentResult student;
  if (sampler == SamplerKind::random || sampler == SamplerKind::spl) {
    student = train_student_loop(config, sampler, data.train, data.test, seed, nullptr);
  } else if (sampler == SamplerKind::spld) {
    Rng rng(derive_seed(seed, "spld-clusters"));
    const auto groups = spld_raw_clusters(data.train, config.cluster.k, rng, opts);
    student = train_student_loop(config, sampler, data.train, data.test, seed, nullptr, &groups);
  } else if (!config.parallel) {
    EmbeddingTrainer embedding(config, data.train, seed);
    InterleavedSource source(embedding, config.student.outer_iterations, config.embedding.warmup_iterations);
    student = train_student_loop(config, sampler, data.train, data.test, seed, &source);
    embedding.run_all();
    student.metrics.magnet_trace = embedding.loss_trace();
    student.metrics.degenerate_batches = embedding.degenerate_batches();
    out.embedding_initial = embedding.initial_model();
    out.embedding_final = embedding.model();
  } else {
    SnapshotChannel channel;
    EmbeddingTrainer embedding(config, data.train, seed, [&](SnapshotPtr s) { channel.publish(std::move(s)); });
    std::exception_ptr failure;
    {
      std::jthread worker([&] {
        try {
          embedding.initialize();
          embedding.run_all();
        } catch (...) {
          failure = std::current_exception();
        }
        channel.close();
      });
      ChannelSource source(channel);
      try {
        student = train_student_loop(config, sampler, data.train, data.test, seed, &source);
      } catch (...) {
        worker.join();
        if (failure) std::rethrow_exception(failure);
        throw;
      }
    }
    if (failure) std::rethrow_exception(failure);
    student.metrics.magnet_trace = embedding.loss_trace();
    student.metrics.degenerate_batches = embedding.degenerate_batches();
    out.embedding_initial = embedding.initial_model();
    out.embedding_final = embedding.model();
  }

  student.metrics.run = run;
  out.metrics = std::move(student.metrics);
  out.student = std::move(student.model);
  for (const auto& r : out.metrics.iterations) out.timings_ms.push_back(r.wallclock_ms);
  return out;
}

namespace {

MeanStd mean_std(std::vector<double> values) {
  MeanStd m;
  m.mean = mean(values);
  m.stddev = values.size() >= 2 ? sample_stddev(values) : 0.0;
  m.values = std::move(values);
  return m;
}

void write_run_files(const std::filesystem::path& dir, const TrainConfig& config, const RunResult& run) {
  const std::string stem = run.metrics.sampler + "_run" + std::to_string(run.metrics.run);
  write_text(dir / (stem + ".csv"), metrics_csv(run.metrics, config.parallel));
  write_text(dir / (stem + "_timing.csv"), timing_csv(run.metrics));
  write_text(dir / (stem + "_selection.csv"), selection_csv(run.metrics));
  save_checkpoint(dir / (stem + "_student.json"), {"student", run.student});
  if (run.embedding_final) {
    write_text(dir / (stem + "_magnet.csv"), magnet_trace_csv(run.metrics));
    save_checkpoint(dir / (stem + "_embedding_init.json"), {"embedding", *run.embedding_initial});
    save_checkpoint(dir / (stem + "_embedding.json"), {"embedding", *run.embedding_final});
  }
}

void write_summary(const std::filesystem::path& dir, const std::vector<SamplerSummary>& summaries,
                   const std::optional<std::string>& error) {
  write_text(dir / "summary.json", summary_json(summaries, error));
  write_text(dir / "summary_table.csv", summary_table_csv(summaries));
  for (const auto& s : summaries) write_text(dir / ("curve_" + s.sampler + ".csv"), curve_csv(s));
}

}  // namespace

std::vector<SamplerSummary> summarize(const std::vector<RunResult>& runs) {
  std::vector<SamplerSummary> out;
  std::vector<std::string> order;
  for (const auto& r : runs)
    if (std::find(order.begin(), order.end(), r.metrics.sampler) == order.end()) order.push_back(r.metrics.sampler);

  for (const auto& name : order) {
    std::vector<const RunMetrics*> group;
    for (const auto& r : runs)
      if (r.metrics.sampler == name && !r.metrics.iterations.empty()) group.push_back(&r.metrics);
    if (group.empty()) continue;
    SamplerSummary s;
    s.sampler = name;
    std::vector<double> test, train, updates;
    for (const auto* m : group) {
      test.push_back(m->iterations.back().test_acc);
      train.push_back(m->iterations.back().train_acc);
      updates.push_back(static_cast<double>(m->iterations.back().minibatch_updates));
    }
    s.final_test_acc = mean_std(test);
    s.final_train_acc = mean_std(train);
    s.total_updates = mean_std(updates);

    std::size_t points = group.front()->iterations.size();
    for (const auto* m : group) points = std::min(points, m->iterations.size());
    for (std::size_t i = 0; i < points; ++i) {
      std::vector<double> acc, tr, up;
      for (const auto* m : group) {
        acc.push_back(m->iterations[i].test_acc);
        tr.push_back(m->iterations[i].train_acc);
        up.push_back(static_cast<double>(m->iterations[i].minibatch_updates));
      }
      const auto a = mean_std(acc);
      s.curve.push_back({group.front()->iterations[i].outer_iter, mean(up), a.mean, a.stddev, mean(tr)});
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::optional<double> updates_to_reach(const std::vector<CurvePoint>& curve, double target) {
  for (const auto& p : curve)
    if (p.test_acc_mean >= target) return p.minibatch_updates;
  return std::nullopt;
}

ExperimentResult run_experiment(const TrainConfig& config, const std::vector<SamplerKind>& samplers,
                                const std::optional<std::filesystem::path>& out_dir) {
  config.validate();
  if (out_dir) std::filesystem::create_directories(*out_dir);
  ExperimentResult result;
  try {
    const PreparedData data = prepare_data(config);
    for (SamplerKind sampler : samplers) {
      for (std::size_t r = 0; r < config.runs; ++r) {
        log_info(std::string(to_string(sampler)) + " run " + std::to_string(r));
        result.runs.push_back(run_single(config, sampler, r, data));
        if (out_dir) write_run_files(*out_dir, config, result.runs.back());
      }
    }
  } catch (const std::exception& e) {
    if (out_dir) write_summary(*out_dir, summarize(result.runs), std::string(e.what()));
    throw;
  }
  result.summaries = summarize(result.runs);
  if (out_dir) write_summary(*out_dir, result.summaries, std::nullopt);
  return result;
}

}  // namespace selfpaced
