// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "selfpaced/cli.hpp"
#include "selfpaced/config.hpp"
#include "selfpaced/kmeans.hpp"
#include "selfpaced/magnet.hpp"
#include "selfpaced/metrics.hpp"
#include "selfpaced/spl_solver.hpp"
#include "selfpaced/trainer.hpp"

using namespace selfpaced;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const std::filesystem::path kBlobsConfig = SELFPACED_SOURCE_DIR "/configs/blobs.toml";

std::filesystem::path work_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "selfpaced_acceptance" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

int invoke(const std::vector<std::string>& args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (out_text) *out_text = out.str();
  if (code != 0) std::cerr << err.str();
  return code;
}

std::string fmt(double v) { return format_double(v); }

// 1. Exhaustive-search equivalence of the weight solver.
Outcome solver_oracle() {
  Rng rng(derive_seed(1, "acceptance-solver"));
  double worst = 0.0;
  const int instances = 1000;
  for (int trial = 0; trial < instances; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(12);
    const std::size_t k = 1 + rng.uniform_index(3);
    std::vector<double> losses(n);
    std::vector<std::size_t> cluster_of(n);
    ClusterLosses grouped(k);
    for (std::size_t i = 0; i < n; ++i) {
      losses[i] = rng.uniform(0.0, 3.0);
      cluster_of[i] = rng.uniform_index(k);
      grouped[cluster_of[i]].push_back({i, losses[i]});
    }
    PaceSchedule pace;
    pace.lambda = rng.uniform(0.0, 2.0);
    pace.gamma = rng.uniform(0.0, 2.0);
    const auto w = solve_weights(grouped, pace, n);
    const double got = self_paced_objective(grouped, w.weights, pace.lambda, pace.gamma);
    const double want = oracle::brute_force_spl_min(losses, cluster_of, k, pace.lambda, pace.gamma);
    worst = std::max(worst, std::abs(got - want));
  }
  return {worst <= 1e-12, std::to_string(instances) + " instances, max |objective - exhaustive min| = " + fmt(worst)};
}

MagnetBatch random_magnet_batch(Rng& rng) {
  MagnetBatch b;
  b.clusters = 2 + rng.uniform_index(5);
  b.per_cluster = 2 + rng.uniform_index(4);
  const std::size_t e = 1 + rng.uniform_index(6);
  b.reps = Matrix(b.clusters * b.per_cluster, e);
  for (std::size_t s = 0; s < b.clusters; ++s) {
    std::vector<double> centre(e);
    for (double& c : centre) c = rng.uniform(-2.0, 2.0);
    for (std::size_t j = 0; j < b.per_cluster; ++j)
      for (std::size_t t = 0; t < e; ++t) b.reps(s * b.per_cluster + j, t) = centre[t] + rng.normal(0.0, 0.7);
  }
  b.slot_classes.resize(b.clusters);
  for (std::size_t s = 1; s < b.clusters; ++s) b.slot_classes[s] = 1 + rng.uniform_index(3);
  b.alpha = rng.uniform(0.0, 2.0);
  return b;
}

// 2. Magnet loss value against a direct evaluation; gradient against central differences.
Outcome magnet_correctness() {
  Rng rng(derive_seed(1, "acceptance-magnet"));
  double worst_value = 0.0, worst_grad = 0.0;
  int graded = 0, kinks = 0;
  for (int trial = 0; trial < 100; ++trial) {
    MagnetBatch batch = random_magnet_batch(rng);
    const auto res = magnet_forward(batch);
    std::vector<std::vector<std::vector<long double>>> nested(batch.clusters);
    for (std::size_t s = 0; s < batch.clusters; ++s)
      for (std::size_t j = 0; j < batch.per_cluster; ++j) {
        auto row = batch.reps.row(s * batch.per_cluster + j);
        nested[s].emplace_back(row.begin(), row.end());
      }
    const long double direct = oracle::magnet_direct(nested, batch.slot_classes, batch.alpha);
    const double rel = std::abs(res.loss - static_cast<double>(direct)) / std::max(std::abs(static_cast<double>(direct)), 1e-12);
    worst_value = std::max(worst_value, direct == 0.0L ? std::abs(res.loss) : rel);

    // Hinged terms within the FD step of zero make the derivative undefined.
    bool near_kink = false;
    for (double v : res.per_example_losses.values())
      if (v > 0.0 && v < 1e-3) near_kink = true;
    if (near_kink) {
      ++kinks;
      continue;
    }
    const auto fd = oracle::central_differences(batch.reps.values(), [&] { return magnet_forward(batch).loss; }, 1e-5);
    worst_grad = std::max(worst_grad, oracle::relative_error(res.grad.values(), fd));
    ++graded;
  }
  const bool pass = worst_value <= 1e-10 && worst_grad <= 1e-5 && graded >= 90;
  return {pass, "100 batches, value rel err " + fmt(worst_value) + "; gradient rel err " + fmt(worst_grad) + " over " +
                    std::to_string(graded) + " batches (" + std::to_string(kinks) + " skipped at hinge kinks)"};
}

// 3. Parameter gradients of a small embedding network under the magnet loss.
Outcome end_to_end_gradient() {
  Rng rng(derive_seed(1, "acceptance-e2e"));
  double worst = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 20 && checked < 10; ++trial) {
    const std::vector<std::size_t> sizes{4, 5, 3};
    Mlp net = init_mlp(sizes, rng);
    const Matrix x = oracle::random_matrix(4, 4, rng, -2.0, 2.0);
    MagnetBatch batch;
    batch.clusters = 2;
    batch.per_cluster = 2;
    batch.slot_classes = {0, 1};
    batch.alpha = 0.5;
    const auto loss_at = [&] {
      batch.reps = predict(net, x);
      return magnet_forward(batch).loss;
    };
    const auto fwd = forward(net, x);
    batch.reps = fwd.output;
    const auto res = magnet_forward(batch);
    bool usable = res.loss > 0.0;
    for (double v : res.per_example_losses.values())
      if (v > 0.0 && v < 1e-3) usable = false;
    for (const auto& pre : fwd.tape.pre_activations)
      for (double v : pre.values())
        if (std::abs(v) < 1e-4) usable = false;  // ReLU kink
    if (!usable) continue;
    const auto grads = backward(net, fwd.tape, res.grad).grads;
    auto params = net.tensors();
    const auto analytic = grads.tensors();
    std::vector<double> a, n;
    for (std::size_t t = 0; t < params.size(); ++t) {
      const auto fd = oracle::central_differences(params[t], loss_at, 1e-5);
      a.insert(a.end(), analytic[t].begin(), analytic[t].end());
      n.insert(n.end(), fd.begin(), fd.end());
    }
    worst = std::max(worst, oracle::relative_error(a, n));
    ++checked;
  }
  return {checked >= 10 && worst <= 1e-4,
          std::to_string(checked) + " nets (e=3, M=2, B=2), max parameter-gradient rel err " + fmt(worst)};
}

// 4. Lloyd monotonicity, D^2 seeding, per-class purity.
Outcome clustering_properties() {
  Rng rng(derive_seed(1, "acceptance-cluster"));
  int monotone = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 10 + rng.uniform_index(90);
    const std::size_t k = 1 + rng.uniform_index(8);
    const Matrix pts = oracle::random_matrix(n, 1 + rng.uniform_index(5), rng, -3.0, 3.0);
    const auto r = lloyd(pts, kmeanspp_init(pts, k, rng), 100, 0.0);
    bool ok = true;
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i) ok = ok && r.objective_trace[i] <= r.objective_trace[i - 1];
    monotone += ok ? 1 : 0;
  }

  int separated = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng trial_rng(derive_seed(seed, "acceptance-kmeanspp"));
    Matrix pts(100, 2);
    for (std::size_t i = 0; i < 100; ++i) {
      pts(i, 0) = (i < 50 ? -100.0 : 100.0) + trial_rng.normal();
      pts(i, 1) = trial_rng.normal();
    }
    const Matrix c = kmeanspp_init(pts, 2, trial_rng);
    separated += (c(0, 0) < 0.0) != (c(1, 0) < 0.0) ? 1 : 0;
  }

  const TrainConfig config = load_config(kBlobsConfig);
  const PreparedData data = prepare_data(config);
  Rng index_rng(derive_seed(config.seed, "acceptance-purity"));
  const auto index = build_index(data.full.features, data.full.labels, data.full.class_count, config.cluster.k, {},
                                 index_rng);
  const double purity = cluster_purity(index.assignments(), data.full.subcluster_ids);

  return {monotone == 100 && separated >= 99 && purity >= 0.9,
          "Lloyd monotone " + std::to_string(monotone) + "/100; D^2 seeding separated " + std::to_string(separated) +
              "/100; purity " + fmt(purity)};
}

// 5. gamma = 0 reduces to thresholding; symmetric clusters get equal counts.
Outcome spl_reductions() {
  Rng rng(derive_seed(1, "acceptance-reductions"));
  int threshold_ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(40);
    const std::size_t k = 1 + rng.uniform_index(4);
    ClusterLosses grouped(k);
    std::vector<double> losses(n);
    for (std::size_t i = 0; i < n; ++i) {
      losses[i] = rng.uniform(0.0, 3.0);
      grouped[rng.uniform_index(k)].push_back({i, losses[i]});
    }
    PaceSchedule pace;
    pace.lambda = rng.uniform(0.0, 2.0);
    pace.gamma = 0.0;
    const auto w = solve_weights(grouped, pace, n);
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) ok = ok && w.weights[i] == (losses[i] < pace.lambda ? 1 : 0);
    threshold_ok += ok ? 1 : 0;
  }

  int symmetric_ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + rng.uniform_index(10);
    std::vector<double> shared(m);
    for (double& v : shared) v = rng.uniform(0.0, 3.0);
    // Same multiset of losses in both clusters, listed in different orders.
    ClusterLosses grouped(2);
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i = 0; i < m; ++i) {
      grouped[0].push_back({i, shared[i]});
      grouped[1].push_back({m + i, shared[order[i]]});
    }
    PaceSchedule pace;
    pace.lambda = rng.uniform(0.0, 2.0);
    pace.gamma = rng.uniform(1e-3, 2.0);
    const auto w = solve_weights(grouped, pace, 2 * m);
    symmetric_ok += w.selected_per_cluster[0] == w.selected_per_cluster[1] ? 1 : 0;
  }
  return {threshold_ok == 1000 && symmetric_ok == 1000,
          "gamma=0 thresholding " + std::to_string(threshold_ok) + "/1000; symmetric equal counts " +
              std::to_string(symmetric_ok) + "/1000"};
}

// 6. Directional ordering on the desk-scale blobs benchmark.
Outcome ordering_claim() {
  const auto dir = work_dir("ordering");
  TrainConfig config = load_config(kBlobsConfig);
  const auto result = run_experiment(
      config, {SamplerKind::random, SamplerKind::spl, SamplerKind::spld, SamplerKind::spl_advise}, dir);
  const SamplerSummary *random = nullptr, *spld = nullptr, *advise = nullptr;
  std::ostringstream table;
  for (const auto& s : result.summaries) {
    if (s.sampler == "random") random = &s;
    if (s.sampler == "spld") spld = &s;
    if (s.sampler == "spl-advise") advise = &s;
    table << "    " << s.sampler << ": final test acc " << fmt(s.final_test_acc.mean) << " +- "
          << fmt(s.final_test_acc.stddev) << " over " << s.final_test_acc.values.size() << " seeds, "
          << fmt(s.total_updates.mean) << " updates\n";
  }
  const double target = random->final_test_acc.mean;
  const auto random_updates = updates_to_reach(random->curve, target);
  const auto advise_updates = updates_to_reach(advise->curve, target);
  const bool acc_vs_spld = advise->final_test_acc.mean >= spld->final_test_acc.mean;
  const bool acc_vs_random = advise->final_test_acc.mean >= target;
  const bool speed = advise_updates && random_updates && *advise_updates <= *random_updates;
  std::cout << table.str() << "    curves written to " << dir.string() << "/curve_<sampler>.csv\n";
  return {acc_vs_spld && acc_vs_random && speed,
          "spl-advise " + fmt(advise->final_test_acc.mean) + " vs spld " + fmt(spld->final_test_acc.mean) +
              " vs random " + fmt(target) + "; updates to reach random's final mean: spl-advise " +
              (advise_updates ? fmt(*advise_updates) : std::string("never")) + ", random " +
              (random_updates ? fmt(*random_updates) : std::string("never"))};
}

std::string slurp_run_csvs(const std::filesystem::path& dir) {
  std::string all;
  for (std::size_t r = 0; r < 5; ++r) {
    const auto p = dir / ("spl-advise_run" + std::to_string(r) + ".csv");
    if (!std::filesystem::exists(p)) break;
    all += read_text(p);
  }
  return all;
}

// 7. Two identical sequential train invocations give identical metrics bytes.
Outcome determinism() {
  const auto a = work_dir("determinism-a");
  const auto b = work_dir("determinism-b");
  const std::vector<std::string> common{"--config", kBlobsConfig.string(), "--seed", "17", "--parallel", "off",
                                        "--override", "experiment.runs=2"};
  auto args_a = common, args_b = common;
  args_a.insert(args_a.end(), {"--out-dir", a.string(), "train"});
  args_b.insert(args_b.end(), {"--out-dir", b.string(), "train"});
  if (invoke(args_a) != 0 || invoke(args_b) != 0) return {false, "train invocation failed"};
  const std::string x = slurp_run_csvs(a), y = slurp_run_csvs(b);
  return {!x.empty() && x == y, std::to_string(x.size()) + " metrics CSV bytes, identical: " + (x == y ? "yes" : "no")};
}

double silhouette_of(const std::filesystem::path& checkpoint, const std::filesystem::path& out_csv) {
  std::string out;
  if (invoke({"--config", kBlobsConfig.string(), "--seed", "17", "export-viz", "--checkpoint", checkpoint.string(),
              "--out", out_csv.string()},
             &out) != 0)
    return std::nan("");
  const auto pos = out.find("silhouette=");
  return pos == std::string::npos ? std::nan("") : std::stod(out.substr(pos + 11));
}

// 8. Trained embedding separates classes better than its own initialisation.
Outcome visualization() {
  const auto dir = work_dir("viz");
  if (invoke({"--config", kBlobsConfig.string(), "--seed", "17", "--override", "experiment.runs=1", "--out-dir",
              dir.string(), "train"}) != 0)
    return {false, "train invocation failed"};
  const double before = silhouette_of(dir / "spl-advise_run0_embedding_init.json", dir / "viz_init.csv");
  const double after = silhouette_of(dir / "spl-advise_run0_embedding.json", dir / "viz_trained.csv");
  return {after > before, "silhouette untrained " + fmt(before) + " -> trained " + fmt(after)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 weight-solver oracle equivalence", solver_oracle},
      {"2 magnet loss value and gradient", magnet_correctness},
      {"3 end-to-end embedding gradient", end_to_end_gradient},
      {"4 clustering properties", clustering_properties},
      {"5 SPL reductions", spl_reductions},
      {"6 desk-scale ordering", ordering_claim},
      {"7 determinism", determinism},
      {"8 visualization sanity", visualization},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.1fs", secs);
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << " (" << timing << "): " << o.detail
              << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
