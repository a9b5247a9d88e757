#include "selfpaced/cli.hpp"

#include <sstream>

#include "CLI11.hpp"
#include "selfpaced/checkpoint.hpp"
#include "selfpaced/config.hpp"
#include "selfpaced/log.hpp"
#include "selfpaced/metrics.hpp"
#include "selfpaced/numerics.hpp"

namespace selfpaced::cli {

namespace {

struct Options {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::string sampler;
  std::string parallel;
  std::vector<std::string> overrides;
  std::string checkpoint;
  std::string viz_out;
  bool verbose = false;
};

TrainConfig resolve(const Options& o) {
  TrainConfig config;
  if (!o.config_path.empty()) {
    if (!std::filesystem::exists(o.config_path))
      throw ConfigError("config file not found: '" + o.config_path + "'");
    config = load_config(o.config_path);
  }
  for (const auto& ov : o.overrides) apply_override(config, ov);
  if (o.seed) config.seed = *o.seed;
  if (!o.sampler.empty()) {
    const auto kind = parse_sampler(o.sampler);
    if (!kind) throw ConfigError("unknown sampler '" + o.sampler + "'");
    config.sampler = *kind;
  }
  if (!o.parallel.empty()) config.parallel = o.parallel == "on";
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return config;
}

void print_summary(const std::vector<SamplerSummary>& summaries, std::ostream& out) {
  out << "sampler      runs  test_acc (mean +- std)  train_acc  updates\n";
  for (const auto& s : summaries) {
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(4);
    line << s.sampler;
    std::string text = line.str();
    text.resize(std::max<std::size_t>(text.size(), 13), ' ');
    line.str("");
    line << s.final_test_acc.values.size() << "     " << s.final_test_acc.mean << " +- " << s.final_test_acc.stddev
         << "       " << s.final_train_acc.mean << "     " << s.total_updates.mean;
    out << text << line.str() << '\n';
  }
}

int cmd_experiment(const Options& o, bool compare, std::ostream& out) {
  const TrainConfig config = resolve(o);
  const std::filesystem::path dir = o.out_dir;
  std::filesystem::create_directories(dir);
  write_text(dir / "config.resolved.toml", to_toml(config));
  const std::vector<SamplerKind> samplers = compare ? config.compare_samplers : std::vector{config.sampler};
  const auto result = run_experiment(config, samplers, dir);
  print_summary(result.summaries, out);
  if (compare) {
    const SamplerSummary* random = nullptr;
    for (const auto& s : result.summaries)
      if (s.sampler == "random") random = &s;
    if (random) {
      out << "updates to reach random's final mean test accuracy (" << format_double(random->final_test_acc.mean)
          << "):\n";
      for (const auto& s : result.summaries) {
        const auto u = updates_to_reach(s.curve, random->final_test_acc.mean);
        out << "  " << s.sampler << ": " << (u ? format_double(*u) : std::string("not reached")) << '\n';
      }
    }
  }
  out << "outputs written to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_export_viz(const Options& o, std::ostream& out) {
  const TrainConfig config = resolve(o);
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const PreparedData data = prepare_data(config);
  if (ckpt.model.input_dim() != data.full.dim()) {
    throw DimensionError("checkpoint expects " + std::to_string(ckpt.model.input_dim()) +
                         " input features, dataset has " + std::to_string(data.full.dim()));
  }
  const Projection p = project(ckpt.model, data.full, config);
  write_text(o.viz_out, projection_csv(p));
  out << "rows=" << p.coords.rows() << " silhouette=" << format_double(p.silhouette) << '\n';
  return kExitOk;
}

}  // namespace

Projection project(const Mlp& embedding, const Dataset& data, const TrainConfig& config) {
  Projection p;
  p.embedding = predict(embedding, data.features);
  p.labels = data.labels;
  Rng rng(derive_seed(config.seed, "viz-clusters"));
  const auto index = build_index(p.embedding, data.labels, data.class_count, config.cluster.k, {}, rng,
                                 {config.cluster.max_iters, config.cluster.tol});
  p.cluster_ids.assign(index.assignments().begin(), index.assignments().end());
  p.silhouette = silhouette(p.embedding, p.labels);

  const std::size_t n = p.embedding.rows();
  p.coords = Matrix(n, 2, 0.0);
  const std::size_t dims = std::min<std::size_t>(2, p.embedding.cols());
  Matrix lead;
  std::size_t kept = dims;
  while (kept > 0) {
    try {
      lead = pca_project(p.embedding, kept);
      break;
    } catch (const RankDeficientError& e) {
      kept = e.effective_rank();
      log_warning("export-viz: embedding has rank " + std::to_string(kept) + "; padding the projection with zeros");
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < kept; ++j) p.coords(i, j) = lead(i, j);
  return p;
}

std::string projection_csv(const Projection& p) {
  std::string out = "x,y,label,cluster_id\n";
  for (std::size_t i = 0; i < p.coords.rows(); ++i) {
    out += format_double(p.coords(i, 0)) + ',' + format_double(p.coords(i, 1)) + ',' + std::to_string(p.labels[i]) +
           ',' + std::to_string(p.cluster_ids[i]) + '\n';
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Self-paced curriculum training with cluster-diverse mini-batches", "selfpaced"};
  app.fallthrough();
  app.require_subcommand(1, 1);
  app.footer("Config keys and defaults:\n" + config_reference());

  app.add_option("--config", o.config_path, "experiment config file (TOML subset)");
  app.add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", o.seed, "root seed, overrides experiment.seed");
  app.add_option("--sampler", o.sampler, "random | spl | spld | spl-advise, overrides sampler.name");
  app.add_option("--parallel", o.parallel, "run the embedding on its own thread")
      ->check(CLI::IsMember({"on", "off"}));
  app.add_option("--override", o.overrides, "section.key=value, repeatable")->allow_extra_args(false);
  app.add_flag("-v,--verbose", o.verbose, "progress messages");

  auto* train = app.add_subcommand("train", "run the configured sampler for every seed");
  auto* compare = app.add_subcommand("compare", "run every sampler in experiment.compare and tabulate");
  auto* viz = app.add_subcommand("export-viz", "2-D projection of an embedding checkpoint");
  viz->add_option("--checkpoint", o.checkpoint, "embedding checkpoint (JSON)")->required();
  viz->add_option("--out", o.viz_out, "output CSV")->required();

  std::vector<const char*> argv{"selfpaced"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  const LogLevel previous = log_level();
  if (o.verbose) set_log_level(LogLevel::info);
  int code = kExitOk;
  try {
    if (train->parsed()) code = cmd_experiment(o, false, out);
    else if (compare->parsed()) code = cmd_experiment(o, true, out);
    else code = cmd_export_viz(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    code = kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    code = kExitRuntime;
  }
  set_log_level(previous);
  return code;
}

}  // namespace selfpaced::cli
