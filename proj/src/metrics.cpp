#include "selfpaced/metrics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "selfpaced/numerics.hpp"

namespace selfpaced {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string metrics_csv(const RunMetrics& metrics, bool include_wallclock) {
  std::ostringstream out;
  out << kMetricsHeader << '\n';
  for (const auto& r : metrics.iterations) {
    out << r.outer_iter << ',' << r.minibatch_updates << ',' << format_double(r.train_acc) << ','
        << format_double(r.test_acc) << ',' << format_double(r.mean_ce) << ',' << r.selected_count << ','
        << format_double(r.lambda) << ',' << format_double(r.gamma) << ',' << format_double(r.magnet_loss) << ','
        << (include_wallclock ? format_double(r.wallclock_ms) : std::string("0")) << '\n';
  }
  return out.str();
}

std::string timing_csv(const RunMetrics& metrics) {
  std::ostringstream out;
  out << "outer_iter,wallclock_ms\n";
  for (const auto& r : metrics.iterations) out << r.outer_iter << ',' << format_double(r.wallclock_ms) << '\n';
  return out.str();
}

std::string selection_csv(const RunMetrics& metrics) {
  std::ostringstream out;
  out << "outer_iter,cluster,selected\n";
  for (const auto& r : metrics.iterations)
    for (std::size_t c = 0; c < r.selected_per_cluster.size(); ++c)
      out << r.outer_iter << ',' << c << ',' << r.selected_per_cluster[c] << '\n';
  return out.str();
}

std::string magnet_trace_csv(const RunMetrics& metrics) {
  std::ostringstream out;
  out << "step,magnet_loss\n";
  for (std::size_t i = 0; i < metrics.magnet_trace.size(); ++i)
    out << i + 1 << ',' << format_double(metrics.magnet_trace[i]) << '\n';
  return out.str();
}

std::string curve_csv(const SamplerSummary& summary) {
  std::ostringstream out;
  out << "outer_iter,minibatch_updates_mean,test_acc_mean,test_acc_std,train_acc_mean\n";
  for (const auto& p : summary.curve) {
    out << p.outer_iter << ',' << format_double(p.minibatch_updates) << ',' << format_double(p.test_acc_mean) << ','
        << format_double(p.test_acc_std) << ',' << format_double(p.train_acc_mean) << '\n';
  }
  return out.str();
}

namespace {
nlohmann::json to_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.stddev}, {"values", m.values}}; }
}  // namespace

std::string summary_json(const std::vector<SamplerSummary>& summaries, const std::optional<std::string>& error) {
  nlohmann::json doc;
  doc["samplers"] = nlohmann::json::object();
  doc["order"] = nlohmann::json::array();
  for (const auto& s : summaries) {
    doc["order"].push_back(s.sampler);
    doc["samplers"][s.sampler] = {{"runs", s.final_test_acc.values.size()},
                                  {"final_test_acc", to_json(s.final_test_acc)},
                                  {"final_train_acc", to_json(s.final_train_acc)},
                                  {"total_minibatch_updates", to_json(s.total_updates)}};
  }
  if (error) doc["error"] = *error;
  return doc.dump(2) + "\n";
}

std::string summary_table_csv(const std::vector<SamplerSummary>& summaries) {
  std::ostringstream out;
  out << "sampler,runs,test_acc_mean,test_acc_std,train_acc_mean,total_updates_mean\n";
  for (const auto& s : summaries) {
    out << s.sampler << ',' << s.final_test_acc.values.size() << ',' << format_double(s.final_test_acc.mean) << ','
        << format_double(s.final_test_acc.stddev) << ',' << format_double(s.final_train_acc.mean) << ','
        << format_double(s.total_updates.mean) << '\n';
  }
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double silhouette(const Matrix& points, std::span<const std::size_t> labels) {
  const std::size_t n = points.rows();
  if (labels.size() != n) throw DimensionError("silhouette: labels/points length mismatch");
  std::map<std::size_t, std::size_t> group_index;
  for (std::size_t y : labels) group_index.emplace(y, 0);
  if (group_index.size() < 2) throw std::invalid_argument("silhouette: need at least two groups");
  std::size_t g = 0;
  for (auto& [label, idx] : group_index) idx = g++;
  std::vector<std::size_t> group(n);
  std::vector<double> sizes(g, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    group[i] = group_index[labels[i]];
    sizes[group[i]] += 1.0;
  }

  double total = 0.0;
  std::vector<double> sums(g);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      sums[group[j]] += std::sqrt(sq_dist(points.row(i), points.row(j)));
    }
    const std::size_t own = group[i];
    if (sizes[own] < 2.0) continue;
    const double a = sums[own] / (sizes[own] - 1.0);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g; ++k)
      if (k != own) b = std::min(b, sums[k] / sizes[k]);
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

double accuracy(const Mlp& model, const Dataset& ds) {
  const auto pred = argmax_rows(predict(model, ds.features));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == ds.labels[i] ? 1 : 0;
  return pred.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace selfpaced
