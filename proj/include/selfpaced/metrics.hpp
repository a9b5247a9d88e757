#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selfpaced/matrix.hpp"
#include "selfpaced/trainer.hpp"

namespace selfpaced {

/// Shortest round-trip decimal form; "nan" / "inf" / "-inf" for non-finite.
std::string format_double(double v);

inline constexpr const char* kMetricsHeader =
    "outer_iter,minibatch_updates,train_acc,test_acc,mean_ce,selected_count,lambda,gamma,magnet_loss,wallclock_ms";

/// One row per outer iteration. When `include_wallclock` is false the
/// wallclock_ms column is written as 0 so deterministic runs are byte-identical.
std::string metrics_csv(const RunMetrics& metrics, bool include_wallclock);
std::string timing_csv(const RunMetrics& metrics);
std::string selection_csv(const RunMetrics& metrics);
std::string magnet_trace_csv(const RunMetrics& metrics);
std::string curve_csv(const SamplerSummary& summary);

/// { "samplers": { name: { runs, final_test_acc: {mean, std, values}, ... } }, "error"?: ... }
std::string summary_json(const std::vector<SamplerSummary>& summaries, const std::optional<std::string>& error = {});

/// sampler,runs,test_acc_mean,test_acc_std,train_acc_mean,total_updates_mean
std::string summary_table_csv(const std::vector<SamplerSummary>& summaries);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Mean silhouette over all points using Euclidean distance. Points alone in
/// their group score 0. Needs at least two groups.
double silhouette(const Matrix& points, std::span<const std::size_t> labels);

double accuracy(const Mlp& model, const Dataset& ds);

}  // namespace selfpaced
