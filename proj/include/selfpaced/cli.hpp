#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "selfpaced/matrix.hpp"
#include "selfpaced/mlp.hpp"
#include "selfpaced/trainer.hpp"

namespace selfpaced::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point behind the `selfpaced` binary. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct Projection {
  Matrix embedding;               // N x e
  Matrix coords;                  // N x 2
  std::vector<std::size_t> labels;
  std::vector<std::size_t> cluster_ids;
  double silhouette = 0.0;        // class labels, embedding space
};

/// Embeds every sample of `data`, clusters the embedding per class and
/// projects it to two principal axes.
Projection project(const Mlp& embedding, const Dataset& data, const TrainConfig& config);

std::string projection_csv(const Projection& p);

}  // namespace selfpaced::cli
