#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "selfpaced/cluster_index.hpp"
#include "selfpaced/matrix.hpp"
#include "selfpaced/mlp.hpp"
#include "selfpaced/optim.hpp"
#include "selfpaced/rng.hpp"

namespace selfpaced {

/// How the batch variance enters the exponent.
///   variance: exp(-d / (2 V)), V = sum ||r - mu||^2 / (MB - 1)
///   literal:  exp(-d / (2 V^2)), treating V itself as the standard deviation
enum class VarianceMode { variance, literal };

/// Which cluster means form the imposter denominator.
///   batch: the M mini-batch means of a different class
///   index: every index centroid of a different class (held constant)
enum class DenominatorScope { batch, index };

inline constexpr double kMinVariance = 1e-12;

class DegenerateBatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MagnetBatch {
  std::size_t clusters = 0;     // M
  std::size_t per_cluster = 0;  // B
  Matrix reps;                  // (M * B) x e, slot-major
  std::vector<std::size_t> slot_classes;
  double alpha = 1.0;
  VarianceMode variance_mode = VarianceMode::variance;

  // DenominatorScope::index only; empty otherwise.
  Matrix imposter_means;
  std::vector<std::size_t> imposter_classes;
};

struct MagnetResult {
  double loss = 0.0;
  Matrix grad;                // d loss / d reps, same shape as reps
  Matrix per_example_losses;  // M x B hinged terms
  double sigma_sq = 0.0;      // V after flooring
  bool sigma_floored = false;
  Matrix mus;                 // M x e
};

/// Loss value and exact gradient with respect to every representation.
///
/// Per example r in slot m:
///   term = max(0, s * ||r - mu_m||^2 + alpha + logsumexp_{mu: C(mu) != C(r)} (-s * ||r - mu||^2))
/// with s = 1 / (2 V) (or 1 / (2 V^2) in literal mode); loss is the mean term.
/// Gradients flow through the slot means and V. V below kMinVariance is
/// clamped and then treated as constant.
MagnetResult magnet_forward(const MagnetBatch& batch);

struct MagnetStepConfig {
  std::size_t clusters = 8;     // M
  std::size_t per_cluster = 8;  // B
  double alpha = 1.0;
  VarianceMode variance_mode = VarianceMode::variance;
  DenominatorScope scope = DenominatorScope::batch;
  SeedMode seed_mode = SeedMode::loss;
};

struct MagnetStepResult {
  double loss = 0.0;
  double sigma_sq = 0.0;
  bool sigma_floored = false;
  bool degenerate = false;  // batch skipped, no update applied
  NeighborhoodBatch batch;
};

/// One embedding update: neighbourhood sample from `index`, embed, loss,
/// backprop, Adam step. Every sampled example's hinged loss is written to the
/// index's loss table.
MagnetStepResult magnet_training_step(Mlp& model, AdamState& optimizer, const Matrix& features, ClusterIndex& index,
                                      const MagnetStepConfig& config, Rng& rng);

}  // namespace selfpaced
