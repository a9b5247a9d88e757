#include "selfpaced/magnet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selfpaced/log.hpp"
#include "selfpaced/numerics.hpp"

namespace selfpaced {

namespace {

void validate(const MagnetBatch& batch) {
  const std::size_t m = batch.clusters;
  const std::size_t b = batch.per_cluster;
  if (m < 2 || b < 2) {
    throw std::invalid_argument("magnet_forward: need M >= 2 and B >= 2, got M = " + std::to_string(m) +
                                ", B = " + std::to_string(b));
  }
  if (batch.reps.rows() != m * b) {
    throw DimensionError("magnet_forward: reps " + batch.reps.shape() + " for M x B = " + std::to_string(m) +
                         " x " + std::to_string(b));
  }
  if (batch.slot_classes.size() != m) throw DimensionError("magnet_forward: slot_classes length != M");
  if (batch.imposter_means.rows() != batch.imposter_classes.size()) {
    throw DimensionError("magnet_forward: imposter means/classes length mismatch");
  }
  if (!batch.imposter_classes.empty() && batch.imposter_means.cols() != batch.reps.cols()) {
    throw DimensionError("magnet_forward: imposter means " + batch.imposter_means.shape() + " vs reps " +
                         batch.reps.shape());
  }
}

}  // namespace

MagnetResult magnet_forward(const MagnetBatch& batch) {
  validate(batch);
  const std::size_t m_count = batch.clusters;
  const std::size_t b_count = batch.per_cluster;
  const std::size_t n = m_count * b_count;
  const std::size_t e = batch.reps.cols();
  const bool external = !batch.imposter_classes.empty();
  const Matrix& r = batch.reps;

  MagnetResult res;
  res.mus = Matrix(m_count, e);
  for (std::size_t i = 0; i < n; ++i) {
    auto mu = res.mus.row(i / b_count);
    auto row = r.row(i);
    for (std::size_t t = 0; t < e; ++t) mu[t] += row[t];
  }
  for (double& v : res.mus.values()) v /= static_cast<double>(b_count);

  double spread = 0.0;
  for (std::size_t i = 0; i < n; ++i) spread += sq_dist(r.row(i), res.mus.row(i / b_count));
  const double variance = spread / static_cast<double>(n - 1);
  if (variance == 0.0) throw DegenerateBatchError("magnet_forward: zero variance, every slot is collapsed");
  res.sigma_floored = variance < kMinVariance;
  if (res.sigma_floored) log_warning_once("magnet.sigma_floor", "magnet_forward: batch variance floored");
  const double v = std::max(variance, kMinVariance);
  res.sigma_sq = v;
  const bool literal = batch.variance_mode == VarianceMode::literal;
  const double s = literal ? 1.0 / (2.0 * v * v) : 1.0 / (2.0 * v);

  const Matrix& others = external ? batch.imposter_means : res.mus;
  const std::vector<std::size_t>& other_classes = external ? batch.imposter_classes : batch.slot_classes;

  // Imposter lists per slot class.
  std::vector<std::vector<std::size_t>> imposters(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    for (std::size_t j = 0; j < other_classes.size(); ++j)
      if (other_classes[j] != batch.slot_classes[m]) imposters[m].push_back(j);
    if (imposters[m].empty()) {
      throw std::invalid_argument("magnet_forward: slot " + std::to_string(m) + " (class " +
                                  std::to_string(batch.slot_classes[m]) + ") has no imposter cluster");
    }
  }

  res.per_example_losses = Matrix(m_count, b_count);
  res.grad = Matrix(n, e);
  Matrix grad_mu(m_count, e);
  double grad_s = 0.0;
  const double w = 1.0 / static_cast<double>(n);
  double total = 0.0;

  std::vector<double> dists;
  std::vector<double> logits;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = i / b_count;
    auto ri = r.row(i);
    const double d_own = sq_dist(ri, res.mus.row(m));
    const auto& imp = imposters[m];
    dists.resize(imp.size());
    logits.resize(imp.size());
    for (std::size_t k = 0; k < imp.size(); ++k) {
      dists[k] = sq_dist(ri, others.row(imp[k]));
      logits[k] = -s * dists[k];
    }
    const double lse = log_sum_exp(logits);
    const double term = s * d_own + batch.alpha + lse;
    const double hinged = term > 0.0 ? term : 0.0;
    res.per_example_losses(m, i % b_count) = hinged;
    total += hinged;
    if (!(term > 0.0)) continue;

    // d term / d s = d_own - sum_k p_k d_k ; d term / d d_own = s ; d term / d d_k = -s p_k
    double expected_d = 0.0;
    auto gi = res.grad.row(i);
    auto mu_m = res.mus.row(m);
    auto gmu_m = grad_mu.row(m);
    for (std::size_t t = 0; t < e; ++t) {
      const double diff = ri[t] - mu_m[t];
      gi[t] += 2.0 * w * s * diff;
      gmu_m[t] -= 2.0 * w * s * diff;
    }
    for (std::size_t k = 0; k < imp.size(); ++k) {
      const double p = std::exp(logits[k] - lse);
      expected_d += p * dists[k];
      const double c = -w * s * p;
      auto mu_k = others.row(imp[k]);
      for (std::size_t t = 0; t < e; ++t) {
        const double diff = ri[t] - mu_k[t];
        gi[t] += 2.0 * c * diff;
        if (!external) grad_mu(imp[k], t) -= 2.0 * c * diff;
      }
    }
    grad_s += w * (d_own - expected_d);
  }
  res.loss = total * w;

  if (!res.sigma_floored) {
    const double ds_dv = literal ? -1.0 / (v * v * v) : -1.0 / (2.0 * v * v);
    const double grad_v = grad_s * ds_dv;
    const double k = 2.0 * grad_v / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t m = i / b_count;
      auto gi = res.grad.row(i);
      auto ri = r.row(i);
      auto mu_m = res.mus.row(m);
      for (std::size_t t = 0; t < e; ++t) {
        const double diff = ri[t] - mu_m[t];
        gi[t] += k * diff;
        grad_mu(m, t) -= k * diff;
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto gi = res.grad.row(i);
    auto gmu = grad_mu.row(i / b_count);
    for (std::size_t t = 0; t < e; ++t) gi[t] += gmu[t] / static_cast<double>(b_count);
  }
  return res;
}

MagnetStepResult magnet_training_step(Mlp& model, AdamState& optimizer, const Matrix& features, ClusterIndex& index,
                                      const MagnetStepConfig& config, Rng& rng) {
  MagnetStepResult out;
  out.batch = sample_neighborhood(index, config.clusters, config.per_cluster, rng, config.seed_mode);

  const Matrix x = gather_rows(features, out.batch.samples);
  auto fwd = forward(model, x);

  MagnetBatch batch;
  batch.clusters = config.clusters;
  batch.per_cluster = config.per_cluster;
  batch.reps = std::move(fwd.output);
  batch.alpha = config.alpha;
  batch.variance_mode = config.variance_mode;
  for (std::size_t id : out.batch.cluster_ids) batch.slot_classes.push_back(index.cluster(id).class_id);
  if (config.scope == DenominatorScope::index) {
    batch.imposter_means = index.centroids();
    for (const auto& cl : index.clusters()) batch.imposter_classes.push_back(cl.class_id);
  }

  MagnetResult res;
  try {
    res = magnet_forward(batch);
  } catch (const DegenerateBatchError&) {
    log_warning_once("magnet.degenerate", "magnet_training_step: degenerate batch skipped");
    out.degenerate = true;
    return out;
  }
  out.loss = res.loss;
  out.sigma_sq = res.sigma_sq;
  out.sigma_floored = res.sigma_floored;

  auto grads = backward(model, fwd.tape, res.grad);
  adam_step(model, grads.grads, optimizer);

  index.record_losses(out.batch.samples, res.per_example_losses.values());
  return out;
}

}  // namespace selfpaced
