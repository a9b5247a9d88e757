#include "selfpaced/numerics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace selfpaced {

RankDeficientError::RankDeficientError(std::size_t effective_rank, std::size_t requested)
    : std::runtime_error("pca_project: effective rank " + std::to_string(effective_rank) +
                         " is below requested " + std::to_string(requested) + " components"),
      effective_rank_(effective_rank) {}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double d = a[t] - b[t];
    acc += d * d;
  }
  return acc;
}

Matrix pairwise_sq_dist(const Matrix& x, const Matrix& c) {
  if (x.cols() != c.cols()) {
    throw DimensionError("pairwise_sq_dist: points " + x.shape() + " vs centers " + c.shape());
  }
  Matrix out(x.rows(), c.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < c.rows(); ++j) out(i, j) = sq_dist(x.row(i), c.row(j));
  }
  return out;
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  const double hi = *std::max_element(v.begin(), v.end());
  if (std::isinf(hi)) return hi;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

Matrix pca_project(const Matrix& x, std::size_t dims) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n < 2) throw std::invalid_argument("pca_project: need at least 2 rows, got " + x.shape());
  if (dims == 0 || dims > std::min(n, d)) {
    throw std::invalid_argument("pca_project: dims " + std::to_string(dims) +
                                " not in [1, min(rows, cols)] for " + x.shape());
  }

  Eigen::MatrixXd centred(n, d);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mu(j) += x(i, j);
  mu /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) centred(i, j) = x(i, j) - mu(j);

  const Eigen::MatrixXd cov = (centred.transpose() * centred) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("pca_project: eigensolver failed");

  // Eigen returns eigenvalues in ascending order.
  const Eigen::VectorXd& evals = solver.eigenvalues();
  const double top = evals(evals.size() - 1);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    if (top > 0.0 && std::abs(evals(i)) > top * 1e-24) ++rank;
  }
  if (rank < dims) throw RankDeficientError(rank, dims);

  Matrix out(n, dims);
  for (std::size_t k = 0; k < dims; ++k) {
    Eigen::VectorXd axis = solver.eigenvectors().col(static_cast<Eigen::Index>(d - 1 - k));
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0.0) axis = -axis;
    const Eigen::VectorXd proj = centred * axis;
    for (std::size_t i = 0; i < n; ++i) out(i, k) = proj(static_cast<Eigen::Index>(i));
  }
  return out;
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: empty input");
  if (!(q >= 0.0 && q <= 100.0)) throw std::invalid_argument("percentile: q outside [0, 100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double mean(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mu = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - mu) * (v - mu);
  return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

}  // namespace selfpaced
