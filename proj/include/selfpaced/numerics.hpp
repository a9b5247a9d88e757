#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

#include "selfpaced/matrix.hpp"

namespace selfpaced {

class RankDeficientError : public std::runtime_error {
 public:
  RankDeficientError(std::size_t effective_rank, std::size_t requested);
  std::size_t effective_rank() const { return effective_rank_; }

 private:
  std::size_t effective_rank_;
};

/// out(i, j) = sum_t (x(i, t) - c(j, t))^2. Computed as a direct sum of squared
/// differences so every entry is non-negative.
Matrix pairwise_sq_dist(const Matrix& x, const Matrix& c);

double sq_dist(std::span<const double> a, std::span<const double> b);

/// log(sum(exp(v))) with max shifting. Returns -inf when every entry is -inf.
double log_sum_exp(std::span<const double> v);

/// Projects mean-centred rows onto the top `dims` principal components of the
/// sample covariance. Each component's sign is chosen so that its
/// largest-magnitude loading is positive.
///
/// Effective rank counts covariance eigenvalues with |lambda| greater than
/// 1e-24 * lambda_max, i.e. singular values that are numerically nonzero.
/// Throws RankDeficientError when it is below `dims`.
Matrix pca_project(const Matrix& x, std::size_t dims);

/// Linear-interpolated percentile (q in [0, 100]) of a non-empty sample.
double percentile(std::span<const double> values, double q);

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_stddev(std::span<const double> values);

}  // namespace selfpaced
