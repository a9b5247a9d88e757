#include "selfpaced/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "selfpaced/numerics.hpp"

namespace selfpaced {

Matrix kmeanspp_init(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  if (k == 0) throw std::invalid_argument("kmeanspp_init: k must be >= 1");
  if (n < k) {
    throw std::invalid_argument("kmeanspp_init: " + std::to_string(n) + " points for " + std::to_string(k) +
                                " centres");
  }
  Matrix centers(k, points.cols());
  std::vector<bool> chosen(n, false);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

  auto take = [&](std::size_t idx, std::size_t slot) {
    chosen[idx] = true;
    auto src = points.row(idx);
    std::copy(src.begin(), src.end(), centers.row(slot).begin());
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], sq_dist(points.row(i), src));
  };

  take(rng.uniform_index(n), 0);
  for (std::size_t slot = 1; slot < k; ++slot) {
    double total = 0.0;
    for (double d : nearest) total += d;
    std::size_t idx = 0;
    if (total > 0.0) {
      idx = rng.discrete(nearest);
    } else {
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) rest.push_back(i);
      idx = rest[rng.uniform_index(rest.size())];
    }
    take(idx, slot);
  }
  return centers;
}

namespace {

double assign(const Matrix& points, const Matrix& centers, std::vector<std::size_t>& assignments,
              std::vector<double>& dist) {
  double objective = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centers.rows(); ++j) {
      const double d = sq_dist(points.row(i), centers.row(j));
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    assignments[i] = best;
    dist[i] = best_d;
    objective += best_d;
  }
  return objective;
}

// Returns the number of reseeded clusters.
std::size_t update_means(const Matrix& points, const std::vector<std::size_t>& assignments,
                         std::vector<double> dist, Matrix& centers) {
  const std::size_t k = centers.rows();
  const std::size_t d = centers.cols();
  std::vector<std::size_t> counts(k, 0);
  Matrix sums(k, d);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    ++counts[assignments[i]];
    auto row = points.row(i);
    auto acc = sums.row(assignments[i]);
    for (std::size_t t = 0; t < d; ++t) acc[t] += row[t];
  }
  std::size_t repairs = 0;
  for (std::size_t j = 0; j < k; ++j) {
    auto dst = centers.row(j);
    if (counts[j] > 0) {
      for (std::size_t t = 0; t < d; ++t) dst[t] = sums(j, t) / static_cast<double>(counts[j]);
      continue;
    }
    // Farthest point from its own centre; lowest index on ties. Its distance is
    // zeroed so a second empty cluster picks a different point.
    std::size_t far = 0;
    for (std::size_t i = 1; i < dist.size(); ++i)
      if (dist[i] > dist[far]) far = i;
    auto src = points.row(far);
    std::copy(src.begin(), src.end(), dst.begin());
    dist[far] = 0.0;
    ++repairs;
  }
  return repairs;
}

double objective_of(const Matrix& points, const Matrix& centers, const std::vector<std::size_t>& assignments) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) total += sq_dist(points.row(i), centers.row(assignments[i]));
  return total;
}

}  // namespace

LloydResult lloyd(const Matrix& points, Matrix centers, std::size_t max_iters, double tol) {
  if (points.cols() != centers.cols()) {
    throw DimensionError("lloyd: points " + points.shape() + " vs centers " + centers.shape());
  }
  if (centers.rows() == 0) throw std::invalid_argument("lloyd: no centres");
  if (max_iters == 0) max_iters = 1;

  const std::size_t n = points.rows();
  LloydResult result;
  result.assignments.assign(n, 0);
  std::vector<std::size_t> previous;
  std::vector<double> dist(n, 0.0);

  for (std::size_t it = 1; it <= max_iters; ++it) {
    const double obj = assign(points, centers, result.assignments, dist);
    const bool stalled = it > 1 && result.assignments == previous;
    const bool small_step = it > 1 && (result.objective_trace.back() - obj) <= tol * result.objective_trace.back();
    result.objective_trace.push_back(obj);
    result.iterations = it;
    const std::size_t repairs = update_means(points, result.assignments, dist, centers);
    result.empty_repairs += repairs;
    if (repairs == 0 && (obj == 0.0 || stalled || small_step)) break;
    previous = result.assignments;
  }

  const double final_obj = objective_of(points, centers, result.assignments);
  if (final_obj < result.objective_trace.back()) result.objective_trace.push_back(final_obj);
  result.centers = std::move(centers);
  return result;
}

}  // namespace selfpaced
