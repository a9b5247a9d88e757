#pragma once

#include <cstddef>
#include <vector>

#include "selfpaced/matrix.hpp"
#include "selfpaced/rng.hpp"

namespace selfpaced {

/// D^2 seeding: the first centre is a uniform pick, each later centre is drawn
/// with probability proportional to its squared distance to the nearest chosen
/// centre. When every remaining distance is zero the pick is uniform over the
/// rows not chosen yet.
Matrix kmeanspp_init(const Matrix& points, std::size_t k, Rng& rng);

struct LloydResult {
  std::vector<std::size_t> assignments;
  Matrix centers;
  // Objective after each assignment pass; the last entry is the objective of
  // the returned (assignments, centers) pair. Non-increasing.
  std::vector<double> objective_trace;
  std::size_t iterations = 0;
  std::size_t empty_repairs = 0;

  double objective() const { return objective_trace.back(); }
};

/// Alternating nearest-centre assignment and mean update. Stops after
/// `max_iters` passes, when assignments stop changing, or when the relative
/// objective decrease falls below `tol`. Ties go to the lowest centre id. An
/// empty cluster is reseeded at the point farthest from its assigned centre.
LloydResult lloyd(const Matrix& points, Matrix centers, std::size_t max_iters = 100, double tol = 1e-6);

}  // namespace selfpaced
