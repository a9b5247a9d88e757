#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. None of these call into the library's numerical kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "selfpaced/matrix.hpp"
#include "selfpaced/rng.hpp"

namespace oracle {

using selfpaced::Matrix;
using selfpaced::Rng;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0;
      for (std::size_t t = 0; t < a.cols(); ++t) s += static_cast<long double>(a(i, t)) * b(t, j);
      out(i, j) = static_cast<double>(s);
    }
  return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

// Cyclic Jacobi rotations on a symmetric matrix. Returns eigenvalues sorted
// descending and the matching eigenvectors as columns.
struct Eigen {
  std::vector<double> values;
  Matrix vectors;
};

inline Eigen jacobi_eigen(Matrix a, int sweeps = 100) {
  const std::size_t n = a.rows();
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  Eigen out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
  }
  return out;
}

inline Matrix covariance(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> mu(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mu[j] += x(i, j) / static_cast<double>(n);
  Matrix c(d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) c(a, b) += (x(i, a) - mu[a]) * (x(i, b) - mu[b]);
  for (double& v : c.values()) v /= static_cast<double>(n - 1);
  return c;
}

// Exhaustive minimum over W in {0,1}^N of
//   sum W_i L_i - lambda sum W_i - gamma sum_k sqrt(|W^k|)
// where cluster_of[i] gives sample i's group.
inline double brute_force_spl_min(std::span<const double> losses, std::span<const std::size_t> cluster_of,
                                  std::size_t clusters, double lambda, double gamma) {
  const std::size_t n = losses.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> counts(clusters);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    std::fill(counts.begin(), counts.end(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1)) continue;
      total += losses[i] - lambda;
      counts[cluster_of[i]] += 1.0;
    }
    for (double c : counts) total -= gamma * std::sqrt(c);
    best = std::min(best, total);
  }
  return best;
}

// Magnet loss evaluated straight from its definition in long double: no
// log-sum-exp, no shared intermediate with the library. reps[m][b] is the
// representation of example b in cluster slot m.
inline long double magnet_direct(const std::vector<std::vector<std::vector<long double>>>& reps,
                                 const std::vector<std::size_t>& slot_classes, long double alpha,
                                 bool literal = false) {
  const std::size_t m_count = reps.size();
  const std::size_t b_count = reps[0].size();
  const std::size_t e = reps[0][0].size();
  std::vector<std::vector<long double>> mu(m_count, std::vector<long double>(e, 0.0L));
  for (std::size_t m = 0; m < m_count; ++m)
    for (std::size_t b = 0; b < b_count; ++b)
      for (std::size_t t = 0; t < e; ++t) mu[m][t] += reps[m][b][t] / static_cast<long double>(b_count);
  auto dist = [&](const std::vector<long double>& x, const std::vector<long double>& y) {
    long double s = 0.0L;
    for (std::size_t t = 0; t < e; ++t) s += (x[t] - y[t]) * (x[t] - y[t]);
    return s;
  };
  long double var = 0.0L;
  for (std::size_t m = 0; m < m_count; ++m)
    for (std::size_t b = 0; b < b_count; ++b) var += dist(reps[m][b], mu[m]);
  var /= static_cast<long double>(m_count * b_count - 1);
  const long double denom_scale = literal ? 2.0L * var * var : 2.0L * var;

  long double total = 0.0L;
  for (std::size_t m = 0; m < m_count; ++m) {
    for (std::size_t b = 0; b < b_count; ++b) {
      const long double numerator = std::exp(-dist(reps[m][b], mu[m]) / denom_scale - alpha);
      long double denominator = 0.0L;
      for (std::size_t j = 0; j < m_count; ++j)
        if (slot_classes[j] != slot_classes[m]) denominator += std::exp(-dist(reps[m][b], mu[j]) / denom_scale);
      const long double term = -std::log(numerator / denominator);
      total += term > 0.0L ? term : 0.0L;
    }
  }
  return total / static_cast<long double>(m_count * b_count);
}

// Central differences of f over every entry of `params`, which f reads.
inline std::vector<double> central_differences(std::span<double> params, const std::function<double()>& f,
                                               double eps) {
  std::vector<double> out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + eps;
    const double up = f();
    params[i] = saved - eps;
    const double down = f();
    params[i] = saved;
    out[i] = (up - down) / (2.0 * eps);
  }
  return out;
}

// max_i |a_i - b_i| / max(max_i |b_i|, floor): a norm-relative error that stays
// meaningful when individual entries are near zero.
inline double relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-8) {
  double num = 0.0, scale = floor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return num / scale;
}

// Pearson chi-square statistic of observed counts against expected probabilities.
inline double chi_square(std::span<const double> observed, std::span<const double> probs) {
  double total = 0.0;
  for (double o : observed) total += o;
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = total * probs[i];
    stat += (observed[i] - e) * (observed[i] - e) / e;
  }
  return stat;
}

// Upper critical value of chi-square at p = 0.001 via the Wilson-Hilferty
// approximation; loose enough that correct samplers pass essentially always.
inline double chi_square_critical_001(std::size_t dof) {
  const double k = static_cast<double>(dof);
  const double z = 3.090232;
  const double h = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  return k * h * h * h;
}

}  // namespace oracle
