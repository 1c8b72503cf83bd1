#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "ssomc/rng.hpp"

namespace ssomc {

template <typename Scalar>
using PointMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct KMeansResult {
  PointMatrix<Scalar> centroids;  ///< dimension x clusters
  std::vector<int> assignment;    ///< per point
  std::vector<Scalar> sse_history;  ///< SSE after every assignment step
  int iterations = 0;
  bool converged = false;
  int dropped_clusters = 0;  ///< requested clusters that were never populated
};

/// Indices of the distinct columns of `points`, first occurrence order.
template <typename Scalar>
std::vector<int> distinct_columns(const PointMatrix<Scalar>& points) {
  std::vector<int> order(points.cols());
  std::iota(order.begin(), order.end(), 0);
  auto lex_less = [&](int a, int b) {
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
      if (points(r, a) != points(r, b)) return points(r, a) < points(r, b);
    }
    return a < b;
  };
  std::sort(order.begin(), order.end(), lex_less);
  std::vector<int> distinct;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || points.col(order[i]) != points.col(order[i - 1])) distinct.push_back(order[i]);
  }
  std::sort(distinct.begin(), distinct.end());
  return distinct;
}

/// Lloyd's iteration. Seeds with k distinct points drawn uniformly; ties go to
/// the lowest centroid index; clusters that end up empty are dropped, never
/// reseeded. Stops at an assignment fixed point or after max_iter updates.
template <typename Scalar>
KMeansResult<Scalar> lloyd_kmeans(const PointMatrix<Scalar>& points, int k, int max_iter, std::uint64_t seed) {
  KMeansResult<Scalar> result;
  const auto n = static_cast<int>(points.cols());
  if (n == 0 || k < 1) {
    result.dropped_clusters = std::max(k, 0);
    return result;
  }

  std::vector<int> distinct = distinct_columns(points);
  const int k_eff = std::min<int>(k, static_cast<int>(distinct.size()));
  result.dropped_clusters = k - k_eff;

  Rng rng = make_stream(seed, "kmeans-init");
  for (int i = 0; i < k_eff; ++i) {
    const int j = uniform_int(rng, i, static_cast<int>(distinct.size()) - 1);
    std::swap(distinct[i], distinct[j]);
  }
  std::sort(distinct.begin(), distinct.begin() + k_eff);
  PointMatrix<Scalar> centroids(points.rows(), k_eff);
  for (int c = 0; c < k_eff; ++c) centroids.col(c) = points.col(distinct[c]);

  std::vector<int> assignment(n, -1);
  auto assign = [&](std::vector<int>& out) {
    Scalar sse = 0;
    for (int j = 0; j < n; ++j) {
      Scalar best = std::numeric_limits<Scalar>::infinity();
      int arg = 0;
      for (int c = 0; c < centroids.cols(); ++c) {
        const Scalar d = (points.col(j) - centroids.col(c)).squaredNorm();
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      out[j] = arg;
      sse += best;
    }
    return sse;
  };

  result.sse_history.push_back(assign(assignment));
  for (int iter = 0; iter < max_iter; ++iter) {
    // Update step; empty clusters are removed and labels compacted.
    std::vector<int> counts(centroids.cols(), 0);
    PointMatrix<Scalar> sums = PointMatrix<Scalar>::Zero(points.rows(), centroids.cols());
    for (int j = 0; j < n; ++j) {
      sums.col(assignment[j]) += points.col(j);
      ++counts[assignment[j]];
    }
    std::vector<int> relabel(centroids.cols(), -1);
    int kept = 0;
    for (int c = 0; c < centroids.cols(); ++c) {
      if (counts[c] > 0) relabel[c] = kept++;
    }
    result.dropped_clusters += static_cast<int>(centroids.cols()) - kept;
    PointMatrix<Scalar> updated(points.rows(), kept);
    for (int c = 0; c < centroids.cols(); ++c) {
      if (relabel[c] >= 0) updated.col(relabel[c]) = sums.col(c) / static_cast<Scalar>(counts[c]);
    }
    for (int& a : assignment) a = relabel[a];
    centroids = std::move(updated);

    std::vector<int> next(n);
    const Scalar sse = assign(next);
    ++result.iterations;
    const bool fixed = next == assignment;
    assignment = std::move(next);
    result.sse_history.push_back(sse);
    if (fixed) {
      result.converged = true;
      break;
    }
  }
  result.centroids = std::move(centroids);
  result.assignment = std::move(assignment);
  return result;
}

/// Within-cluster sum of squared errors of an arbitrary labelling.
template <typename Scalar>
Scalar partition_sse(const PointMatrix<Scalar>& points, const std::vector<int>& labels) {
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  PointMatrix<Scalar> sums = PointMatrix<Scalar>::Zero(points.rows(), k);
  std::vector<int> counts(k, 0);
  for (std::size_t j = 0; j < labels.size(); ++j) {
    sums.col(labels[j]) += points.col(j);
    ++counts[labels[j]];
  }
  Scalar sse = 0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    sse += (points.col(j) - sums.col(labels[j]) / static_cast<Scalar>(counts[labels[j]])).squaredNorm();
  }
  return sse;
}

}  // namespace ssomc
