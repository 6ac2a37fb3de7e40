#include "mosaic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mosaic/cardinality.hpp"

namespace mosaic {

double min_cost_assignment(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) {
    throw std::invalid_argument("min_cost_assignment: matrix must be square");
  }
  if (n == 0) return 0.0;
  // Hungarian algorithm with row/column potentials; 1-based with a dummy
  // column 0 holding the currently inserted row.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = match[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    total += cost(match[static_cast<std::size_t>(j)] - 1, j - 1);
  }
  return total;
}

double ospa(const std::vector<Eigen::Vector2d>& x,
            const std::vector<Eigen::Vector2d>& y, const OspaParams& params) {
  if (!(params.cutoff > 0.0) || !(params.order >= 1.0)) {
    throw std::invalid_argument("ospa: cutoff must be positive and order >= 1");
  }
  if (x.empty() && y.empty()) return 0.0;
  const auto* small = &x;
  const auto* large = &y;
  if (small->size() > large->size()) std::swap(small, large);
  const int m = static_cast<int>(small->size());
  const int n = static_cast<int>(large->size());
  const double cp = std::pow(params.cutoff, params.order);

  // Square matrix: rows beyond m are unmatched slots at full penalty, so the
  // assignment total already includes the cardinality term.
  Matrix cost(n, n);
  cost.setConstant(cp);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = ((*small)[static_cast<std::size_t>(i)] -
                        (*large)[static_cast<std::size_t>(j)])
                           .norm();
      cost(i, j) = std::pow(std::min(d, params.cutoff), params.order);
    }
  }
  const double total = min_cost_assignment(cost);
  return std::pow(total / static_cast<double>(n), 1.0 / params.order);
}

std::vector<Eigen::Vector2d> extract_estimates(const IIDClusterDensity& d) {
  const int n_hat = map_cardinality(d.cardinality);
  std::vector<std::size_t> order(d.intensity.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return d.intensity.components[a].weight >
                            d.intensity.components[b].weight;
                   });
  const std::size_t take =
      std::min<std::size_t>(static_cast<std::size_t>(n_hat), order.size());
  std::vector<Eigen::Vector2d> estimates;
  estimates.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const auto& mean = d.intensity.components[order[i]].mean;
    estimates.emplace_back(mean(0), mean(2));
  }
  return estimates;
}

}  // namespace mosaic
