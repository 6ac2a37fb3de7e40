#pragma once

#include "mosaic/types.hpp"

namespace mosaic {

/// OSPA parameters: cutoff distance c (m) and order p.
struct OspaParams {
  double cutoff{600.0};
  double order{1.0};
};

/// Optimal sub-pattern assignment distance between two finite position sets:
/// optimal assignment over min(|X|,|Y|) pairs with per-pair distances cut off
/// at c, penalty c per unmatched element, p-norm aggregate normalized by
/// max(|X|,|Y|). Empty vs empty is 0. The assignment is solved exactly.
double ospa(const std::vector<Eigen::Vector2d>& x,
            const std::vector<Eigen::Vector2d>& y, const OspaParams& params);

/// Exact minimum-cost assignment of a square cost matrix (Hungarian method
/// with potentials, O(n^3)). Exposed for the metric tests.
double min_cost_assignment(const Matrix& cost);

/// State estimates from an IID cluster density: the MAP cardinality decides
/// how many estimates to extract, then the positions of that many
/// highest-weight components are returned.
std::vector<Eigen::Vector2d> extract_estimates(const IIDClusterDensity& d);

}  // namespace mosaic
