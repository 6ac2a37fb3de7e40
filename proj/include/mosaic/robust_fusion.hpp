#pragma once

#include <optional>

#include "mosaic/fusion.hpp"
#include "mosaic/gm.hpp"
#include "mosaic/types.hpp"

namespace mosaic {

/// Squared corrected Mahalanobis distance between two Gaussian components:
/// (m_a - m_b)^T (P_a + P_b)^-1 (m_a - m_b). Symmetric in its arguments.
double corrected_mahalanobis(const GaussianComponent& a,
                             const GaussianComponent& b);

/// Index of one Gaussian component inside a multi-node collection.
struct GcIndex {
  int node{0};
  int comp{0};

  friend bool operator==(const GcIndex&, const GcIndex&) = default;
};

/// Partition of all component indices into clusters, produced under a
/// squared-distance gating threshold rho. A valid partition satisfies:
///  (i) every member of a non-singleton cluster has another member within rho;
/// (ii) components in different clusters are strictly farther apart than rho.
struct ClusterPartition {
  std::vector<std::vector<GcIndex>> clusters;
  double gating_threshold{0.0};
};

/// Greedy gating over the pooled components of all nodes (seed = lowest
/// remaining index, gathering everything within rho of the seed), followed
/// by a union-find pass that merges any clusters still linked by a pair at
/// distance <= rho. The result satisfies both partition conditions and is
/// deterministic given the input order.
ClusterPartition cluster_components(const std::vector<GMIntensity>& nodes,
                                    double rho);

/// Checks both partition conditions exactly; used by tests and validation.
bool partition_is_valid(const ClusterPartition& partition,
                        const std::vector<GMIntensity>& nodes);

/// Per-cluster view of the node densities: each node's sub-intensity (empty
/// when the node has no component in the cluster) and the cardinality
/// distribution rebuilt from the sub-intensity weights through the
/// multi-Bernoulli approximation.
struct SubIIDCluster {
  int cluster_id{0};
  std::vector<GMIntensity> sub_intensity;            // indexed by node
  std::vector<CardinalityDistribution> sub_cardinality;  // indexed by node
  std::vector<int> participating;                    // nodes with components
};

std::vector<SubIIDCluster> split_by_clusters(
    const std::vector<GMIntensity>& nodes, const ClusterPartition& partition,
    int n_max = kMaxTargets);

/// Fuses one cluster: a single participating node passes through unchanged;
/// two nodes are combined with the chosen rule on the sub-densities.
/// Throws on an empty cluster.
IIDClusterDensity fuse_cluster(const SubIIDCluster& sub, FusionRule rule,
                               double omega);

/// Clustering-based fusion of two IID cluster densities that is robust to
/// differing, unknown fields-of-view: cluster the pooled components, rebuild
/// per-cluster cardinalities from the weights, fuse each cluster with the
/// chosen rule, then merge by summing intensities and convolving the
/// cardinality distributions. The input cardinality distributions do not
/// enter the result; cardinality information is carried by the weights.
IIDClusterDensity robust_fuse(const IIDClusterDensity& a,
                              const IIDClusterDensity& b, FusionRule rule,
                              double omega, double rho,
                              const std::optional<GmReduceParams>& reduce = {},
                              int n_max = kMaxTargets);

/// Intensity-only variant for PHD posteriors: per-cluster fusion acts on the
/// raw sub-intensities (geometric average of unnormalized intensities for
/// GCI, weighted sum for AA) and no cardinality machinery is involved.
GMIntensity robust_fuse_intensity(
    const GMIntensity& a, const GMIntensity& b, FusionRule rule, double omega,
    double rho, const std::optional<GmReduceParams>& reduce = {});

/// Chi-squared CDF F(delta, dof) through the regularized lower incomplete
/// gamma function; exact closed forms for integer dof.
double chi2_cdf(double delta, int dof);

/// L1 error bound for approximating the indicator-split sub-intensities by
/// the clustered sub-intensities, per (node, cluster):
///   bound = mass(node) * (1 - F(delta, dim)).
/// Requires delta <= rho/4, the ellipsoid-disjointness precondition.
struct BoundEntry {
  int node{0};
  int cluster{0};
  double bound{0.0};
  /// Grid-integrated L1 discrepancy; negative when not computed.
  double l1_numeric{-1.0};
};

struct ErrorBoundReport {
  double delta{0.0};
  int dim{0};
  std::vector<BoundEntry> entries;
};

/// Computes the analytic bound for every (node, cluster) pair; when
/// with_numeric_l1 is set (2-D states only) also integrates the actual
/// discrepancy on a grid, assigning each grid point to the cluster of the
/// component with the smallest per-component Mahalanobis distance.
ErrorBoundReport approximation_error_bound(
    const std::vector<GMIntensity>& nodes, const ClusterPartition& partition,
    double delta, bool with_numeric_l1 = false, int grid_points = 240);

}  // namespace mosaic
