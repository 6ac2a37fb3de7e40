#include "mosaic/robust_fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mosaic/cardinality.hpp"
#include "mosaic/gm.hpp"

namespace mosaic {

namespace {

std::vector<GcIndex> flatten_indices(const std::vector<GMIntensity>& nodes) {
  std::vector<GcIndex> indices;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    for (int p = 0; p < static_cast<int>(nodes[i].size()); ++p) {
      indices.push_back({i, p});
    }
  }
  return indices;
}

const GaussianComponent& component_at(const std::vector<GMIntensity>& nodes,
                                      const GcIndex& idx) {
  return nodes[static_cast<std::size_t>(idx.node)]
      .components[static_cast<std::size_t>(idx.comp)];
}

// Plain union-find with path compression.
struct UnionFind {
  std::vector<int> parent;

  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

}  // namespace

double corrected_mahalanobis(const GaussianComponent& a,
                             const GaussianComponent& b) {
  const Matrix sum = a.covariance + b.covariance;
  Eigen::LLT<Matrix> llt(sum);
  if (llt.info() != Eigen::Success) {
    throw NumericError(
        "corrected_mahalanobis: covariance sum is not positive definite");
  }
  const Vector diff = a.mean - b.mean;
  return llt.matrixL().solve(diff).squaredNorm();
}

ClusterPartition cluster_components(const std::vector<GMIntensity>& nodes,
                                    double rho) {
  if (!(rho > 0.0)) {
    throw std::invalid_argument("cluster_components: rho must be positive");
  }
  const std::vector<GcIndex> indices = flatten_indices(nodes);
  const std::size_t total = indices.size();

  std::vector<double> dist(total * total, 0.0);
  for (std::size_t u = 0; u < total; ++u) {
    for (std::size_t v = u + 1; v < total; ++v) {
      const double d = corrected_mahalanobis(component_at(nodes, indices[u]),
                                             component_at(nodes, indices[v]));
      dist[u * total + v] = d;
      dist[v * total + u] = d;
    }
  }

  // Greedy gating pass: seed each cluster with the lowest remaining index and
  // gather everything within the gate of the seed.
  std::vector<int> cluster_of(total, -1);
  int next_cluster = 0;
  for (std::size_t seed = 0; seed < total; ++seed) {
    if (cluster_of[seed] >= 0) continue;
    const int g = next_cluster++;
    for (std::size_t v = seed; v < total; ++v) {
      if (cluster_of[v] < 0 && dist[seed * total + v] < rho) {
        cluster_of[v] = g;
      }
    }
  }

  // Union-find refinement: merge clusters still linked by a pair within the
  // gate, so cross-cluster distances end up strictly above rho.
  UnionFind uf(static_cast<std::size_t>(next_cluster));
  for (std::size_t u = 0; u < total; ++u) {
    for (std::size_t v = u + 1; v < total; ++v) {
      if (cluster_of[u] != cluster_of[v] && dist[u * total + v] <= rho) {
        uf.unite(cluster_of[u], cluster_of[v]);
      }
    }
  }

  // Renumber roots by first appearance so the output clusters are ordered by
  // their smallest member index.
  std::vector<int> renumber(static_cast<std::size_t>(next_cluster), -1);
  int out_count = 0;
  for (std::size_t u = 0; u < total; ++u) {
    const int root = uf.find(cluster_of[u]);
    if (renumber[static_cast<std::size_t>(root)] < 0) {
      renumber[static_cast<std::size_t>(root)] = out_count++;
    }
  }

  ClusterPartition partition;
  partition.gating_threshold = rho;
  partition.clusters.assign(static_cast<std::size_t>(out_count), {});
  for (std::size_t u = 0; u < total; ++u) {
    const int g = renumber[static_cast<std::size_t>(uf.find(cluster_of[u]))];
    partition.clusters[static_cast<std::size_t>(g)].push_back(indices[u]);
  }
  return partition;
}

bool partition_is_valid(const ClusterPartition& partition,
                        const std::vector<GMIntensity>& nodes) {
  const double rho = partition.gating_threshold;
  for (std::size_t g = 0; g < partition.clusters.size(); ++g) {
    const auto& cluster = partition.clusters[g];
    // (i) intra-cluster witness within rho, unless singleton.
    if (cluster.size() > 1) {
      for (const auto& a : cluster) {
        bool has_witness = false;
        for (const auto& b : cluster) {
          if (a == b) continue;
          if (corrected_mahalanobis(component_at(nodes, a),
                                    component_at(nodes, b)) <= rho) {
            has_witness = true;
            break;
          }
        }
        if (!has_witness) return false;
      }
    }
    // (ii) strict separation from every other cluster.
    for (std::size_t h = g + 1; h < partition.clusters.size(); ++h) {
      for (const auto& a : cluster) {
        for (const auto& b : partition.clusters[h]) {
          if (corrected_mahalanobis(component_at(nodes, a),
                                    component_at(nodes, b)) <= rho) {
            return false;
          }
        }
      }
    }
  }
  return true;
}

std::vector<SubIIDCluster> split_by_clusters(
    const std::vector<GMIntensity>& nodes, const ClusterPartition& partition,
    int n_max) {
  const int node_count = static_cast<int>(nodes.size());
  std::vector<SubIIDCluster> subs;
  subs.reserve(partition.clusters.size());
  for (std::size_t g = 0; g < partition.clusters.size(); ++g) {
    SubIIDCluster sub;
    sub.cluster_id = static_cast<int>(g);
    sub.sub_intensity.assign(static_cast<std::size_t>(node_count), {});
    for (const auto& idx : partition.clusters[g]) {
      if (idx.node < 0 || idx.node >= node_count || idx.comp < 0 ||
          idx.comp >= static_cast<int>(nodes[static_cast<std::size_t>(idx.node)].size())) {
        throw std::out_of_range("split_by_clusters: component index (" +
                                std::to_string(idx.node) + "," +
                                std::to_string(idx.comp) + ") out of range");
      }
      sub.sub_intensity[static_cast<std::size_t>(idx.node)]
          .components.push_back(component_at(nodes, idx));
    }
    sub.sub_cardinality.assign(static_cast<std::size_t>(node_count), {});
    for (int i = 0; i < node_count; ++i) {
      const auto& v = sub.sub_intensity[static_cast<std::size_t>(i)];
      if (v.empty()) continue;
      std::vector<double> weights;
      weights.reserve(v.size());
      for (const auto& gc : v.components) weights.push_back(gc.weight);
      sub.sub_cardinality[static_cast<std::size_t>(i)] =
          mb_cardinality(BernoulliSet::from_weights(weights), n_max);
      sub.participating.push_back(i);
    }
    subs.push_back(std::move(sub));
  }
  return subs;
}

IIDClusterDensity fuse_cluster(const SubIIDCluster& sub, FusionRule rule,
                               double omega) {
  if (sub.participating.empty()) {
    throw std::invalid_argument("fuse_cluster: empty cluster");
  }
  if (sub.participating.size() == 1) {
    const auto node = static_cast<std::size_t>(sub.participating.front());
    return {sub.sub_cardinality[node], sub.sub_intensity[node]};
  }
  if (sub.participating.size() != 2) {
    throw std::invalid_argument(
        "fuse_cluster: pairwise fusion supports at most two nodes per cluster");
  }
  const auto n1 = static_cast<std::size_t>(sub.participating[0]);
  const auto n2 = static_cast<std::size_t>(sub.participating[1]);
  const IIDClusterDensity d1{sub.sub_cardinality[n1], sub.sub_intensity[n1]};
  const IIDClusterDensity d2{sub.sub_cardinality[n2], sub.sub_intensity[n2]};
  return rule == FusionRule::Gci ? gci_fuse(d1, d2, omega)
                                 : aa_fuse(d1, d2, omega);
}

IIDClusterDensity robust_fuse(const IIDClusterDensity& a,
                              const IIDClusterDensity& b, FusionRule rule,
                              double omega, double rho,
                              const std::optional<GmReduceParams>& reduce,
                              int n_max) {
  const std::vector<GMIntensity> nodes{a.intensity, b.intensity};
  if (a.intensity.empty() && b.intensity.empty()) {
    return IIDClusterDensity::empty_density(n_max);
  }
  const ClusterPartition partition = cluster_components(nodes, rho);
  const std::vector<SubIIDCluster> subs =
      split_by_clusters(nodes, partition, n_max);

  IIDClusterDensity out;
  std::vector<CardinalityDistribution> cluster_cards;
  cluster_cards.reserve(subs.size());
  for (const auto& sub : subs) {
    IIDClusterDensity fused = fuse_cluster(sub, rule, omega);
    out.intensity = gm_concat(std::move(out.intensity), fused.intensity);
    cluster_cards.push_back(std::move(fused.cardinality));
  }
  out.cardinality = convolve_cardinality(cluster_cards, n_max);
  if (reduce) {
    out.intensity = gm_reduce(out.intensity, reduce->prune_threshold,
                              reduce->merge_threshold, reduce->max_components);
  }
  return out;
}

GMIntensity robust_fuse_intensity(
    const GMIntensity& a, const GMIntensity& b, FusionRule rule, double omega,
    double rho, const std::optional<GmReduceParams>& reduce) {
  const std::vector<GMIntensity> nodes{a, b};
  if (a.empty() && b.empty()) return {};
  const ClusterPartition partition = cluster_components(nodes, rho);

  GMIntensity out;
  for (const auto& cluster : partition.clusters) {
    GMIntensity v1, v2;
    for (const auto& idx : cluster) {
      (idx.node == 0 ? v1 : v2).components.push_back(component_at(nodes, idx));
    }
    if (v1.empty() || v2.empty()) {
      // Single-node cluster: copy the sub-intensity unchanged.
      out = gm_concat(std::move(out), v1.empty() ? v2 : v1);
    } else if (rule == FusionRule::Gci) {
      // Geometric average of the raw (unnormalized) sub-intensities; the
      // fused mass is carried by the component weights themselves. The
      // exact integral obeys the Hoelder bound m1^w m2^(1-w); the all-pairs
      // closed form can overshoot it for overlapping mixtures, so rescale.
      GciGmResult fused = gci_fuse_gm(v1, v2, omega);
      const double bound =
          std::pow(v1.mass(), omega) * std::pow(v2.mass(), 1.0 - omega);
      if (fused.mass > bound && fused.mass > 0.0) {
        fused.mixture = gm_scale(std::move(fused.mixture), bound / fused.mass);
      }
      out = gm_concat(std::move(out), std::move(fused.mixture));
    } else {
      out = gm_concat(std::move(out), gm_concat(gm_scale(v1, omega),
                                                gm_scale(v2, 1.0 - omega)));
    }
  }
  if (reduce) {
    out = gm_reduce(out, reduce->prune_threshold, reduce->merge_threshold,
                    reduce->max_components);
  }
  return out;
}

double chi2_cdf(double delta, int dof) {
  if (dof < 1) {
    throw std::invalid_argument("chi2_cdf: dof must be at least 1");
  }
  if (!(delta > 0.0)) return 0.0;
  const double x = 0.5 * delta;
  // Regularized lower incomplete gamma P(dof/2, x) via the exact upward
  // recurrence P(a+1, x) = P(a, x) - x^a e^-x / Gamma(a+1) from the
  // half-integer or integer base case.
  double a;
  double p;
  if (dof % 2 == 0) {
    a = 1.0;
    p = -std::expm1(-x);
  } else {
    a = 0.5;
    p = std::erf(std::sqrt(x));
  }
  const double target = 0.5 * static_cast<double>(dof);
  while (a < target - 0.25) {
    p -= std::exp(a * std::log(x) - x - std::lgamma(a + 1.0));
    a += 1.0;
  }
  return std::clamp(p, 0.0, 1.0);
}

ErrorBoundReport approximation_error_bound(
    const std::vector<GMIntensity>& nodes, const ClusterPartition& partition,
    double delta, bool with_numeric_l1, int grid_points) {
  const double rho = partition.gating_threshold;
  if (!(delta <= rho / 4.0)) {
    throw std::invalid_argument(
        "approximation_error_bound: ellipsoid-disjointness precondition "
        "requires delta <= rho/4 (delta=" +
        std::to_string(delta) + ", rho=" + std::to_string(rho) + ")");
  }
  int dim = 0;
  for (const auto& node : nodes) {
    if (!node.empty()) {
      dim = static_cast<int>(node.components.front().mean.size());
      break;
    }
  }
  ErrorBoundReport report;
  report.delta = delta;
  report.dim = dim;
  if (dim == 0) return report;

  const double tail = 1.0 - chi2_cdf(delta, dim);

  // Per-point cluster assignment: cluster of the component minimizing the
  // per-component Mahalanobis distance. Used only for the grid check.
  std::vector<GcIndex> indices = flatten_indices(nodes);
  std::vector<int> cluster_of(indices.size(), -1);
  for (std::size_t g = 0; g < partition.clusters.size(); ++g) {
    for (const auto& idx : partition.clusters[g]) {
      for (std::size_t u = 0; u < indices.size(); ++u) {
        if (indices[u] == idx) cluster_of[u] = static_cast<int>(g);
      }
    }
  }
  std::vector<Matrix> precisions;
  if (with_numeric_l1 && dim == 2) {
    precisions.reserve(indices.size());
    for (const auto& idx : indices) {
      const auto& gc = component_at(nodes, idx);
      Eigen::LLT<Matrix> llt(gc.covariance);
      if (llt.info() != Eigen::Success) {
        throw NumericError("approximation_error_bound: covariance not SPD");
      }
      precisions.push_back(llt.solve(Matrix::Identity(2, 2)));
    }
  }

  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    const double node_mass = nodes[static_cast<std::size_t>(i)].mass();
    for (int g = 0; g < static_cast<int>(partition.clusters.size()); ++g) {
      BoundEntry entry;
      entry.node = i;
      entry.cluster = g;
      entry.bound = node_mass * tail;
      report.entries.push_back(entry);
    }
  }

  if (!with_numeric_l1 || dim != 2 || indices.empty()) return report;

  // Bounding box: all means +- 6 standard deviations.
  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  for (const auto& idx : indices) {
    const auto& gc = component_at(nodes, idx);
    const double spread =
        6.0 * std::sqrt(gc.covariance.eigenvalues().real().maxCoeff());
    lo_x = std::min(lo_x, gc.mean(0) - spread);
    hi_x = std::max(hi_x, gc.mean(0) + spread);
    lo_y = std::min(lo_y, gc.mean(1) - spread);
    hi_y = std::max(hi_y, gc.mean(1) + spread);
  }
  const double dx = (hi_x - lo_x) / grid_points;
  const double dy = (hi_y - lo_y) / grid_points;
  const double cell = dx * dy;

  std::vector<double> l1(nodes.size() * partition.clusters.size(), 0.0);
  Vector x(2);
  for (int ix = 0; ix < grid_points; ++ix) {
    x(0) = lo_x + (ix + 0.5) * dx;
    for (int iy = 0; iy < grid_points; ++iy) {
      x(1) = lo_y + (iy + 0.5) * dy;
      // Assign the point, then accumulate |v_g^i - vhat_g^i| per pair.
      int assigned = -1;
      double best = 1e300;
      std::vector<double> pdf(indices.size(), 0.0);
      for (std::size_t u = 0; u < indices.size(); ++u) {
        const auto& gc = component_at(nodes, indices[u]);
        const Vector diff = x - gc.mean;
        const double d = diff.dot(precisions[u] * diff);
        if (d < best) {
          best = d;
          assigned = cluster_of[u];
        }
        pdf[u] = gc.weight * gaussian_pdf(x, gc.mean, gc.covariance);
      }
      for (int g = 0; g < static_cast<int>(partition.clusters.size()); ++g) {
        std::vector<double> split(nodes.size(), 0.0);   // 1_{X_g} v^i
        std::vector<double> clustered(nodes.size(), 0.0);  // vhat_g^i
        for (std::size_t u = 0; u < indices.size(); ++u) {
          const auto node = static_cast<std::size_t>(indices[u].node);
          if (g == assigned) split[node] += pdf[u];
          if (cluster_of[u] == g) clustered[node] += pdf[u];
        }
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          l1[i * partition.clusters.size() + static_cast<std::size_t>(g)] +=
              std::abs(split[i] - clustered[i]) * cell;
        }
      }
    }
  }
  for (auto& entry : report.entries) {
    entry.l1_numeric =
        l1[static_cast<std::size_t>(entry.node) * partition.clusters.size() +
           static_cast<std::size_t>(entry.cluster)];
  }
  return report;
}

}  // namespace mosaic
