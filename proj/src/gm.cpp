#include "mosaic/gm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mosaic {

double gaussian_log_pdf(const Vector& x, const Vector& mean,
                        const Matrix& cov) {
  const auto d = static_cast<double>(x.size());
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericError("gaussian_log_pdf: covariance is not positive definite");
  }
  const Vector diff = x - mean;
  const Vector whitened = llt.matrixL().solve(diff);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    log_det += 2.0 * std::log(llt.matrixL()(i, i));
  }
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det +
                 whitened.squaredNorm());
}

double gaussian_pdf(const Vector& x, const Vector& mean, const Matrix& cov) {
  return std::exp(gaussian_log_pdf(x, mean, cov));
}

double gm_evaluate(const GMIntensity& v, const Vector& x) {
  double value = 0.0;
  for (const auto& gc : v.components) {
    if (gc.weight == 0.0) continue;
    value += gc.weight * gaussian_pdf(x, gc.mean, gc.covariance);
  }
  return value;
}

GMIntensity gm_scale(GMIntensity v, double factor) {
  for (auto& gc : v.components) gc.weight *= factor;
  return v;
}

GMIntensity gm_concat(GMIntensity a, const GMIntensity& b) {
  a.components.insert(a.components.end(), b.components.begin(),
                      b.components.end());
  return a;
}

GMIntensity gm_reduce(const GMIntensity& v, double prune_threshold,
                      double merge_threshold, int max_components) {
  if (prune_threshold < 0.0 || merge_threshold < 0.0) {
    throw std::invalid_argument("gm_reduce: thresholds must be nonnegative");
  }
  std::vector<GaussianComponent> pool;
  pool.reserve(v.size());
  for (const auto& gc : v.components) {
    if (gc.weight >= prune_threshold) pool.push_back(gc);
  }

  GMIntensity reduced;
  std::vector<bool> used(pool.size(), false);
  std::vector<Eigen::LLT<Matrix>> llts;
  llts.reserve(pool.size());
  for (const auto& gc : pool) llts.emplace_back(gc.covariance);

  for (std::size_t merged = 0; merged < pool.size();) {
    // Pivot: highest remaining weight (first index wins ties).
    std::size_t pivot = pool.size();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!used[i] && (pivot == pool.size() ||
                       pool[i].weight > pool[pivot].weight)) {
        pivot = i;
      }
    }
    std::vector<std::size_t> group;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (used[i]) continue;
      if (i == pivot) {
        group.push_back(i);
        continue;
      }
      if (llts[i].info() != Eigen::Success) {
        throw NumericError("gm_reduce: component covariance is not positive definite");
      }
      const Vector diff = pool[i].mean - pool[pivot].mean;
      if (llts[i].matrixL().solve(diff).squaredNorm() <= merge_threshold) {
        group.push_back(i);
      }
    }
    if (group.size() == 1) {
      reduced.components.push_back(pool[pivot]);
      used[pivot] = true;
      ++merged;
      continue;
    }
    GaussianComponent m;
    m.weight = 0.0;
    for (std::size_t i : group) m.weight += pool[i].weight;
    m.mean = Vector::Zero(pool[pivot].mean.size());
    for (std::size_t i : group) m.mean += pool[i].weight * pool[i].mean;
    m.mean /= m.weight;
    m.covariance = Matrix::Zero(pool[pivot].mean.size(), pool[pivot].mean.size());
    for (std::size_t i : group) {
      const Vector diff = m.mean - pool[i].mean;
      m.covariance +=
          pool[i].weight * (pool[i].covariance + diff * diff.transpose());
    }
    m.covariance /= m.weight;
    reduced.components.push_back(std::move(m));
    for (std::size_t i : group) used[i] = true;
    merged += group.size();
  }

  if (static_cast<int>(reduced.size()) > max_components) {
    std::stable_sort(reduced.components.begin(), reduced.components.end(),
                     [](const GaussianComponent& a, const GaussianComponent& b) {
                       return a.weight > b.weight;
                     });
    reduced.components.resize(static_cast<std::size_t>(max_components));
  }
  return reduced;
}

GMIntensity gm_reduce(const GMIntensity& v, const GmReduceParams& params) {
  return gm_reduce(v, params.prune_threshold, params.merge_threshold,
                   params.max_components);
}

}  // namespace mosaic
