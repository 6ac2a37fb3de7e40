#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "mosaic/cardinality.hpp"
#include "mosaic/metrics.hpp"

using namespace mosaic;

namespace {

// Oracle: assignment minimum by explicit permutation search (n <= 6).
double brute_force_assignment(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      total += cost(i, perm[static_cast<std::size_t>(i)]);
    }
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::mt19937 rng(61);

std::vector<Eigen::Vector2d> random_set(int max_size, double extent) {
  std::uniform_int_distribution<int> size(0, max_size);
  std::uniform_real_distribution<double> pos(-extent, extent);
  std::vector<Eigen::Vector2d> out(static_cast<std::size_t>(size(rng)));
  for (auto& p : out) p = Eigen::Vector2d(pos(rng), pos(rng));
  return out;
}

}  // namespace

TEST_CASE("ospa base cases") {
  const OspaParams params;  // c = 600, p = 1
  CHECK(ospa({}, {}, params) == 0.0);
  const std::vector<Eigen::Vector2d> one{{100.0, 50.0}};
  CHECK(ospa(one, {}, params) == doctest::Approx(600.0));
  CHECK(ospa({}, one, params) == doctest::Approx(600.0));
  const std::vector<Eigen::Vector2d> other{{200.0, 50.0}};
  CHECK(ospa(one, other, params) == doctest::Approx(100.0));
  CHECK(ospa(one, one, params) == 0.0);
}

TEST_CASE("ospa handles cardinality mismatches") {
  const OspaParams params;
  const std::vector<Eigen::Vector2d> x{{0.0, 0.0}};
  const std::vector<Eigen::Vector2d> y{{0.0, 0.0}, {10.0, 0.0}};
  // One perfect match plus one unmatched element: (0 + 600) / 2.
  CHECK(ospa(x, y, params) == doctest::Approx(300.0));
}

TEST_CASE("ospa is a metric on random instances") {
  const OspaParams params;
  for (int trial = 0; trial < 300; ++trial) {
    const auto x = random_set(5, 700.0);
    const auto y = random_set(5, 700.0);
    const auto z = random_set(5, 700.0);
    const double dxy = ospa(x, y, params);
    const double dyx = ospa(y, x, params);
    CHECK(dxy == doctest::Approx(dyx).epsilon(1e-12));
    CHECK(dxy <= params.cutoff + 1e-12);
    CHECK(ospa(x, x, params) == 0.0);
    // Triangle inequality.
    CHECK(dxy <= ospa(x, z, params) + ospa(z, y, params) + 1e-9);
    if (x.empty() != y.empty()) CHECK(dxy == doctest::Approx(params.cutoff));
  }
}

TEST_CASE("hungarian assignment matches brute force") {
  std::uniform_real_distribution<double> c(0.0, 10.0);
  std::uniform_int_distribution<int> size(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = size(rng);
    Matrix cost(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) cost(i, j) = c(rng);
    }
    CHECK(min_cost_assignment(cost) ==
          doctest::Approx(brute_force_assignment(cost)).epsilon(1e-12));
  }
}

TEST_CASE("ospa with order two") {
  OspaParams params;
  params.cutoff = 100.0;
  params.order = 2.0;
  const std::vector<Eigen::Vector2d> x{{0.0, 0.0}, {50.0, 0.0}};
  const std::vector<Eigen::Vector2d> y{{3.0, 4.0}, {50.0, 0.0}};
  // sqrt((5^2 + 0^2) / 2)
  CHECK(ospa(x, y, params) == doctest::Approx(std::sqrt(12.5)));
}

TEST_CASE("extract_estimates follows the MAP cardinality") {
  IIDClusterDensity d;
  d.cardinality = CardinalityDistribution::delta(0);
  CHECK(extract_estimates(d).empty());

  GaussianComponent gc;
  gc.weight = 0.9;
  gc.mean = Vector::Zero(4);
  gc.mean << 7.0, 0.0, -2.0, 0.0;
  gc.covariance = Matrix::Identity(4, 4);
  d.intensity.components.push_back(gc);
  d.cardinality.probs = {0.1, 0.9};
  const auto one = extract_estimates(d);
  REQUIRE(one.size() == 1);
  CHECK(one[0](0) == doctest::Approx(7.0));
  CHECK(one[0](1) == doctest::Approx(-2.0));

  // Three components, MAP count 2: take the two largest weights.
  IIDClusterDensity three;
  three.cardinality.probs = {0.0, 0.2, 0.8};
  for (double w : {0.9, 0.8, 0.1}) {
    GaussianComponent c;
    c.weight = w;
    c.mean = Vector::Zero(4);
    c.mean << w * 100.0, 0.0, 0.0, 0.0;
    c.covariance = Matrix::Identity(4, 4);
    three.intensity.components.push_back(c);
  }
  const auto two = extract_estimates(three);
  REQUIRE(two.size() == 2);
  CHECK(two[0](0) == doctest::Approx(90.0));
  CHECK(two[1](0) == doctest::Approx(80.0));

  // MAP count beyond the component count returns what exists.
  IIDClusterDensity over;
  over.cardinality = CardinalityDistribution::delta(3);
  over.intensity = three.intensity;
  CHECK(extract_estimates(over).size() == 3);
}
