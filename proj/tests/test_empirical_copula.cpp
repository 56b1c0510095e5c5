#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "evcop/copulas.hpp"
#include "evcop/empirical_copula.hpp"

using namespace evcop;

namespace {

// Pseudo-observations of the diagonal toy data set: ranks (1,1),(2,2),
// so rows (1/3,1/3),(2/3,2/3).
PseudoObservations toy_two() {
  Matrix ranks(2, 2);
  ranks << 1, 1, 2, 2;
  return pseudo_observations(ranks);
}

PseudoObservations diag_four() {
  Matrix ranks(4, 2);
  ranks << 1, 1, 2, 2, 3, 3, 4, 4;
  return pseudo_observations(ranks);
}

PseudoObservations random_pseudo(std::mt19937_64& gen, Eigen::Index n, Eigen::Index d) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix vals(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) vals(i, j) = unif(gen);
  const SampleMatrix x(vals);
  return pseudo_observations(compute_ranks(x, TiePolicy::NONE));
}

}  // namespace

TEST_CASE("empirical copula counts dominated rows") {
  const EmpiricalCopula ec(toy_two());
  Vector u(2);
  u << 0.5, 0.5;
  CHECK(ec(u) == 0.5);
  u << 1.0, 1.0;
  CHECK(ec(u) == 1.0);
  u << 0.0, 0.7;
  CHECK(ec(u) == 0.0);
  // Boundary equality counts: 1/3 <= 1/3.
  u << 1.0 / 3.0, 1.0 / 3.0;
  CHECK(ec(u) == 0.5);
  u << 1.0 / 3.0, 0.2;
  CHECK(ec(u) == 0.0);
}

TEST_CASE("empirical copula validates the point") {
  const EmpiricalCopula ec(toy_two());
  Vector u(2);
  u << -0.1, 0.5;
  CHECK_THROWS_AS(ec(u), std::invalid_argument);
  u << 0.5, 1.1;
  CHECK_THROWS_AS(ec(u), std::invalid_argument);
  Vector wrong(3);
  wrong << 0.5, 0.5, 0.5;
  CHECK_THROWS_AS(ec(wrong), std::invalid_argument);
  u << 0.5, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ec(u), std::invalid_argument);
}

TEST_CASE("empirical copula is monotone with range [0,1]") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const PseudoObservations p = random_pseudo(gen, 40, 3);
  const EmpiricalCopula ec(p);
  for (int trial = 0; trial < 200; ++trial) {
    Vector a(3), b(3);
    for (int j = 0; j < 3; ++j) {
      const double x = unif(gen);
      const double y = unif(gen);
      a[j] = std::min(x, y);
      b[j] = std::max(x, y);
    }
    const double ca = ec(a);
    const double cb = ec(b);
    CHECK(ca >= 0.0);
    CHECK(cb <= 1.0);
    CHECK(ca <= cb);
  }
}

TEST_CASE("partial derivative on the diagonal toy data") {
  // n = 4, pseudo-observations (0.2,0.2)...(0.8,0.8); window half-width
  // n^{-1/2} = 0.5.  At u = (0.5, 1): window [0,1], C_n(1,1) - C_n(0,1) = 1,
  // denominator 1 either way.
  const EmpiricalCopula ec(diag_four());
  Vector u(2);
  u << 0.5, 1.0;
  CHECK(ec.partial_derivative(0, u) == 1.0);
  CHECK(ec.partial_derivative_fixed(0, u) == 1.0);
}

TEST_CASE("partial derivative matches a direct finite-difference oracle") {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 5 + static_cast<Eigen::Index>(gen() % 60);
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(gen() % 2);
    const PseudoObservations p = random_pseudo(gen, n, d);
    const EmpiricalCopula ec(p);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));

    Vector u(d);
    for (Eigen::Index j = 0; j < d; ++j) u[j] = unif(gen);
    const auto axis = static_cast<Eigen::Index>(gen() % static_cast<std::uint64_t>(d));

    Vector hi = u, lo = u;
    hi[axis] = std::min(u[axis] + s, 1.0);
    lo[axis] = std::max(u[axis] - s, 0.0);
    const double expected = (ec(hi) - ec(lo)) / (u[axis] + s <= 1.0 && u[axis] - s >= 0.0
                                                     ? 2.0 * s
                                                     : hi[axis] - lo[axis]);
    CHECK(ec.partial_derivative(axis, u) == expected);
    const double expected_fixed = (ec(hi) - ec(lo)) / (2.0 * s);
    CHECK(ec.partial_derivative_fixed(axis, u) == expected_fixed);
  }
}

TEST_CASE("partial derivative bound and interior agreement") {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  EmpiricalCopula ec(random_pseudo(gen, 30, 2));
  double s = 1.0 / std::sqrt(30.0);
  for (int trial = 0; trial < 500; ++trial) {
    if (trial % 100 == 0) {
      const Eigen::Index n = 4 + static_cast<Eigen::Index>(gen() % 80);
      ec = EmpiricalCopula(random_pseudo(gen, n, 2 + static_cast<Eigen::Index>(gen() % 3)));
      s = 1.0 / std::sqrt(static_cast<double>(ec.n()));
    }
    Vector u(ec.d());
    for (Eigen::Index j = 0; j < ec.d(); ++j) {
      const double roll = unif(gen);
      u[j] = roll < 0.1 ? 0.0 : roll < 0.2 ? 1.0 : unif(gen);
    }
    const auto axis = static_cast<Eigen::Index>(gen() % static_cast<std::uint64_t>(ec.d()));
    const double v = ec.partial_derivative(axis, u);
    CHECK(v >= 0.0);
    CHECK(v <= 5.0);

    if (s <= 0.5) {
      u[axis] = s + (1.0 - 2.0 * s) * unif(gen);  // interior of [s, 1-s]
      const double hat = ec.partial_derivative(axis, u);
      const double fixed = ec.partial_derivative_fixed(axis, u);
      CHECK(hat == fixed);
    }
  }
}

TEST_CASE("derivative estimate converges to the true derivative under independence") {
  // Under the independence copula the partial derivative in direction 1 is
  // u_2; the median max-error over an interior grid must shrink from
  // n = 100 to n = 1600.
  CopulaModel indep;
  indep.family = Family::INDEPENDENCE;
  indep.d = 2;
  auto median_err = [&indep](Eigen::Index n, std::uint64_t seed_base) {
    std::vector<double> errs;
    for (int rep = 0; rep < 50; ++rep) {
      const SampleMatrix x = sample(indep, n, seed_base + static_cast<std::uint64_t>(rep));
      const EmpiricalCopula ec(pseudo_observations(compute_ranks(x, TiePolicy::NONE)));
      double worst = 0.0;
      for (double a = 0.2; a < 0.85; a += 0.2) {
        for (double b = 0.2; b < 0.85; b += 0.2) {
          Vector u(2);
          u << a, b;
          worst = std::max(worst, std::fabs(ec.partial_derivative(0, u) - b));
        }
      }
      errs.push_back(worst);
    }
    std::sort(errs.begin(), errs.end());
    return errs[errs.size() / 2];
  };
  const double err_small = median_err(100, 900);
  const double err_large = median_err(1600, 7700);
  CHECK(err_large < err_small);
}

TEST_CASE("grid layout, axis coordinates and ordering") {
  const EvalGrid grid = make_grid(2, 2, {2.0});
  REQUIRE(grid.m() == 4);
  REQUIRE(grid.d() == 2);
  const double a = 1.0 / 3.0;
  const double b = 2.0 / 3.0;
  CHECK(grid.points(0, 0) == a);
  CHECK(grid.points(0, 1) == a);
  CHECK(grid.points(1, 0) == a);
  CHECK(grid.points(1, 1) == b);
  CHECK(grid.points(2, 0) == b);
  CHECK(grid.points(2, 1) == a);
  CHECK(grid.points(3, 0) == b);
  CHECK(grid.points(3, 1) == b);

  const EvalGrid big = make_grid(3, 13, {3.0, 4.0, 5.0});
  CHECK(big.m() == 13 * 13 * 13);
  CHECK(big.axis.front() == 1.0 / 14.0);
  CHECK(big.axis.back() == 13.0 / 14.0);
  // Lexicographic: last axis fastest.
  CHECK(big.points(0, 2) == 1.0 / 14.0);
  CHECK(big.points(1, 2) == 2.0 / 14.0);
  CHECK(big.points(13, 1) == 2.0 / 14.0);
  CHECK(big.points(13, 2) == 1.0 / 14.0);
}

TEST_CASE("grid rooted points use cached axis powers") {
  const EvalGrid grid = make_grid(2, 5, {3.0});
  const Matrix rooted = grid.rooted_points(3.0);
  for (Eigen::Index i = 0; i < grid.m(); ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      CHECK(rooted(i, j) == std::pow(grid.points(i, j), 1.0 / 3.0));
    }
  }
  // Uncached exponent still works.
  const Matrix fresh = grid.rooted_points(7.0);
  CHECK(fresh(0, 0) == std::pow(1.0 / 6.0, 1.0 / 7.0));
  // r = 1 is the identity, bitwise.
  const Matrix same = grid.rooted_points(1.0);
  CHECK(same == grid.points);
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(make_grid(1, 4, {3.0}), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(2, 0, {3.0}), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(2, 4, {0.5}), UnsupportedExponent);
  CHECK_THROWS_AS(make_grid(4, 100, {3.0}), std::invalid_argument);  // 10^8 points
  CHECK_NOTHROW(make_grid(2, 44, {3.0, 4.0, 5.0}));
}

TEST_CASE("default grid resolution by dimension") {
  CHECK(default_grid_per_axis(2) == 44);
  CHECK(default_grid_per_axis(3) == 13);
  CHECK(default_grid_per_axis(4) == 7);
  CHECK(default_grid_per_axis(5) == 5);
}
