#pragma once

// Test of max-stability of the underlying copula: under the null the
// copula satisfies C(u) = {C(u^{1/r})}^r for every r >= 1.  The observed
// deviation process is
//
//   D_r(u) = sqrt(n) * [ {c C_n(u^{1/r})}^r - c C_n(u) ],
//
// aggregated into a Cramer-von Mises statistic either over a fixed grid or
// over the pseudo-observations themselves.  c = n/(n+0.85) is a
// finite-sample rescaling of C_n applied only inside the observed
// deviation, never inside the bootstrap replicates.
//
// Replicates come from a multiplier bootstrap: with iid mean-0 variance-1
// weights Z_i, the limiting process is approximated through an n x m
// influence matrix whose (i,j) entry collects row i's contribution at
// evaluation point j, so one weight row yields one replicate via a single
// matrix-vector product.  All r in r_set share the same weights, which
// makes the combined (summed over r) statistic's replicates consistent.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evcop/empirical_copula.hpp"
#include "evcop/errors.hpp"
#include "evcop/ranks.hpp"
#include "evcop/rng.hpp"

namespace evcop {

enum class StatisticKind { GRID, PSEUDO, BOTH };  // reported as S / T
enum class MultiplierLaw { STANDARD_NORMAL, RADEMACHER };

inline const char* statistic_kind_name(StatisticKind k) {
  switch (k) {
    case StatisticKind::GRID: return "S";
    case StatisticKind::PSEUDO: return "T";
    case StatisticKind::BOTH: return "both";
  }
  return "?";
}

inline const char* multiplier_law_name(MultiplierLaw law) {
  return law == MultiplierLaw::STANDARD_NORMAL ? "standard-normal" : "rademacher";
}

struct TestConfig {
  std::vector<double> r_set{3.0, 4.0, 5.0};
  StatisticKind statistic = StatisticKind::PSEUDO;
  int num_multipliers = 1000;  // N
  int grid_per_axis = 0;       // 0 = default for the data's dimension
  MultiplierLaw law = MultiplierLaw::STANDARD_NORMAL;
  bool rescale = true;
  std::uint64_t seed = 0;
};

inline void validate_config(const TestConfig& cfg) {
  if (cfg.r_set.empty()) {
    throw std::invalid_argument("TestConfig: empty r_set");
  }
  for (double r : cfg.r_set) {
    if (!(r >= 1.0)) {
      throw UnsupportedExponent("TestConfig: aggregation exponent r = " +
                                std::to_string(r) + " < 1");
    }
  }
  if (cfg.num_multipliers < 1) {
    throw std::invalid_argument("TestConfig: num_multipliers must be >= 1");
  }
  if (cfg.grid_per_axis < 0) {
    throw std::invalid_argument("TestConfig: grid_per_axis must be >= 0");
  }
}

inline double rescale_factor(Eigen::Index n) {
  return static_cast<double>(n) / (static_cast<double>(n) + 0.85);
}

namespace detail {

// D_r at one point given the point and its componentwise r-th root.
inline double deviation_at(const EmpiricalCopula& ec, double r, const double* u,
                           const double* u_root, double c) {
  const double sqrt_n = std::sqrt(static_cast<double>(ec.n()));
  return sqrt_n * (pow_r(c * ec.eval(u_root), r) - c * ec.eval(u));
}

}  // namespace detail

inline double max_stability_deviation(const EmpiricalCopula& ec, double r,
                                      const Vector& u, double c = 1.0) {
  if (!(r >= 1.0)) {
    throw UnsupportedExponent("max_stability_deviation: r = " + std::to_string(r) + " < 1");
  }
  if (u.size() != ec.d()) {
    throw std::invalid_argument("max_stability_deviation: dimension mismatch");
  }
  std::vector<double> root(static_cast<std::size_t>(u.size()));
  for (Eigen::Index j = 0; j < u.size(); ++j) root[static_cast<std::size_t>(j)] = nth_root(u[j], r);
  return detail::deviation_at(ec, r, u.data(), root.data(), c);
}

// Grid-averaged statistic: (1/m) sum_j D_r(w_j)^2 over the grid rows.
inline double statistic_on_grid(const EmpiricalCopula& ec, double r, const EvalGrid& grid,
                                double c) {
  if (grid.d() != ec.d()) {
    throw std::invalid_argument("statistic_on_grid: grid dimension mismatch");
  }
  const Matrix rooted = grid.rooted_points(r);
  std::vector<double> w(static_cast<std::size_t>(grid.d()));
  std::vector<double> wr(w.size());
  double acc = 0.0;
  for (Eigen::Index j = 0; j < grid.m(); ++j) {
    for (Eigen::Index l = 0; l < grid.d(); ++l) {
      w[static_cast<std::size_t>(l)] = grid.points(j, l);
      wr[static_cast<std::size_t>(l)] = rooted(j, l);
    }
    const double dev = detail::deviation_at(ec, r, w.data(), wr.data(), c);
    acc += dev * dev;
  }
  return acc / static_cast<double>(grid.m());
}

// Data-averaged statistic: (1/n) sum_i D_r(U_i)^2 over the pseudo-observations.
inline double statistic_on_pseudo(const EmpiricalCopula& ec, double r, double c) {
  const Eigen::Index n = ec.n();
  const Eigen::Index d = ec.d();
  std::vector<double> w(static_cast<std::size_t>(d));
  std::vector<double> wr(w.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index l = 0; l < d; ++l) {
      w[static_cast<std::size_t>(l)] = ec.pseudo()(i, l);
      wr[static_cast<std::size_t>(l)] = nth_root(w[static_cast<std::size_t>(l)], r);
    }
    const double dev = detail::deviation_at(ec, r, w.data(), wr.data(), c);
    acc += dev * dev;
  }
  return acc / static_cast<double>(n);
}

// Multiplier weights: N iid rows of n weights with mean 0 and variance 1,
// plus the row-centered copy actually used by the bootstrap.  Row k is
// drawn from a stream derived from (seed, k), so rows are independent and
// any subset is reproducible.
struct MultiplierWeights {
  Matrix z;         // N x n
  Matrix centered;  // z with row means removed
  MultiplierLaw law = MultiplierLaw::STANDARD_NORMAL;

  int count() const { return static_cast<int>(z.rows()); }
};

inline MultiplierWeights draw_multipliers(Eigen::Index n, int count, MultiplierLaw law,
                                          std::uint64_t seed) {
  if (n < 1 || count < 1) {
    throw std::invalid_argument("draw_multipliers: need n >= 1 and count >= 1");
  }
  MultiplierWeights w;
  w.law = law;
  w.z.resize(count, n);
  for (int k = 0; k < count; ++k) {
    Rng rng(derive_seed(seed, {STREAM_MULTIPLIERS, static_cast<std::uint64_t>(k)}));
    for (Eigen::Index i = 0; i < n; ++i) {
      w.z(k, i) = law == MultiplierLaw::STANDARD_NORMAL
                      ? rng.normal()
                      : (rng.uniform() < 0.5 ? -1.0 : 1.0);
    }
  }
  w.centered = w.z;
  w.centered.colwise() -= w.z.rowwise().mean();
  return w;
}

// Influence matrix: entry (i,j) is observation i's contribution to the
// bootstrap deviation process at evaluation point j,
//
//   r {C_n(w^{1/r})}^{r-1} [ 1(U_i <= w^{1/r}) - sum_l d_l(w^{1/r}) 1(U_il <= w_l^{1/r}) ]
//     - [ 1(U_i <= w) - sum_l d_l(w) 1(U_il <= w_l) ],
//
// with d_l the estimated partial derivatives.  A replicate is then the
// squared-mean aggregation of (1/sqrt(n)) * (centered weight row) * M.
struct InfluenceMatrix {
  Matrix entries;  // n x m
  double r = 0.0;
  Matrix points;   // m x d evaluation points

  Eigen::Index n() const { return entries.rows(); }
  Eigen::Index m() const { return entries.cols(); }
};

namespace detail {

inline InfluenceMatrix build_influence_impl(const EmpiricalCopula& ec, double r,
                                            const Matrix& points, const Matrix& rooted) {
  const Eigen::Index n = ec.n();
  const Eigen::Index d = ec.d();
  const Eigen::Index m = points.rows();
  InfluenceMatrix M;
  M.r = r;
  M.points = points;
  M.entries.resize(n, m);

  std::vector<double> w(static_cast<std::size_t>(d));
  std::vector<double> wr(w.size());
  std::vector<double> deriv_w(w.size());
  std::vector<double> deriv_wr(w.size());

  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index l = 0; l < d; ++l) {
      w[static_cast<std::size_t>(l)] = points(j, l);
      wr[static_cast<std::size_t>(l)] = rooted(j, l);
    }
    const double coef = r * pow_r(ec.eval(wr.data()), r - 1.0);
    for (Eigen::Index l = 0; l < d; ++l) {
      deriv_w[static_cast<std::size_t>(l)] = ec.partial_derivative(l, w.data());
      deriv_wr[static_cast<std::size_t>(l)] = ec.partial_derivative(l, wr.data());
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      bool all_w = true;
      bool all_wr = true;
      double sum_w = 0.0;
      double sum_wr = 0.0;
      for (Eigen::Index l = 0; l < d; ++l) {
        const double uil = ec.pseudo()(i, l);
        if (uil <= wr[static_cast<std::size_t>(l)]) sum_wr += deriv_wr[static_cast<std::size_t>(l)];
        else all_wr = false;
        if (uil <= w[static_cast<std::size_t>(l)]) sum_w += deriv_w[static_cast<std::size_t>(l)];
        else all_w = false;
      }
      const double term_root = (all_wr ? 1.0 : 0.0) - sum_wr;
      const double term_plain = (all_w ? 1.0 : 0.0) - sum_w;
      M.entries(i, j) = coef * term_root - term_plain;
    }
  }
  return M;
}

}  // namespace detail

inline InfluenceMatrix build_influence_matrix(const EmpiricalCopula& ec, double r,
                                              const Matrix& points) {
  if (!(r >= 1.0)) {
    throw UnsupportedExponent("build_influence_matrix: r = " + std::to_string(r) + " < 1");
  }
  if (points.cols() != ec.d()) {
    throw std::invalid_argument("build_influence_matrix: points dimension mismatch");
  }
  Matrix rooted(points.rows(), points.cols());
  for (Eigen::Index j = 0; j < points.rows(); ++j) {
    for (Eigen::Index l = 0; l < points.cols(); ++l) {
      rooted(j, l) = nth_root(points(j, l), r);
    }
  }
  return detail::build_influence_impl(ec, r, points, rooted);
}

inline InfluenceMatrix build_influence_matrix(const EmpiricalCopula& ec, double r,
                                              const EvalGrid& grid) {
  if (!(r >= 1.0)) {
    throw UnsupportedExponent("build_influence_matrix: r = " + std::to_string(r) + " < 1");
  }
  if (grid.d() != ec.d()) {
    throw std::invalid_argument("build_influence_matrix: grid dimension mismatch");
  }
  return detail::build_influence_impl(ec, r, grid.points, grid.rooted_points(r));
}

// One replicate per weight row: (1/#points) sum_j [ (1/sqrt(n)) z~_k . M_.j ]^2.
// A single matrix product keeps row results independent of each other, so
// permuting weight rows permutes replicates bitwise.
inline std::vector<double> replicate_statistics(const InfluenceMatrix& M,
                                                const MultiplierWeights& weights) {
  const Eigen::Index n = M.n();
  const Eigen::Index m = M.m();
  if (weights.centered.cols() != n) {
    throw std::invalid_argument("replicate_statistics: weight length " +
                                std::to_string(weights.centered.cols()) +
                                " does not match n = " + std::to_string(n));
  }
  const Matrix prod = weights.centered * M.entries;  // N x m
  const double denom = static_cast<double>(n) * static_cast<double>(m);
  std::vector<double> reps(static_cast<std::size_t>(prod.rows()));
  for (Eigen::Index k = 0; k < prod.rows(); ++k) {
    reps[static_cast<std::size_t>(k)] = prod.row(k).squaredNorm() / denom;
  }
  return reps;
}

// Proportion of replicates at least as large as the observed value.
inline double p_value(double observed, const std::vector<double>& replicates) {
  if (replicates.empty()) {
    throw std::invalid_argument("p_value: no replicates");
  }
  std::size_t count = 0;
  for (double rep : replicates) count += rep >= observed;
  return static_cast<double>(count) / static_cast<double>(replicates.size());
}

// "S(3,4,5)" style label for reports and tables.
inline std::string format_exponent(double r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", r);
  return buf;
}

inline std::string statistic_label(char family, const std::vector<double>& rs) {
  std::string out(1, family);
  out += '(';
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (i) out += ',';
    out += format_exponent(rs[i]);
  }
  out += ')';
  return out;
}

// Results for one statistic family (grid- or data-averaged): one entry per
// r plus the combined (summed over r_set) statistic.
struct StatisticResult {
  char family = 'T';  // 'S' or 'T'
  std::vector<double> r_set;
  std::vector<double> observed;                  // per r
  std::vector<double> p_values;                  // per r
  std::vector<std::vector<double>> replicates;   // per r, length N
  std::vector<std::string> labels;               // per r
  double combined_observed = 0.0;
  double combined_p = 1.0;
  std::vector<double> combined_replicates;
  std::string combined_label;
};

struct TestResult {
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  TestConfig config;  // effective configuration (grid resolved)
  std::vector<StatisticResult> stats;  // GRID first when both requested
  std::vector<std::string> warnings;
};

// Full test on one set of pseudo-observations.  Deterministic given
// cfg.seed; the multiplier weights are drawn once and shared by every r
// and both statistic families.
inline TestResult run_test(const PseudoObservations& pseudo, TestConfig cfg) {
  validate_config(cfg);
  const Eigen::Index n = pseudo.n();
  const Eigen::Index d = pseudo.d();
  if (cfg.grid_per_axis == 0) cfg.grid_per_axis = default_grid_per_axis(static_cast<int>(d));

  TestResult result;
  result.n = n;
  result.d = d;
  result.config = cfg;
  result.warnings = pseudo.warnings;

  const EmpiricalCopula ec(pseudo);
  const double c = cfg.rescale ? rescale_factor(n) : 1.0;
  const MultiplierWeights weights =
      draw_multipliers(n, cfg.num_multipliers, cfg.law, cfg.seed);

  const bool want_grid =
      cfg.statistic == StatisticKind::GRID || cfg.statistic == StatisticKind::BOTH;
  const bool want_pseudo =
      cfg.statistic == StatisticKind::PSEUDO || cfg.statistic == StatisticKind::BOTH;

  EvalGrid grid;
  if (want_grid) grid = make_grid(static_cast<int>(d), cfg.grid_per_axis, cfg.r_set);

  for (int pass = 0; pass < 2; ++pass) {
    const bool grid_pass = pass == 0;
    if (grid_pass && !want_grid) continue;
    if (!grid_pass && !want_pseudo) continue;

    StatisticResult sr;
    sr.family = grid_pass ? 'S' : 'T';
    sr.r_set = cfg.r_set;
    sr.combined_replicates.assign(static_cast<std::size_t>(cfg.num_multipliers), 0.0);

    for (double r : cfg.r_set) {
      const double observed = grid_pass ? statistic_on_grid(ec, r, grid, c)
                                        : statistic_on_pseudo(ec, r, c);
      const InfluenceMatrix M = grid_pass ? build_influence_matrix(ec, r, grid)
                                          : build_influence_matrix(ec, r, pseudo.u);
      std::vector<double> reps = replicate_statistics(M, weights);

      sr.observed.push_back(observed);
      sr.p_values.push_back(p_value(observed, reps));
      sr.labels.push_back(statistic_label(sr.family, {r}));
      for (std::size_t k = 0; k < reps.size(); ++k) sr.combined_replicates[k] += reps[k];
      sr.replicates.push_back(std::move(reps));
      sr.combined_observed += observed;
    }
    sr.combined_label = statistic_label(sr.family, sr.r_set);
    sr.combined_p = p_value(sr.combined_observed, sr.combined_replicates);
    result.stats.push_back(std::move(sr));
  }
  return result;
}

}  // namespace evcop
