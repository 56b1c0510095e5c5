#pragma once

// Empirical copula, finite-difference partial derivative estimators, and
// the evaluation grid used by the grid-averaged test statistic.
//
// The derivative estimator uses a window of half-width n^{-1/2} around the
// target coordinate, clamped to [0,1].  When neither clamp is active the
// denominator is taken as exactly 2 n^{-1/2} (not the difference of the
// clamped endpoints), so the adaptive and fixed-denominator variants agree
// bitwise on interior points.  The estimator is bounded by 5: the window
// can contain at most (width (n+1) + 1) of the n rescaled ranks and the
// denominator is at least n^{-1/2}.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "evcop/errors.hpp"
#include "evcop/ranks.hpp"

namespace evcop {

// u^{1/r} and y^r with the r == 1 case returned unchanged, so identities
// that hold exactly at r = 1 stay exact in floating point.
inline double nth_root(double u, double r) {
  return r == 1.0 ? u : std::pow(u, 1.0 / r);
}
inline double pow_r(double y, double r) {
  return r == 1.0 ? y : std::pow(y, r);
}

class EmpiricalCopula {
 public:
  explicit EmpiricalCopula(const PseudoObservations& p)
      : u_(p.u), n_(p.u.rows()), d_(p.u.cols()),
        inv_sqrt_n_(1.0 / std::sqrt(static_cast<double>(p.u.rows()))) {}

  Eigen::Index n() const { return n_; }
  Eigen::Index d() const { return d_; }
  const Matrix& pseudo() const { return u_; }

  // C_n(u) = (1/n) #{i : U_i <= u componentwise}.
  double eval(const double* u) const {
    validate_point(u);
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      bool dominated = true;
      for (Eigen::Index j = 0; j < d_; ++j) {
        if (u_(i, j) > u[j]) {
          dominated = false;
          break;
        }
      }
      count += dominated;
    }
    return static_cast<double>(count) / static_cast<double>(n_);
  }

  double eval(const Vector& u) const {
    check_size(u.size());
    return eval(u.data());
  }
  double operator()(const Vector& u) const { return eval(u); }

  // Finite-difference estimate of the partial derivative of the copula in
  // direction `axis` at u; window endpoints clamped to [0,1], denominator
  // adapted to the clamped window.  Bounded by [0,5].
  double partial_derivative(Eigen::Index axis, const double* u) const {
    return derivative_impl(axis, u, /*fixed_denominator=*/false);
  }
  double partial_derivative(Eigen::Index axis, const Vector& u) const {
    check_size(u.size());
    return partial_derivative(axis, u.data());
  }

  // Variant with the denominator fixed at 2 n^{-1/2} even when a clamp is
  // active.  Coincides bitwise with partial_derivative whenever the window
  // lies inside [0,1].
  double partial_derivative_fixed(Eigen::Index axis, const double* u) const {
    return derivative_impl(axis, u, /*fixed_denominator=*/true);
  }
  double partial_derivative_fixed(Eigen::Index axis, const Vector& u) const {
    check_size(u.size());
    return partial_derivative_fixed(axis, u.data());
  }

 private:
  void check_size(Eigen::Index len) const {
    if (len != d_) {
      throw std::invalid_argument("EmpiricalCopula: point has dimension " +
                                  std::to_string(len) + ", data has " + std::to_string(d_));
    }
  }

  void validate_point(const double* u) const {
    for (Eigen::Index j = 0; j < d_; ++j) {
      if (!(u[j] >= 0.0 && u[j] <= 1.0)) {
        throw std::invalid_argument("EmpiricalCopula: coordinate " + std::to_string(j + 1) +
                                    " = " + std::to_string(u[j]) + " outside [0,1]");
      }
    }
  }

  double derivative_impl(Eigen::Index axis, const double* u, bool fixed_denominator) const {
    if (axis < 0 || axis >= d_) {
      throw std::invalid_argument("EmpiricalCopula: axis " + std::to_string(axis) +
                                  " out of range for d = " + std::to_string(d_));
    }
    validate_point(u);
    const double s = inv_sqrt_n_;
    const double uj = u[axis];
    const double up_raw = uj + s;
    const double lo_raw = uj - s;
    const double up = up_raw < 1.0 ? up_raw : 1.0;
    const double lo = lo_raw > 0.0 ? lo_raw : 0.0;
    const double denom =
        (fixed_denominator || (up_raw <= 1.0 && lo_raw >= 0.0)) ? 2.0 * s : up - lo;

    std::vector<double> point(u, u + d_);
    point[static_cast<std::size_t>(axis)] = up;
    const double c_up = eval(point.data());
    point[static_cast<std::size_t>(axis)] = lo;
    const double c_lo = eval(point.data());
    return (c_up - c_lo) / denom;
  }

  Matrix u_;
  Eigen::Index n_;
  Eigen::Index d_;
  double inv_sqrt_n_;
};

// Cartesian evaluation grid with g points per axis at i/(g+1), i = 1..g,
// rows in lexicographic order (last axis fastest).  Axis roots c^{1/r} are
// cached per exponent at construction.
struct EvalGrid {
  Matrix points;                                   // m x d
  int per_axis = 0;                                // g
  std::vector<double> axis;                        // the g coordinates
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> axis_index;  // m x d
  std::vector<std::pair<double, std::vector<double>>> axis_roots;

  Eigen::Index m() const { return points.rows(); }
  Eigen::Index d() const { return points.cols(); }

  // points^{1/r}, assembled from the per-axis cache (computed fresh for an
  // exponent that was not requested at construction).
  Matrix rooted_points(double r) const {
    const std::vector<double>* roots = nullptr;
    for (const auto& [rr, vals] : axis_roots) {
      if (rr == r) {
        roots = &vals;
        break;
      }
    }
    std::vector<double> fresh;
    if (roots == nullptr) {
      fresh.reserve(axis.size());
      for (double c : axis) fresh.push_back(nth_root(c, r));
      roots = &fresh;
    }
    Matrix out(points.rows(), points.cols());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      for (Eigen::Index j = 0; j < points.cols(); ++j) {
        out(i, j) = (*roots)[static_cast<std::size_t>(axis_index(i, j))];
      }
    }
    return out;
  }
};

inline EvalGrid make_grid(int d, int g, const std::vector<double>& r_set) {
  if (d < 2) throw std::invalid_argument("make_grid: d must be at least 2");
  if (g < 1) throw std::invalid_argument("make_grid: g must be at least 1");
  for (double r : r_set) {
    if (!(r >= 1.0)) {
      throw UnsupportedExponent("make_grid: aggregation exponent r = " + std::to_string(r) +
                                " < 1");
    }
  }
  double m_check = 1.0;
  for (int j = 0; j < d; ++j) m_check *= g;
  if (m_check > 2e7) {
    throw std::invalid_argument("make_grid: g^d = " + std::to_string(m_check) + " too large");
  }
  const auto m = static_cast<Eigen::Index>(m_check);

  EvalGrid grid;
  grid.per_axis = g;
  grid.axis.reserve(static_cast<std::size_t>(g));
  for (int i = 1; i <= g; ++i) {
    grid.axis.push_back(static_cast<double>(i) / static_cast<double>(g + 1));
  }
  for (double r : r_set) {
    bool seen = false;
    for (const auto& [rr, vals] : grid.axis_roots) seen = seen || rr == r;
    if (seen) continue;
    std::vector<double> roots;
    roots.reserve(grid.axis.size());
    for (double c : grid.axis) roots.push_back(nth_root(c, r));
    grid.axis_roots.emplace_back(r, std::move(roots));
  }

  grid.points.resize(m, d);
  grid.axis_index.resize(m, d);
  std::vector<int> odo(static_cast<std::size_t>(d), 0);
  for (Eigen::Index row = 0; row < m; ++row) {
    for (int j = 0; j < d; ++j) {
      grid.axis_index(row, j) = odo[static_cast<std::size_t>(j)];
      grid.points(row, j) = grid.axis[static_cast<std::size_t>(odo[static_cast<std::size_t>(j)])];
    }
    for (int j = d - 1; j >= 0; --j) {
      if (++odo[static_cast<std::size_t>(j)] < g) break;
      odo[static_cast<std::size_t>(j)] = 0;
    }
  }
  return grid;
}

// Default grid resolution per dimension; m = g^d stays near 2000.
inline int default_grid_per_axis(int d) {
  switch (d) {
    case 2: return 44;
    case 3: return 13;
    case 4: return 7;
    case 5: return 5;
    default: return 3;
  }
}

}  // namespace evcop
