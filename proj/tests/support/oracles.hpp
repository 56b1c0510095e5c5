#pragma once

// Reference implementations used to cross-check fast paths.  Everything
// here is written straight from the definitions, against the public
// empirical-copula interface only, with plain loops.

#include <cmath>
#include <vector>

#include "evcop/empirical_copula.hpp"
#include "evcop/max_stability.hpp"

namespace oracle {

// Multiplier empirical process at u: (1/sqrt n) sum_i zc_i 1(U_i <= u).
inline double alpha(const evcop::EmpiricalCopula& ec, const std::vector<double>& zc,
                    const std::vector<double>& u) {
  const auto n = ec.n();
  const auto d = ec.d();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    bool dominated = true;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (ec.pseudo()(i, j) > u[static_cast<std::size_t>(j)]) {
        dominated = false;
        break;
      }
    }
    if (dominated) acc += zc[static_cast<std::size_t>(i)];
  }
  return acc / std::sqrt(static_cast<double>(n));
}

// Bootstrap copula process: alpha(u) - sum_j dC/du_j(u) alpha(1,..,u_j,..,1).
inline double copula_process(const evcop::EmpiricalCopula& ec, const std::vector<double>& zc,
                             const std::vector<double>& u) {
  const auto d = ec.d();
  double acc = alpha(ec, zc, u);
  std::vector<double> margin(static_cast<std::size_t>(d), 1.0);
  for (Eigen::Index j = 0; j < d; ++j) {
    margin.assign(static_cast<std::size_t>(d), 1.0);
    margin[static_cast<std::size_t>(j)] = u[static_cast<std::size_t>(j)];
    acc -= ec.partial_derivative(j, u.data()) * alpha(ec, zc, margin);
  }
  return acc;
}

// Bootstrap deviation process at w for exponent r.
inline double deviation_process(const evcop::EmpiricalCopula& ec, const std::vector<double>& zc,
                                double r, const std::vector<double>& w) {
  const auto d = ec.d();
  std::vector<double> wr(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    wr[static_cast<std::size_t>(j)] = std::pow(w[static_cast<std::size_t>(j)], 1.0 / r);
  }
  const double cnr = ec.eval(wr.data());
  return r * std::pow(cnr, r - 1.0) * copula_process(ec, zc, wr) - copula_process(ec, zc, w);
}

// One replicate per centered weight row: mean over points of the squared
// deviation process.
inline std::vector<double> replicates(const evcop::EmpiricalCopula& ec,
                                      const evcop::MultiplierWeights& weights, double r,
                                      const evcop::Matrix& points) {
  const auto n = ec.n();
  const auto m = points.rows();
  const auto d = points.cols();
  std::vector<double> out;
  for (Eigen::Index k = 0; k < weights.centered.rows(); ++k) {
    std::vector<double> zc(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) zc[static_cast<std::size_t>(i)] = weights.centered(k, i);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      std::vector<double> w(static_cast<std::size_t>(d));
      for (Eigen::Index l = 0; l < d; ++l) w[static_cast<std::size_t>(l)] = points(j, l);
      const double dev = deviation_process(ec, zc, r, w);
      acc += dev * dev;
    }
    out.push_back(acc / static_cast<double>(m));
  }
  return out;
}

}  // namespace oracle
