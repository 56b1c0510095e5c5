#pragma once

// Copula families for the Monte Carlo study: samplers, Kendall's tau
// calibration, and an O(n log n) empirical tau.
//
// Archimedean families (Gumbel-Hougaard, Clayton, Frank theta > 0) are
// sampled through their frailty representation: draw V, then
// U_j = psi(E_j / V) with E_j iid unit exponentials and psi the generator
// inverse.  Elliptical families use a Cholesky factor of the
// equicorrelation matrix plus marginal cdf transforms.  Plackett and
// negative-theta Frank (both bivariate) use conditional inversion.
// The Khoudraji device makes an asymmetric extreme-value copula out of a
// Gumbel-Hougaard base: U_j = max(A_j^{1/lambda_j}, B_j^{1/(1-lambda_j)}).
//
// tau calibration: closed forms where they exist; Frank inverts
// tau(theta) = 1 - (4/theta)(1 - D1(theta)) with D1 the first Debye
// function; Plackett inverts a 2-D Gauss-Legendre evaluation of
// tau(theta) = 1 - 4 int dC/du dC/dv du dv.  Both bisections are driven
// to a tau residual far below the 1e-8 contract.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "evcop/errors.hpp"
#include "evcop/ranks.hpp"
#include "evcop/rng.hpp"

namespace evcop {

enum class Family {
  GUMBEL_HOUGAARD,
  KHOUDRAJI_GH,
  CLAYTON,
  FRANK,
  NORMAL,
  STUDENT_T4,
  PLACKETT,
  INDEPENDENCE,
  COMONOTONE,
};

inline const char* family_name(Family f) {
  switch (f) {
    case Family::GUMBEL_HOUGAARD: return "gumbel-hougaard";
    case Family::KHOUDRAJI_GH: return "khoudraji-gh";
    case Family::CLAYTON: return "clayton";
    case Family::FRANK: return "frank";
    case Family::NORMAL: return "normal";
    case Family::STUDENT_T4: return "t4";
    case Family::PLACKETT: return "plackett";
    case Family::INDEPENDENCE: return "independence";
    case Family::COMONOTONE: return "comonotone";
  }
  return "?";
}

inline Family parse_family(const std::string& name) {
  if (name == "gumbel-hougaard" || name == "gumbel" || name == "gh")
    return Family::GUMBEL_HOUGAARD;
  if (name == "khoudraji-gh" || name == "khoudraji" || name == "agh")
    return Family::KHOUDRAJI_GH;
  if (name == "clayton") return Family::CLAYTON;
  if (name == "frank") return Family::FRANK;
  if (name == "normal" || name == "gaussian") return Family::NORMAL;
  if (name == "t4" || name == "t" || name == "student-t4") return Family::STUDENT_T4;
  if (name == "plackett") return Family::PLACKETT;
  if (name == "independence" || name == "indep") return Family::INDEPENDENCE;
  if (name == "comonotone") return Family::COMONOTONE;
  throw std::invalid_argument("unknown copula family '" + name + "'");
}

// theta is the family parameter (the correlation for NORMAL / STUDENT_T4);
// lambda is used only by KHOUDRAJI_GH.
struct CopulaModel {
  Family family = Family::INDEPENDENCE;
  int d = 2;
  double theta = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> lambda;
};

inline void validate_model(const CopulaModel& m) {
  if (m.d < 2) throw std::invalid_argument("CopulaModel: d must be at least 2");
  auto need_theta = [&m] {
    if (!std::isfinite(m.theta)) {
      throw std::invalid_argument(std::string("CopulaModel: ") + family_name(m.family) +
                                  " requires a finite parameter");
    }
  };
  switch (m.family) {
    case Family::GUMBEL_HOUGAARD:
      need_theta();
      if (m.theta < 1.0) throw std::invalid_argument("gumbel-hougaard requires theta >= 1");
      break;
    case Family::KHOUDRAJI_GH: {
      need_theta();
      if (m.theta < 1.0) throw std::invalid_argument("khoudraji-gh requires theta >= 1");
      if (static_cast<int>(m.lambda.size()) != m.d) {
        throw std::invalid_argument("khoudraji-gh requires one lambda per coordinate");
      }
      bool distinct = false;
      for (double l : m.lambda) {
        if (!(l > 0.0 && l < 1.0)) {
          throw std::invalid_argument("khoudraji-gh requires lambda in (0,1)");
        }
        distinct = distinct || l != m.lambda.front();
      }
      if (!distinct) {
        throw std::invalid_argument("khoudraji-gh requires at least two distinct lambdas");
      }
      break;
    }
    case Family::CLAYTON:
      need_theta();
      if (!(m.theta > 0.0)) throw std::invalid_argument("clayton requires theta > 0");
      break;
    case Family::FRANK:
      need_theta();
      if (m.theta == 0.0) throw std::invalid_argument("frank requires theta != 0");
      if (m.d > 2 && m.theta < 0.0) {
        throw std::invalid_argument("frank requires theta > 0 when d > 2");
      }
      break;
    case Family::NORMAL:
    case Family::STUDENT_T4:
      need_theta();
      if (!(m.theta > -1.0 && m.theta < 1.0)) {
        throw std::invalid_argument("elliptical families require correlation in (-1,1)");
      }
      if (!(1.0 + (m.d - 1) * m.theta > 0.0)) {
        throw std::invalid_argument("equicorrelation matrix not positive definite for rho = " +
                                    std::to_string(m.theta) + ", d = " + std::to_string(m.d));
      }
      break;
    case Family::PLACKETT:
      need_theta();
      if (!(m.theta > 0.0)) throw std::invalid_argument("plackett requires theta > 0");
      if (m.d != 2) throw std::invalid_argument("plackett is bivariate only");
      break;
    case Family::INDEPENDENCE:
    case Family::COMONOTONE:
      break;
  }
}

namespace detail {

inline double clamp_unit_open(double u) {
  if (u <= 0.0) return std::nextafter(0.0, 1.0);
  if (u >= 1.0) return std::nextafter(1.0, 0.0);
  return u;
}

// First Debye function D1(x) = (1/x) int_0^x t/(e^t - 1) dt, x > 0.
inline double debye_one(double x) {
  auto f = [](double t) {
    if (t < 1e-8) return 1.0 - 0.5 * t + t * t / 12.0;
    return t / std::expm1(t);
  };
  const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, 0.0, x, 12, 1e-13);
  return integral / x;
}

inline double frank_tau_from_theta(double theta) {
  // Odd in theta; the positive branch uses the Debye form directly.
  const double a = std::fabs(theta);
  if (a < 1e-10) return theta / 9.0;
  const double tau = 1.0 - (4.0 / a) * (1.0 - debye_one(a));
  return theta > 0.0 ? tau : -tau;
}

// Gauss-Legendre nodes and weights on [-1,1] by Newton iteration on the
// Legendre polynomial, mapped by the caller.
inline void gauss_legendre(int npts, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(static_cast<std::size_t>(npts), 0.0);
  weights.assign(static_cast<std::size_t>(npts), 0.0);
  const int half = (npts + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (npts + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int j = 0; j < npts; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = npts * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    nodes[static_cast<std::size_t>(i)] = -x;
    nodes[static_cast<std::size_t>(npts - 1 - i)] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[static_cast<std::size_t>(i)] = w;
    weights[static_cast<std::size_t>(npts - 1 - i)] = w;
  }
}

// dC/du of the bivariate Plackett copula.
inline double plackett_du(double theta, double u, double v) {
  if (theta == 1.0) return v;
  const double b = 1.0 + (theta - 1.0) * (u + v);
  const double disc = b * b - 4.0 * theta * (theta - 1.0) * u * v;
  return 0.5 * (1.0 - (b - 2.0 * theta * v) / std::sqrt(disc));
}

// tau(theta) = 1 - 4 int int dC/du dC/dv du dv, by tensor Gauss-Legendre.
inline double plackett_tau_from_theta(double theta) {
  constexpr int kNodes = 256;
  static thread_local std::vector<double> x, w;
  if (x.empty()) {
    gauss_legendre(kNodes, x, w);
    for (int i = 0; i < kNodes; ++i) {
      x[static_cast<std::size_t>(i)] = 0.5 * (x[static_cast<std::size_t>(i)] + 1.0);
      w[static_cast<std::size_t>(i)] *= 0.5;
    }
  }
  double acc = 0.0;
  for (int i = 0; i < kNodes; ++i) {
    const double u = x[static_cast<std::size_t>(i)];
    double inner = 0.0;
    for (int j = 0; j < kNodes; ++j) {
      const double v = x[static_cast<std::size_t>(j)];
      // dC/dv(u,v) = dC/du(v,u) by exchangeability.
      inner += w[static_cast<std::size_t>(j)] * plackett_du(theta, u, v) *
               plackett_du(theta, v, u);
    }
    acc += w[static_cast<std::size_t>(i)] * inner;
  }
  return 1.0 - 4.0 * acc;
}

// Invert an increasing tau(theta) map by bisection on [lo, hi].
template <typename F>
double invert_tau(F&& tau_of_theta, double target, double lo, double hi) {
  double flo = tau_of_theta(lo) - target;
  double fhi = tau_of_theta(hi) - target;
  if (flo > 0.0 || fhi < 0.0) {
    throw UnattainableTau("tau target " + std::to_string(target) +
                          " outside bracketed range");
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = tau_of_theta(mid) - target;
    if (std::fabs(fmid) < 1e-11 || 0.5 * (hi - lo) < 1e-13 * (1.0 + std::fabs(mid))) {
      return mid;
    }
    if (fmid < 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Parameter whose theoretical bivariate Kendall tau equals `tau`.
inline double tau_to_param(Family family, double tau) {
  switch (family) {
    case Family::GUMBEL_HOUGAARD:
      if (!(tau >= 0.0 && tau < 1.0)) {
        throw UnattainableTau("gumbel-hougaard attains tau in [0,1), got " + std::to_string(tau));
      }
      return 1.0 / (1.0 - tau);
    case Family::CLAYTON:
      if (!(tau > 0.0 && tau < 1.0)) {
        throw UnattainableTau("clayton (theta > 0) attains tau in (0,1), got " +
                              std::to_string(tau));
      }
      return 2.0 * tau / (1.0 - tau);
    case Family::FRANK: {
      if (!(tau > -1.0 && tau < 1.0) || tau == 0.0) {
        throw UnattainableTau("frank attains tau in (-1,0)u(0,1), got " + std::to_string(tau));
      }
      const double a = std::fabs(tau);
      double hi = 1.0;
      while (detail::frank_tau_from_theta(hi) < a) {
        hi *= 2.0;
        if (hi > 1e8) throw UnattainableTau("frank tau too close to 1");
      }
      const double theta = detail::invert_tau(detail::frank_tau_from_theta, a, 1e-10, hi);
      return tau > 0.0 ? theta : -theta;
    }
    case Family::NORMAL:
    case Family::STUDENT_T4:
      if (!(tau > -1.0 && tau < 1.0)) {
        throw UnattainableTau("elliptical families attain tau in (-1,1), got " +
                              std::to_string(tau));
      }
      return std::sin(M_PI * tau / 2.0);
    case Family::PLACKETT: {
      if (!(tau > -1.0 && tau < 1.0)) {
        throw UnattainableTau("plackett attains tau in (-1,1), got " + std::to_string(tau));
      }
      if (tau == 0.0) return 1.0;
      double lo = 1.0;
      double hi = 2.0;
      if (tau > 0.0) {
        while (detail::plackett_tau_from_theta(hi) < tau) {
          hi *= 2.0;
          if (hi > 1e10) throw UnattainableTau("plackett tau too close to 1");
        }
      } else {
        lo = 0.5;
        while (detail::plackett_tau_from_theta(lo) > tau) {
          lo *= 0.5;
          if (lo < 1e-10) throw UnattainableTau("plackett tau too close to -1");
        }
        hi = 1.0;
      }
      return detail::invert_tau(detail::plackett_tau_from_theta, tau, lo, hi);
    }
    case Family::KHOUDRAJI_GH:
      throw std::invalid_argument("khoudraji-gh is parameterized by theta and lambda directly");
    case Family::INDEPENDENCE:
    case Family::COMONOTONE:
      throw std::invalid_argument(std::string(family_name(family)) + " has no parameter");
  }
  throw std::invalid_argument("tau_to_param: unknown family");
}

namespace detail {

// Positive stable draw with Laplace transform exp(-t^alpha), alpha in (0,1).
inline double positive_stable(Rng& rng, double alpha) {
  const double w = M_PI * rng.uniform();
  const double e = rng.exponential();
  const double a = std::sin(alpha * w) / std::pow(std::sin(w), 1.0 / alpha);
  const double b = std::sin((1.0 - alpha) * w) / e;
  return a * std::pow(b, (1.0 - alpha) / alpha);
}

// Marsaglia-Tsang, extended to shape < 1 by the boost U^{1/shape} trick.
inline double gamma_draw(Rng& rng, double shape) {
  if (shape < 1.0) {
    return gamma_draw(rng, shape + 1.0) * std::pow(rng.uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

// Logarithmic-series draw (Kemp's LK algorithm), pmf -p^k / (k log(1-p)).
// Returned as double: the support reaches astronomically large values when
// p is close to 1 and the value is only ever used in a ratio.
inline double log_series(Rng& rng, double p) {
  const double r = std::log1p(-p);
  const double v = rng.uniform();
  if (v >= p) return 1.0;
  const double u = rng.uniform();
  const double q = -std::expm1(r * u);
  if (v <= q * q) return std::floor(1.0 + std::log(v) / std::log(q));
  if (v >= q) return 1.0;
  return 2.0;
}

inline Matrix equicorrelation_cholesky(int d, double rho) {
  Matrix sigma = Matrix::Constant(d, d, rho);
  sigma.diagonal().setOnes();
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("equicorrelation matrix not positive definite");
  }
  return llt.matrixL();
}

}  // namespace detail

// n rows from the model's copula.  Deterministic in (model, n, seed); all
// entries strictly inside (0,1).
inline SampleMatrix sample(const CopulaModel& model, Eigen::Index n, std::uint64_t seed) {
  validate_model(model);
  if (n < 2) throw std::invalid_argument("sample: need n >= 2");
  const int d = model.d;
  Matrix x(n, d);
  Rng rng(derive_seed(seed, {STREAM_SAMPLE}));

  auto store = [&x](Eigen::Index i, int j, double value) {
    x(i, j) = detail::clamp_unit_open(value);
  };

  switch (model.family) {
    case Family::INDEPENDENCE:
      for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) store(i, j, rng.uniform());
      break;

    case Family::COMONOTONE:
      for (Eigen::Index i = 0; i < n; ++i) {
        const double u = rng.uniform();
        for (int j = 0; j < d; ++j) store(i, j, u);
      }
      break;

    case Family::GUMBEL_HOUGAARD: {
      const double alpha = 1.0 / model.theta;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double v = model.theta == 1.0 ? 1.0 : detail::positive_stable(rng, alpha);
        for (int j = 0; j < d; ++j) {
          store(i, j, std::exp(-std::pow(rng.exponential() / v, alpha)));
        }
      }
      break;
    }

    case Family::CLAYTON: {
      const double shape = 1.0 / model.theta;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double v = detail::gamma_draw(rng, shape);
        for (int j = 0; j < d; ++j) {
          store(i, j, std::pow(1.0 + rng.exponential() / v, -shape));
        }
      }
      break;
    }

    case Family::FRANK: {
      if (model.theta > 0.0) {
        const double p = -std::expm1(-model.theta);
        for (Eigen::Index i = 0; i < n; ++i) {
          const double v = detail::log_series(rng, p);
          for (int j = 0; j < d; ++j) {
            const double t = rng.exponential() / v;
            store(i, j, -std::log1p(-p * std::exp(-t)) / model.theta);
          }
        }
      } else {
        // Bivariate conditional inversion; valid for any theta != 0.
        const double theta = model.theta;
        const double em1 = std::expm1(-theta);
        for (Eigen::Index i = 0; i < n; ++i) {
          const double u = rng.uniform();
          const double t = rng.uniform();
          const double eu = std::exp(-theta * u);
          const double v = -std::log1p(t * em1 / (eu * (1.0 - t) + t)) / theta;
          store(i, 0, u);
          store(i, 1, v);
        }
      }
      break;
    }

    case Family::NORMAL: {
      const Matrix chol = detail::equicorrelation_cholesky(d, model.theta);
      const boost::math::normal_distribution<double> std_normal(0.0, 1.0);
      Vector eps(d);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) eps[j] = rng.normal();
        const Vector z = chol * eps;
        for (int j = 0; j < d; ++j) store(i, j, boost::math::cdf(std_normal, z[j]));
      }
      break;
    }

    case Family::STUDENT_T4: {
      const Matrix chol = detail::equicorrelation_cholesky(d, model.theta);
      const boost::math::students_t_distribution<double> t4(4.0);
      Vector eps(d);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) eps[j] = rng.normal();
        const Vector z = chol * eps;
        const double chi2 = 2.0 * (rng.exponential() + rng.exponential());  // chi^2_4
        const double scale = std::sqrt(4.0 / chi2);
        for (int j = 0; j < d; ++j) store(i, j, boost::math::cdf(t4, z[j] * scale));
      }
      break;
    }

    case Family::PLACKETT: {
      const double theta = model.theta;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double u = rng.uniform();
        const double t = rng.uniform();
        double v;
        if (theta == 1.0) {
          v = t;
        } else {
          const double a = t * (1.0 - t);
          const double b = theta + a * (theta - 1.0) * (theta - 1.0);
          const double cc = 2.0 * a * (u * theta * theta + 1.0 - u) + theta * (1.0 - 2.0 * a);
          const double dd = std::sqrt(theta) *
                            std::sqrt(theta + 4.0 * a * u * (1.0 - u) * (1.0 - theta) * (1.0 - theta));
          v = (cc - (1.0 - 2.0 * t) * dd) / (2.0 * b);
        }
        store(i, 0, u);
        store(i, 1, v);
      }
      break;
    }

    case Family::KHOUDRAJI_GH: {
      const double alpha = 1.0 / model.theta;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double v = model.theta == 1.0 ? 1.0 : detail::positive_stable(rng, alpha);
        for (int j = 0; j < d; ++j) {
          const double a = std::exp(-std::pow(rng.exponential() / v, alpha));
          const double b = rng.uniform();
          const double lam = model.lambda[static_cast<std::size_t>(j)];
          store(i, j, std::max(std::pow(a, 1.0 / lam), std::pow(b, 1.0 / (1.0 - lam))));
        }
      }
      break;
    }
  }
  return SampleMatrix(std::move(x));
}

// Empirical Kendall tau of two columns: (concordant - discordant) / C(n,2),
// ties counting as neither.  Merge-sort inversion counting keeps it
// O(n log n): after sorting by (x, y), inversions in y are exactly the
// discordant pairs, and tied-pair counts come from run lengths.
inline double kendall_tau(const Matrix& data, Eigen::Index col_a, Eigen::Index col_b) {
  const Eigen::Index n = data.rows();
  if (col_a < 0 || col_a >= data.cols() || col_b < 0 || col_b >= data.cols()) {
    throw std::invalid_argument("kendall_tau: column out of range");
  }
  if (n < 2) throw std::invalid_argument("kendall_tau: need at least 2 rows");

  std::vector<std::pair<double, double>> pts(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    pts[static_cast<std::size_t>(i)] = {data(i, col_a), data(i, col_b)};
  }
  std::sort(pts.begin(), pts.end());

  auto pairs_in_runs = [](auto begin, auto end, auto key) {
    long long total = 0;
    auto it = begin;
    while (it != end) {
      auto jt = it;
      while (jt != end && key(*jt) == key(*it)) ++jt;
      const long long len = jt - it;
      total += len * (len - 1) / 2;
      it = jt;
    }
    return total;
  };
  const long long ties_x =
      pairs_in_runs(pts.begin(), pts.end(), [](const auto& p) { return p.first; });
  const long long ties_xy = [&pts] {
    long long total = 0;
    std::size_t i = 0;
    while (i < pts.size()) {
      std::size_t j = i;
      while (j < pts.size() && pts[j] == pts[i]) ++j;
      const long long len = static_cast<long long>(j - i);
      total += len * (len - 1) / 2;
      i = j;
    }
    return total;
  }();

  // Count inversions in the y sequence (strict) by merge sort.
  std::vector<double> y(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) y[i] = pts[i].second;
  std::vector<double> buf(y.size());
  long long discordant = 0;
  for (std::size_t width = 1; width < y.size(); width *= 2) {
    for (std::size_t lo = 0; lo + width < y.size(); lo += 2 * width) {
      const std::size_t mid = lo + width;
      const std::size_t hi = std::min(lo + 2 * width, y.size());
      std::size_t a = lo;
      std::size_t b = mid;
      std::size_t out = lo;
      while (a < mid && b < hi) {
        if (y[b] < y[a]) {
          discordant += static_cast<long long>(mid - a);
          buf[out++] = y[b++];
        } else {
          buf[out++] = y[a++];
        }
      }
      while (a < mid) buf[out++] = y[a++];
      while (b < hi) buf[out++] = y[b++];
      std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
                buf.begin() + static_cast<std::ptrdiff_t>(hi),
                y.begin() + static_cast<std::ptrdiff_t>(lo));
    }
  }

  std::sort(y.begin(), y.end());
  const long long ties_y =
      pairs_in_runs(y.begin(), y.end(), [](double v) { return v; });

  const long long total = n * (static_cast<long long>(n) - 1) / 2;
  const long long comparable = total - ties_x - ties_y + ties_xy;
  const long long concordant = comparable - discordant;
  return static_cast<double>(concordant - discordant) / static_cast<double>(total);
}

}  // namespace evcop
