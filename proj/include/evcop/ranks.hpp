#pragma once

// Sample validation, columnwise ranking with a tie policy, and the
// rank -> pseudo-observation transform u = rank / (n + 1).
//
// Ranks are stored as doubles: under NONE and RANDOM every column is a
// permutation of {1,...,n}; under MIDRANK tied blocks share the (possibly
// non-integer) average rank.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evcop/errors.hpp"
#include "evcop/rng.hpp"

namespace evcop {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class TiePolicy { NONE, RANDOM, MIDRANK };

inline const char* tie_policy_name(TiePolicy p) {
  switch (p) {
    case TiePolicy::NONE: return "none";
    case TiePolicy::RANDOM: return "random";
    case TiePolicy::MIDRANK: return "midrank";
  }
  return "?";
}

// Raw data matrix, n x d, one row per observation.  Fixed after
// construction; all entries must be finite and the shape at least 2 x 2.
class SampleMatrix {
 public:
  explicit SampleMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 2 || values_.cols() < 2) {
      throw std::invalid_argument("SampleMatrix: need at least 2 rows and 2 columns, got " +
                                  std::to_string(values_.rows()) + " x " +
                                  std::to_string(values_.cols()));
    }
    if (!values_.allFinite()) {
      throw std::invalid_argument("SampleMatrix: non-finite entry");
    }
  }

  const Matrix& values() const { return values_; }
  Eigen::Index n() const { return values_.rows(); }
  Eigen::Index d() const { return values_.cols(); }

 private:
  Matrix values_;
};

// Result of compute_ranks.  tie_counts[j] is the number of observations in
// column j that belong to some tied block (0 for a tie-free column).
struct Ranks {
  Matrix values;
  std::vector<Eigen::Index> tie_counts;
  std::vector<std::string> warnings;

  bool has_ties() const {
    for (Eigen::Index c : tie_counts)
      if (c > 0) return true;
    return false;
  }
};

// Columnwise ranks in {1,...,n}, smallest value gets rank 1.
//
// Ties: NONE throws (DegenerateColumn if the whole column is constant,
// TiesDetected otherwise).  RANDOM breaks each tied block uniformly at
// random using a stream derived from (seed, column), so re-running with a
// fresh seed re-randomizes only tied blocks.  MIDRANK assigns the block
// average.
inline Ranks compute_ranks(const SampleMatrix& x, TiePolicy policy,
                           std::uint64_t seed = 0) {
  const Eigen::Index n = x.n();
  const Eigen::Index d = x.d();
  Ranks out;
  out.values.resize(n, d);
  out.tie_counts.assign(static_cast<std::size_t>(d), 0);

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto col = x.values().col(j);
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&col](Eigen::Index a, Eigen::Index b) { return col[a] < col[b]; });

    Rng tie_rng(derive_seed(seed, {STREAM_RANKS, static_cast<std::uint64_t>(j)}));

    Eigen::Index tied = 0;
    Eigen::Index a = 0;
    while (a < n) {
      Eigen::Index b = a + 1;
      while (b < n && col[idx[static_cast<std::size_t>(b)]] == col[idx[static_cast<std::size_t>(a)]]) ++b;
      const Eigen::Index block = b - a;
      if (block > 1) {
        tied += block;
        switch (policy) {
          case TiePolicy::NONE:
            if (block == n) {
              throw DegenerateColumn("column " + std::to_string(j + 1) + " is constant");
            }
            throw TiesDetected("ties in column " + std::to_string(j + 1) +
                               " (policy none forbids ties)");
          case TiePolicy::RANDOM:
            // Fisher-Yates inside the block, then consecutive integer ranks.
            for (Eigen::Index k = block - 1; k > 0; --k) {
              const auto r = static_cast<Eigen::Index>(
                  tie_rng.bounded(static_cast<std::uint64_t>(k + 1)));
              std::swap(idx[static_cast<std::size_t>(a + k)], idx[static_cast<std::size_t>(a + r)]);
            }
            for (Eigen::Index k = a; k < b; ++k) {
              out.values(idx[static_cast<std::size_t>(k)], j) = static_cast<double>(k + 1);
            }
            break;
          case TiePolicy::MIDRANK: {
            const double avg = 0.5 * static_cast<double>(a + 1 + b);
            for (Eigen::Index k = a; k < b; ++k) {
              out.values(idx[static_cast<std::size_t>(k)], j) = avg;
            }
            break;
          }
        }
      } else {
        out.values(idx[static_cast<std::size_t>(a)], j) = static_cast<double>(a + 1);
      }
      a = b;
    }
    out.tie_counts[static_cast<std::size_t>(j)] = tied;
    if (tied == n) {
      out.warnings.push_back("column " + std::to_string(j + 1) + " is constant");
    } else if (tied > 0) {
      out.warnings.push_back("column " + std::to_string(j + 1) + ": " +
                             std::to_string(tied) + " tied observations (" +
                             tie_policy_name(policy) + ")");
    }
  }
  return out;
}

// Pseudo-observations u_ij = rank_ij / (n + 1), all strictly inside (0,1).
// Keeps the source ranks and tie metadata for reporting.
struct PseudoObservations {
  Matrix u;
  Matrix source_ranks;
  std::vector<Eigen::Index> tie_counts;
  std::vector<std::string> warnings;

  Eigen::Index n() const { return u.rows(); }
  Eigen::Index d() const { return u.cols(); }
};

inline PseudoObservations pseudo_observations(const Matrix& ranks) {
  const Eigen::Index n = ranks.rows();
  const Eigen::Index d = ranks.cols();
  if (n < 2 || d < 2) {
    throw std::invalid_argument("pseudo_observations: need at least a 2 x 2 rank matrix");
  }
  if ((ranks.array() < 1.0).any() || (ranks.array() > static_cast<double>(n)).any()) {
    throw std::invalid_argument("pseudo_observations: rank outside [1, n]");
  }
  PseudoObservations p;
  p.source_ranks = ranks;
  p.u = ranks / static_cast<double>(n + 1);
  p.tie_counts.assign(static_cast<std::size_t>(d), 0);
  return p;
}

inline PseudoObservations pseudo_observations(const Ranks& ranks) {
  PseudoObservations p = pseudo_observations(ranks.values);
  p.tie_counts = ranks.tie_counts;
  p.warnings = ranks.warnings;
  return p;
}

}  // namespace evcop
