#pragma once

#include <cstddef>
#include <vector>

#include "tessera/nn/graph.hpp"

namespace tessera::crf {

/// Emission and transition scores of a linear-chain CRF over n positions and
/// k tags. Row-major: emissions[t * k + j], transitions[from * k + to].
struct Lattice {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> emissions;
  std::vector<double> transitions;
  std::vector<double> begin;
  std::vector<double> end;

  Lattice() = default;
  Lattice(std::size_t positions, std::size_t tags);

  double emission(std::size_t t, std::size_t j) const { return emissions[t * k + j]; }
  double transition(std::size_t from, std::size_t to) const { return transitions[from * k + to]; }
};

/// begin[y0] + e[0][y0], then + trans[y(t-1)][yt] + e[t][yt] for each t, then
/// + end[y(n-1)], accumulated in exactly that order.
double path_score(const Lattice& lattice, const std::vector<int>& tags);

/// log Σ over all k^n paths of exp(path_score). Requires n ≥ 1.
double log_partition(const Lattice& lattice);

struct Decoded {
  std::vector<int> tags;
  double score = 0.0;
};

/// Highest-scoring path; among equal scores the lexicographically smallest
/// tag sequence. `score` is path_score of the returned tags.
Decoded viterbi(const Lattice& lattice);

struct Marginals {
  // unary[t * k + j] = P(y_t = j)
  std::vector<double> unary;
  // pairwise[(t * k + i) * k + j] = P(y_t = i, y_{t+1} = j), t < n - 1
  std::vector<double> pairwise;
};
Marginals marginals(const Lattice& lattice);

/// Negative log-likelihood of `gold` as a graph node: log_partition minus the
/// gold path score. `emissions` is an n x k node, `transitions` k x k,
/// `begin` and `end` length k.
nn::Expr nll(nn::Expr emissions, nn::Expr transitions, nn::Expr begin, nn::Expr end,
             const std::vector<int>& gold);

}  // namespace tessera::crf
