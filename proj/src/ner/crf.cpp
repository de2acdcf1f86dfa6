#include "tessera/ner/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tessera/error.hpp"

namespace tessera::crf {

namespace {

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// alpha[t * k + j]: log-sum of prefix paths ending in tag j at t, emission included.
std::vector<double> forward(const Lattice& l) {
  std::vector<double> alpha(l.n * l.k, -std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < l.k; ++j) alpha[j] = l.begin[j] + l.emission(0, j);
  for (std::size_t t = 1; t < l.n; ++t) {
    for (std::size_t j = 0; j < l.k; ++j) {
      double acc = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < l.k; ++i) {
        acc = log_add(acc, alpha[(t - 1) * l.k + i] + l.transition(i, j));
      }
      alpha[t * l.k + j] = acc + l.emission(t, j);
    }
  }
  return alpha;
}

// beta[t * k + j]: log-sum of suffix paths after tag j at t, end score included.
std::vector<double> backward(const Lattice& l) {
  std::vector<double> beta(l.n * l.k, -std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < l.k; ++j) beta[(l.n - 1) * l.k + j] = l.end[j];
  for (std::size_t t = l.n - 1; t-- > 0;) {
    for (std::size_t i = 0; i < l.k; ++i) {
      double acc = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < l.k; ++j) {
        acc = log_add(acc, l.transition(i, j) + l.emission(t + 1, j) + beta[(t + 1) * l.k + j]);
      }
      beta[t * l.k + i] = acc;
    }
  }
  return beta;
}

void check_shape(const Lattice& l) {
  require(l.k >= 1, "lattice needs at least one tag");
  require(l.emissions.size() == l.n * l.k && l.transitions.size() == l.k * l.k &&
              l.begin.size() == l.k && l.end.size() == l.k,
          "inconsistent lattice dimensions");
}

}  // namespace

Lattice::Lattice(std::size_t positions, std::size_t tags)
    : n(positions),
      k(tags),
      emissions(positions * tags, 0.0),
      transitions(tags * tags, 0.0),
      begin(tags, 0.0),
      end(tags, 0.0) {}

double path_score(const Lattice& l, const std::vector<int>& tags) {
  check_shape(l);
  require(tags.size() == l.n && l.n >= 1, "path length must equal lattice length");
  const auto tag = [&](std::size_t t) { return static_cast<std::size_t>(tags[t]); };
  double s = l.begin[tag(0)];
  s += l.emission(0, tag(0));
  for (std::size_t t = 1; t < l.n; ++t) {
    s += l.transition(tag(t - 1), tag(t));
    s += l.emission(t, tag(t));
  }
  s += l.end[tag(l.n - 1)];
  return s;
}

double log_partition(const Lattice& l) {
  check_shape(l);
  require(l.n >= 1, "log partition of an empty lattice");
  const auto alpha = forward(l);
  double z = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < l.k; ++j) z = log_add(z, alpha[(l.n - 1) * l.k + j] + l.end[j]);
  return z;
}

Decoded viterbi(const Lattice& l) {
  check_shape(l);
  Decoded out;
  if (l.n == 0) return out;
  // Best suffix scores, computed right to left so that the left-to-right
  // reconstruction can take the smallest tag at every tie.
  std::vector<double> best(l.n * l.k);
  for (std::size_t j = 0; j < l.k; ++j) best[(l.n - 1) * l.k + j] = l.end[j];
  auto step = [&](std::size_t t, std::size_t i, std::size_t j) {
    return l.transition(i, j) + l.emission(t + 1, j) + best[(t + 1) * l.k + j];
  };
  for (std::size_t t = l.n - 1; t-- > 0;) {
    for (std::size_t i = 0; i < l.k; ++i) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < l.k; ++j) m = std::max(m, step(t, i, j));
      best[t * l.k + i] = m;
    }
  }
  auto first = [&](std::size_t j) { return l.begin[j] + l.emission(0, j) + best[j]; };
  std::size_t cur = 0;
  for (std::size_t j = 1; j < l.k; ++j) {
    if (first(j) > first(cur)) cur = j;
  }
  out.tags.push_back(static_cast<int>(cur));
  for (std::size_t t = 0; t + 1 < l.n; ++t) {
    std::size_t next = 0;
    for (std::size_t j = 1; j < l.k; ++j) {
      if (step(t, cur, j) > step(t, cur, next)) next = j;
    }
    cur = next;
    out.tags.push_back(static_cast<int>(cur));
  }
  out.score = path_score(l, out.tags);
  return out;
}

Marginals marginals(const Lattice& l) {
  const double z = log_partition(l);
  const auto alpha = forward(l);
  const auto beta = backward(l);
  Marginals m;
  m.unary.resize(l.n * l.k);
  for (std::size_t i = 0; i < l.n * l.k; ++i) m.unary[i] = std::exp(alpha[i] + beta[i] - z);
  if (l.n > 1) m.pairwise.resize((l.n - 1) * l.k * l.k);
  for (std::size_t t = 0; t + 1 < l.n; ++t) {
    for (std::size_t i = 0; i < l.k; ++i) {
      for (std::size_t j = 0; j < l.k; ++j) {
        m.pairwise[(t * l.k + i) * l.k + j] =
            std::exp(alpha[t * l.k + i] + l.transition(i, j) + l.emission(t + 1, j) +
                     beta[(t + 1) * l.k + j] - z);
      }
    }
  }
  return m;
}

nn::Expr nll(nn::Expr emissions, nn::Expr transitions, nn::Expr begin, nn::Expr end,
             const std::vector<int>& gold) {
  nn::Graph& g = *emissions.graph;
  const std::size_t n = emissions.rows();
  const std::size_t k = emissions.cols();
  require(n >= 1 && gold.size() == n, "gold path length must equal the number of positions");
  require(transitions.size() == k * k && begin.size() == k && end.size() == k,
          "CRF parameter shapes do not match the tag count");
  for (int y : gold) require(y >= 0 && static_cast<std::size_t>(y) < k, "gold tag out of range");

  Lattice l(n, k);
  const auto copy = [](nn::Expr e, std::vector<double>& dst) {
    const auto v = e.value();
    dst.assign(v.begin(), v.end());
  };
  copy(emissions, l.emissions);
  copy(transitions, l.transitions);
  copy(begin, l.begin);
  copy(end, l.end);

  const double loss = log_partition(l) - path_score(l, gold);
  const int ie = emissions.id, it = transitions.id, ib = begin.id, iend = end.id;
  return g.node({loss}, 1, 1, [l, gold, ie, it, ib, iend](nn::Graph& graph, int self) {
    const double up = graph.grad(self)[0];
    const Marginals m = marginals(l);
    const std::size_t k = l.k;
    auto ge = graph.grad(ie);
    for (std::size_t i = 0; i < m.unary.size(); ++i) ge[i] += up * m.unary[i];
    auto gt = graph.grad(it);
    for (std::size_t t = 0; t + 1 < l.n; ++t)
      for (std::size_t a = 0; a < k * k; ++a) gt[a] += up * m.pairwise[t * k * k + a];
    auto gb = graph.grad(ib);
    auto gend = graph.grad(iend);
    for (std::size_t j = 0; j < k; ++j) {
      gb[j] += up * m.unary[j];
      gend[j] += up * m.unary[(l.n - 1) * k + j];
    }
    const auto y = [&](std::size_t t) { return static_cast<std::size_t>(gold[t]); };
    for (std::size_t t = 0; t < l.n; ++t) ge[t * k + y(t)] -= up;
    for (std::size_t t = 1; t < l.n; ++t) gt[y(t - 1) * k + y(t)] -= up;
    gb[y(0)] -= up;
    gend[y(l.n - 1)] -= up;
  });
}

}  // namespace tessera::crf
