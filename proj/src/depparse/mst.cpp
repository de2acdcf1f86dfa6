#include "tessera/depparse/mst.hpp"

#include <cmath>
#include <limits>

#include "tessera/error.hpp"

namespace tessera::depparse {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Returns the nodes of one cycle in `parent`, or empty if acyclic.
std::vector<int> find_cycle(const std::vector<int>& parent) {
  const int n = static_cast<int>(parent.size());
  std::vector<int> color(static_cast<std::size_t>(n), 0);  // 0 new, 1 on current walk, 2 done
  for (int start = 1; start < n; ++start) {
    if (color[static_cast<std::size_t>(start)] != 0) continue;
    int v = start;
    while (v > 0 && color[static_cast<std::size_t>(v)] == 0) {
      color[static_cast<std::size_t>(v)] = 1;
      v = parent[static_cast<std::size_t>(v)];
    }
    if (v > 0 && color[static_cast<std::size_t>(v)] == 1) {
      std::vector<int> cycle{v};
      for (int u = parent[static_cast<std::size_t>(v)]; u != v; u = parent[static_cast<std::size_t>(u)]) {
        cycle.push_back(u);
      }
      return cycle;
    }
    for (v = start; v > 0 && color[static_cast<std::size_t>(v)] == 1; v = parent[static_cast<std::size_t>(v)]) {
      color[static_cast<std::size_t>(v)] = 2;
    }
  }
  return {};
}

}  // namespace

std::vector<int> chu_liu_edmonds(const ArcScores& s) {
  const std::size_t n = s.size();
  std::vector<int> parent(n, -1);
  for (std::size_t v = 1; v < n; ++v) {
    double best = kNegInf;
    for (std::size_t u = 0; u < n; ++u) {
      if (u != v && s[u][v] > best) {
        best = s[u][v];
        parent[v] = static_cast<int>(u);
      }
    }
    require(parent[v] >= 0, "node without incoming arcs");
  }
  const std::vector<int> cycle = find_cycle(parent);
  if (cycle.empty()) return parent;

  // Contract the cycle into one node `c`; the remaining nodes keep their
  // relative order and the root stays at 0.
  std::vector<bool> in_cycle(n, false);
  for (int v : cycle) in_cycle[static_cast<std::size_t>(v)] = true;
  std::vector<int> new_id(n, -1);
  std::vector<std::size_t> old_of;
  for (std::size_t v = 0; v < n; ++v) {
    if (!in_cycle[v]) {
      new_id[v] = static_cast<int>(old_of.size());
      old_of.push_back(v);
    }
  }
  const std::size_t c = old_of.size();
  const std::size_t m = c + 1;
  ArcScores t(m, std::vector<double>(m, kNegInf));
  // For arcs into c: which cycle node they enter. For arcs out of c: which
  // cycle node they leave.
  std::vector<std::size_t> enter(m, 0), leave(m, 0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 1; v < n; ++v) {
      if (u == v || s[u][v] == kNegInf) continue;
      if (in_cycle[u] && in_cycle[v]) continue;
      if (!in_cycle[u] && !in_cycle[v]) {
        t[static_cast<std::size_t>(new_id[u])][static_cast<std::size_t>(new_id[v])] = s[u][v];
      } else if (in_cycle[v]) {
        const std::size_t nu = static_cast<std::size_t>(new_id[u]);
        const double w = s[u][v] - s[static_cast<std::size_t>(parent[v])][v];
        if (w > t[nu][c]) {
          t[nu][c] = w;
          enter[nu] = v;
        }
      } else {
        const std::size_t nv = static_cast<std::size_t>(new_id[v]);
        if (s[u][v] > t[c][nv]) {
          t[c][nv] = s[u][v];
          leave[nv] = u;
        }
      }
    }
  }
  const std::vector<int> sub = chu_liu_edmonds(t);

  std::vector<int> result = parent;  // cycle nodes keep their in-cycle parent by default
  for (std::size_t nv = 1; nv < m; ++nv) {
    const std::size_t np = static_cast<std::size_t>(sub[nv]);
    if (nv == c) {
      result[enter[np]] = static_cast<int>(old_of[np]);
    } else if (np == c) {
      result[old_of[nv]] = static_cast<int>(leave[nv]);
    } else {
      result[old_of[nv]] = static_cast<int>(old_of[np]);
    }
  }
  return result;
}

double tree_score(const ArcScores& scores, const std::vector<int>& heads) {
  double total = 0.0;
  for (std::size_t d = 1; d <= heads.size(); ++d) {
    total += scores[static_cast<std::size_t>(heads[d - 1])][d];
  }
  return total;
}

bool is_single_root_tree(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  int roots = 0;
  for (int d = 1; d <= n; ++d) {
    const int h = heads[static_cast<std::size_t>(d - 1)];
    if (h < 0 || h > n || h == d) return false;
    if (h == 0) ++roots;
  }
  if (roots != 1) return false;
  for (int d = 1; d <= n; ++d) {
    int v = d;
    for (int steps = 0; v != 0; ++steps) {
      if (steps > n) return false;
      v = heads[static_cast<std::size_t>(v - 1)];
    }
  }
  return true;
}

std::vector<int> decode_mst(const ArcScores& scores) {
  const std::size_t n = scores.size() == 0 ? 0 : scores.size() - 1;
  require(n >= 1, "decode_mst needs at least one word");
  for (const auto& row : scores) require(row.size() == n + 1, "arc score matrix must be square");
  for (std::size_t h = 0; h <= n; ++h)
    for (std::size_t d = 1; d <= n; ++d)
      if (h != d) require(std::isfinite(scores[h][d]), "arc scores must be finite off the diagonal");

  ArcScores s = scores;
  for (std::size_t v = 0; v <= n; ++v) {
    s[v][v] = kNegInf;
    s[v][0] = kNegInf;
  }
  auto heads_of = [n](const std::vector<int>& parent) {
    return std::vector<int>(parent.begin() + 1, parent.begin() + static_cast<long>(n) + 1);
  };
  std::vector<int> heads = heads_of(chu_liu_edmonds(s));
  std::size_t root_children = 0;
  for (int h : heads) root_children += h == 0 ? 1 : 0;
  if (root_children == 1) return heads;

  std::vector<int> best;
  double best_score = kNegInf;
  for (std::size_t root_child = 1; root_child <= n; ++root_child) {
    ArcScores forced = s;
    for (std::size_t d = 1; d <= n; ++d) {
      if (d != root_child) forced[0][d] = kNegInf;
    }
    std::vector<int> candidate = heads_of(chu_liu_edmonds(forced));
    const double total = tree_score(scores, candidate);
    if (best.empty() || total > best_score) {
      best = std::move(candidate);
      best_score = total;
    }
  }
  return best;
}

std::vector<std::string> assign_labels(
    const std::vector<std::vector<std::vector<double>>>& label_scores,
    const std::vector<int>& heads, const std::vector<std::string>& labels,
    const std::string& root_label) {
  std::vector<std::string> out;
  out.reserve(heads.size());
  for (std::size_t d = 1; d <= heads.size(); ++d) {
    const int h = heads[d - 1];
    if (h == 0) {
      out.push_back(root_label);
      continue;
    }
    const auto& row = label_scores[static_cast<std::size_t>(h)][d];
    require(row.size() == labels.size(), "label score width must match the label inventory");
    std::size_t arg = 0;
    for (std::size_t r = 1; r < row.size(); ++r) {
      if (row[r] > row[arg]) arg = r;
    }
    out.push_back(labels[arg]);
  }
  return out;
}

}  // namespace tessera::depparse
