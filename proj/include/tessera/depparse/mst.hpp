#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace tessera::depparse {

/// scores[h][d] for h, d in 0..n; node 0 is the artificial root. Column 0 and
/// the diagonal are ignored.
using ArcScores = std::vector<std::vector<double>>;

/// Sum of scores[heads[d-1]][d] over d = 1..n, accumulated in that order.
double tree_score(const ArcScores& scores, const std::vector<int>& heads);

/// True when `heads` (heads[d-1] = head of word d) forms an arborescence
/// rooted at 0 with exactly one child of the root.
bool is_single_root_tree(const std::vector<int>& heads);

/// Maximum spanning arborescence rooted at 0 with exactly one root child
/// (Chu-Liu/Edmonds, re-run once per candidate root child when the
/// unconstrained optimum has several). Returns heads[d-1] for d = 1..n.
/// Requires n >= 1 and finite off-diagonal scores.
std::vector<int> decode_mst(const ArcScores& scores);

/// Unconstrained maximum arborescence rooted at node 0 over nodes 0..N-1.
/// Entries equal to -infinity are treated as absent arcs. Returns parent[v]
/// for every node (parent[0] = -1).
std::vector<int> chu_liu_edmonds(const ArcScores& scores);

/// deprel[d] = argmax_r label_scores[heads[d-1]][d][r] (lowest index on ties);
/// words attached to the root always get `root_label`.
/// label_scores is indexed [h][d][r] with h, d in 0..n.
std::vector<std::string> assign_labels(
    const std::vector<std::vector<std::vector<double>>>& label_scores,
    const std::vector<int>& heads, const std::vector<std::string>& labels,
    const std::string& root_label = "root");

}  // namespace tessera::depparse
