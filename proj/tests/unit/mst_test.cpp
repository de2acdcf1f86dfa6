#include "doctest.h"
#include "support/oracles.hpp"
#include "tessera/depparse/mst.hpp"
#include "tessera/error.hpp"

using namespace tessera;
using namespace tessera::depparse;
using tessera::testing::brute_force_mst;
using tessera::testing::random_arc_scores;

TEST_CASE("single word attaches to the root") {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 10; ++trial) {
    CHECK(decode_mst(random_arc_scores(1, rng)) == std::vector<int>{0});
  }
}

TEST_CASE("empty and malformed inputs") {
  CHECK_THROWS_AS(decode_mst({}), ContractViolation);
  CHECK_THROWS_AS(decode_mst({{0.0}}), ContractViolation);
  ArcScores bad(3, std::vector<double>(3, 0.0));
  bad[1][2] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(decode_mst(bad), ContractViolation);
}

TEST_CASE("chain-favoring scores give the chain") {
  ArcScores s(4, std::vector<double>(4, 0.0));
  for (std::size_t i = 0; i + 1 < 4; ++i) s[i][i + 1] = 10.0;
  const auto heads = decode_mst(s);
  CHECK(heads == std::vector<int>{0, 1, 2});
  CHECK(tree_score(s, heads) == 30.0);
}

TEST_CASE("single-root constraint is enforced") {
  // The unconstrained optimum attaches every word to the root.
  ArcScores s(4, std::vector<double>(4, 0.0));
  for (std::size_t d = 1; d <= 3; ++d) s[0][d] = 5.0;
  s[2][1] = 1.0;
  s[2][3] = 2.0;
  const auto heads = decode_mst(s);
  CHECK(is_single_root_tree(heads));
  CHECK(heads == std::vector<int>{2, 0, 2});
  CHECK(tree_score(s, heads) == 8.0);
}

TEST_CASE("decode_mst matches exhaustive search") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> len(1, 6);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = random_arc_scores(len(rng), rng);
    const auto heads = decode_mst(s);
    REQUIRE(is_single_root_tree(heads));
    CHECK(tree_score(s, heads) == brute_force_mst(s).max_score);
  }
}

TEST_CASE("decode_mst with heavy ties stays optimal") {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> small(0, 2);
  std::uniform_int_distribution<std::size_t> len(2, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = len(rng);
    ArcScores s(n + 1, std::vector<double>(n + 1));
    for (auto& row : s)
      for (double& x : row) x = small(rng);
    const auto heads = decode_mst(s);
    REQUIRE(is_single_root_tree(heads));
    CHECK(tree_score(s, heads) == brute_force_mst(s).max_score);
  }
}

TEST_CASE("brute force counts match Cayley's formula for rooted single-root trees") {
  // Single-root arborescences over n words: n^(n-1).
  std::mt19937_64 rng(23);
  CHECK(brute_force_mst(random_arc_scores(3, rng)).trees == 9);
  CHECK(brute_force_mst(random_arc_scores(4, rng)).trees == 64);
}

TEST_CASE("shifting all arcs into one dependent keeps the decoded tree") {
  std::mt19937_64 rng(24);
  std::uniform_int_distribution<std::size_t> len(2, 7);
  std::normal_distribution<double> shift(0.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = len(rng);
    auto s = random_arc_scores(n, rng);
    const auto before = decode_mst(s);
    const std::size_t d = 1 + trial % n;
    const double c = shift(rng);
    for (std::size_t h = 0; h <= n; ++h) s[h][d] += c;
    CHECK(decode_mst(s) == before);
  }
}

TEST_CASE("assign_labels") {
  const std::vector<std::string> labels = {"nsubj", "obj", "det"};
  std::vector<std::vector<std::vector<double>>> ls(
      4, std::vector<std::vector<double>>(4, std::vector<double>(3, 0.0)));
  ls[2][1] = {3.0, 1.0, 0.0};
  ls[2][3] = {1.0, 1.0, 0.5};  // tie between 0 and 1 -> lowest index
  ls[0][2] = {0.0, 0.0, 9.0};  // ignored: root attachment
  CHECK(assign_labels(ls, {2, 0, 2}, labels) == std::vector<std::string>{"nsubj", "root", "nsubj"});
}
