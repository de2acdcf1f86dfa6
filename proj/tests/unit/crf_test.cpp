#include <cmath>

#include "doctest.h"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "tessera/error.hpp"
#include "tessera/ner/crf.hpp"

using namespace tessera;
using tessera::testing::brute_force_crf;
using tessera::testing::random_lattice;

TEST_CASE("crf log partition of an all-zero lattice is n ln K") {
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::size_t k = 1; k <= 5; ++k) {
      const crf::Lattice l(n, k);
      CHECK(crf::log_partition(l) == doctest::Approx(static_cast<double>(n) * std::log(k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("crf n = 1 closed form") {
  std::mt19937_64 rng(10);
  const auto l = random_lattice(1, 4, rng);
  double z = 0.0;
  for (std::size_t j = 0; j < 4; ++j) z += std::exp(l.begin[j] + l.emissions[j] + l.end[j]);
  CHECK(crf::log_partition(l) == doctest::Approx(std::log(z)).epsilon(1e-12));
}

TEST_CASE("crf matches brute force on random lattices") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> len(1, 6), tags(1, 5);
  for (int trial = 0; trial < 300; ++trial) {
    const auto l = random_lattice(len(rng), tags(rng), rng);
    const auto oracle = brute_force_crf(l);
    const auto decoded = crf::viterbi(l);
    CHECK(decoded.score == oracle.max_score);
    CHECK(decoded.tags == oracle.argmax);
    CHECK(std::abs(crf::log_partition(l) - oracle.log_partition) < 1e-6);
  }
}

TEST_CASE("viterbi takes the lexicographically smallest of tied optima") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> small(-1, 1);
  std::uniform_int_distribution<std::size_t> len(1, 5), tags(1, 4);
  for (int trial = 0; trial < 300; ++trial) {
    crf::Lattice l(len(rng), tags(rng));
    for (auto* v : {&l.emissions, &l.transitions, &l.begin, &l.end})
      for (double& x : *v) x = small(rng);
    const auto oracle = brute_force_crf(l);
    const auto decoded = crf::viterbi(l);
    CHECK(decoded.score == oracle.max_score);
    CHECK(decoded.tags == oracle.argmax);
  }
}

TEST_CASE("viterbi fixed cases") {
  SUBCASE("single tag") {
    std::mt19937_64 rng(13);
    const auto l = random_lattice(5, 1, rng);
    CHECK(crf::viterbi(l).tags == std::vector<int>(5, 0));
  }
  SUBCASE("dominant diagonal transitions give a constant path") {
    crf::Lattice l(3, 3);
    for (std::size_t i = 0; i < 3; ++i) l.transitions[i * 3 + i] = 10.0;
    l.emissions = {0, 1, 0, 2, 0, 0, 0, 0, 1.5};
    // Constant paths score 20 + (0+2+0), 20 + (1+0+0), 20 + (0+0+1.5).
    const auto d = crf::viterbi(l);
    CHECK(d.tags == std::vector<int>{0, 0, 0});
    CHECK(d.score == 22.0);
  }
  SUBCASE("empty lattice") {
    CHECK(crf::viterbi(crf::Lattice(0, 3)).tags.empty());
    CHECK_THROWS_AS(crf::log_partition(crf::Lattice(0, 3)), ContractViolation);
  }
}

TEST_CASE("gold score <= viterbi score <= log partition") {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<std::size_t> len(1, 8), tags(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto l = random_lattice(len(rng), tags(rng), rng);
    std::uniform_int_distribution<int> tag(0, static_cast<int>(l.k) - 1);
    std::vector<int> gold(l.n);
    for (int& y : gold) y = tag(rng);
    const double g = crf::path_score(l, gold);
    const double v = crf::viterbi(l).score;
    const double z = crf::log_partition(l);
    CHECK(g <= v);
    CHECK(v <= z);
    CHECK(g - z <= 0.0);
  }
}

TEST_CASE("crf marginals") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const auto l = random_lattice(1 + trial % 6, 1 + trial % 5, rng, 1.0);
    const auto m = crf::marginals(l);
    for (std::size_t t = 0; t < l.n; ++t) {
      double total = 0.0;
      for (std::size_t j = 0; j < l.k; ++j) total += m.unary[t * l.k + j];
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
    // d logZ / d emission = unary marginal.
    const double h = 1e-5;
    for (std::size_t i = 0; i < l.emissions.size(); ++i) {
      auto plus = l, minus = l;
      plus.emissions[i] += h;
      minus.emissions[i] -= h;
      const double numeric = (crf::log_partition(plus) - crf::log_partition(minus)) / (2 * h);
      CHECK(tessera::testing::relative_error(m.unary[i], numeric) < 1e-4);
    }
  }
}

TEST_CASE("crf negative log-likelihood gradients") {
  std::mt19937_64 rng(16);
  double worst = 0.0;
  for (int inst = 0; inst < 30; ++inst) {
    const std::size_t n = 1 + inst % 6, k = 1 + inst % 5;
    nn::ParameterSet params;
    auto& e = params.add("emissions", {n, k}, nn::Init::Zero, rng);
    auto& t = params.add("transitions", {k, k}, nn::Init::Zero, rng);
    auto& b = params.add("begin", {k}, nn::Init::Zero, rng);
    auto& en = params.add("end", {k}, nn::Init::Zero, rng);
    tessera::testing::randomize(params, rng);
    std::uniform_int_distribution<int> tag(0, static_cast<int>(k) - 1);
    std::vector<int> gold(n);
    for (int& y : gold) y = tag(rng);
    const auto res = tessera::testing::check_gradients(
        params,
        [&](nn::Graph& g) { return crf::nll(g.param(e), g.param(t), g.param(b), g.param(en), gold); },
        rng);
    worst = std::max(worst, res.max_rel_error);
  }
  CHECK(worst < 1e-4);
}
