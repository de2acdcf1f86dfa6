#include <cstdio>
#include <random>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "tessera/depparse/parser.hpp"
#include "tessera/error.hpp"

using namespace tessera;
using namespace tessera::depparse;

namespace {

Config tiny_config(bool aux = true) {
  Config c;
  c.word_dim = 3;
  c.upos_dim = 2;
  c.feat_dim = 2;
  c.hidden = 3;
  c.layers = 1;
  c.arc_dim = 3;
  c.label_dim = 2;
  c.dropout = 0.0;
  c.aux = aux;
  return c;
}

Example three_words(std::mt19937_64& rng) {
  static const std::vector<std::string> forms{"le", "chat", "dort", "chien", "voit", "."};
  static const std::vector<std::string> upos{"DET", "NOUN", "VERB", "PUNCT"};
  std::uniform_int_distribution<std::size_t> f(0, forms.size() - 1), u(0, upos.size() - 1);
  Example ex;
  for (int i = 0; i < 3; ++i) {
    ex.forms.push_back(forms[f(rng)]);
    ex.upos.push_back(upos[u(rng)]);
    ex.feats.push_back(i == 1 ? std::vector<std::string>{"Number=Sing", "Gender=Masc"} : std::vector<std::string>{});
  }
  // Random single-root tree over 3 words.
  static const std::vector<std::vector<int>> trees{{2, 0, 2}, {0, 1, 1}, {3, 3, 0}, {0, 3, 1}, {2, 3, 0}};
  ex.heads = trees[std::uniform_int_distribution<std::size_t>(0, trees.size() - 1)(rng)];
  ex.labels = {1, 0, 2};
  for (std::size_t d = 0; d < 3; ++d)
    if (ex.heads[d] == 0) ex.labels[d] = 0;
  return ex;
}

}  // namespace

TEST_CASE("distance buckets") {
  CHECK(distance_bucket(1) == 0);
  CHECK(distance_bucket(4) == 3);
  CHECK(distance_bucket(5) == 4);
  CHECK(distance_bucket(8) == 4);
  CHECK(distance_bucket(9) == 5);
  CHECK(distance_bucket(400) == 5);
  CHECK_THROWS_AS(distance_bucket(0), ContractViolation);
}

TEST_CASE("parser examples carry gold trees") {
  const auto corpus = testing::toy_corpus();
  const Parser p(corpus, tiny_config());
  CHECK(p.relations().at(0) == "root");
  const auto ex = p.examples(corpus);
  REQUIRE(ex.size() == 40);
  for (const auto& e : ex) {
    CHECK(is_single_root_tree(e.heads));
    for (std::size_t d = 0; d < e.heads.size(); ++d)
      if (e.heads[d] == 0) CHECK(e.labels[d] == 0);
  }
}

TEST_CASE("auxiliary loss is the weighted sum of linearization and distance terms") {
  const auto corpus = testing::toy_corpus();
  Parser p(corpus, tiny_config());
  std::mt19937_64 rng(3);
  testing::randomize(p.params(), rng, 0.5);
  const Example ex = three_words(rng);
  double with_aux = 0.0, aux = 0.0;
  {
    nn::Graph g;
    with_aux = p.loss(g, ex).scalar();
  }
  {
    nn::Graph g;
    aux = p.aux_loss(g, ex).scalar();
  }
  CHECK(aux > 0.0);
  // The aux-free model with the same parameter values loses exactly that part.
  Parser off(corpus, tiny_config(false));
  for (nn::Parameter* q : off.params().all()) q->value = p.params().get(q->name).value;
  nn::Graph g;
  const double without = off.loss(g, ex).scalar();
  CHECK(with_aux == doctest::Approx(without + aux).epsilon(1e-12));
}

TEST_CASE("parser loss gradients including auxiliary terms") {
  const auto corpus = testing::toy_corpus();
  Parser p(corpus, tiny_config());
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int instance = 0; instance < 20; ++instance) {
    testing::randomize(p.params(), rng, 0.5);
    const Example ex = three_words(rng);
    const auto r = testing::check_gradients(
        p.params(), [&](nn::Graph& g) { return p.loss(g, ex); }, rng, 12);
    INFO(r.worst);
    CHECK(r.max_rel_error < 1e-4);
    worst = std::max(worst, r.max_rel_error);
  }
  MESSAGE("parser max rel error " << worst);
}

TEST_CASE("untrained parser output is a well-formed tree") {
  const auto corpus = testing::toy_corpus();
  Parser p(corpus, tiny_config());
  std::mt19937_64 rng(5);
  testing::randomize(p.params(), rng, 1.0);
  for (const auto& ex : p.examples(corpus)) {
    const auto [heads, labels] = p.parse(ex);
    CHECK(is_single_root_tree(heads));
    for (std::size_t d = 0; d < heads.size(); ++d) {
      CHECK(p.relations().find(labels[d]));
      CHECK((heads[d] == 0) == (labels[d] == "root"));
    }
  }
  Example one;
  one.forms = {"zzz"};
  one.upos = {std::nullopt};
  one.feats = {{}};
  CHECK(p.parse(one).first == std::vector<int>{0});
  CHECK_THROWS_AS(p.parse(Example{}), ContractViolation);
}

TEST_CASE("parser save and load reproduce scores") {
  const auto corpus = testing::toy_corpus();
  Parser p(corpus, tiny_config());
  std::mt19937_64 rng(8);
  testing::randomize(p.params(), rng, 1.0);
  const std::string path = "parser_roundtrip.model";
  p.save(path);
  const Parser q = Parser::load(path);
  std::remove(path.c_str());
  const auto ex = p.examples(corpus)[3];
  CHECK(p.score_arcs(ex) == q.score_arcs(ex));
  CHECK(p.parse(ex) == q.parse(ex));
}
