#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "tessera/doc/bio.hpp"
#include "tessera/error.hpp"
#include "tessera/ner/charlm.hpp"
#include "tessera/ner/tagger.hpp"
#include "tessera/text/utf8.hpp"

using namespace tessera;
using namespace tessera::ner;

namespace {

CharLmConfig tiny_lm(std::size_t epochs = 0) {
  CharLmConfig c;
  c.embed_dim = 3;
  c.hidden = 3;
  c.window = 8;
  c.epochs = epochs;
  return c;
}

Config tiny_ner() {
  Config c;
  c.word_dim = 3;
  c.hidden = 3;
  c.dropout = 0.0;
  c.charlm = tiny_lm();
  return c;
}

std::vector<bio::TaggedSentence> ner_fixture() { return bio::read_file(testing::data_path("toy_ner.bio")); }

void zero(nn::ParameterSet& params) {
  for (nn::Parameter* p : params.all())
    for (double& v : p->value.data()) v = 0.0;
}

}  // namespace

TEST_CASE("backward language model reads the reversed stream") {
  const CharLM fwd(U"ab", Direction::Forward, tiny_lm());
  const CharLM bwd(U"ab", Direction::Backward, tiny_lm());
  CHECK(fwd.reading_order(U"ab") == U"ab");
  CHECK(bwd.reading_order(U"ab") == U"ba");
  // No shared parameters: changing one model leaves the other unchanged.
  CHECK(&fwd.params() != &bwd.params());
}

TEST_CASE("language model on a deterministic stream drives the loss toward zero") {
  std::u32string text;
  for (int i = 0; i < 200; ++i) text += U"ab";
  CharLmConfig c = tiny_lm(30);
  c.hidden = 8;
  c.window = 20;
  c.learning_rate = 1e-2;
  const CharLM untrained(text, Direction::Forward, c);
  const double before = untrained.mean_loss(text);
  const CharLM lm = CharLM::train(text, Direction::Forward, c);
  const double after = lm.mean_loss(text);
  MESSAGE("abab loss " << before << " -> " << after);
  CHECK(after < before);
  CHECK(after < 0.05);
}

TEST_CASE("language model on a uniform random stream plateaus near ln K") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> pick(0, 3);
  std::u32string text;
  for (int i = 0; i < 2000; ++i) text += static_cast<char32_t>(U'a' + pick(rng));
  CharLmConfig c = tiny_lm(3);
  c.hidden = 8;
  c.window = 25;
  const CharLM lm = CharLM::train(text, Direction::Forward, c);
  // The vocabulary also holds the space and UNK symbols, never emitted.
  const double loss = lm.mean_loss(text);
  MESSAGE("uniform loss " << loss << " ln4 " << std::log(4.0));
  CHECK(loss > std::log(4.0) - 0.05);
  CHECK(loss < std::log(4.0) + 0.1);
}

TEST_CASE("contextual embedding takes states at the word boundaries") {
  std::mt19937_64 rng(9);
  CharLM fwd(U" abc", Direction::Forward, tiny_lm());
  CharLM bwd(U" abc", Direction::Backward, tiny_lm());
  testing::randomize(fwd.params(), rng, 1.0);
  testing::randomize(bwd.params(), rng, 1.0);

  SUBCASE("single word") {
    const auto [chars, spans] = sentence_chars({"abc"});
    REQUIRE(chars == U" abc ");
    REQUIRE(spans == std::vector<Span>{{1, 4}});
    const auto v = contextual_embed(fwd, bwd, chars, spans);
    REQUIRE(v.size() == 1);
    const auto f = fwd.states(chars);
    const auto b = bwd.states(bwd.reading_order(chars));
    std::vector<double> expected = f.back();
    expected.insert(expected.end(), b.back().begin(), b.back().end());
    CHECK(v[0] == expected);
  }
  SUBCASE("identical words in different contexts differ") {
    const auto [chars, spans] = sentence_chars({"a", "b", "c", "a"});
    const auto v = contextual_embed(fwd, bwd, chars, spans);
    CHECK(v[0] != v[3]);
  }
  SUBCASE("spans out of range") {
    CHECK_THROWS_AS(contextual_embed(fwd, bwd, U" ab ", {{0, 2}}), ContractViolation);
    CHECK_THROWS_AS(contextual_embed(fwd, bwd, U" ab ", {{1, 4}}), ContractViolation);
    CHECK_THROWS_AS(contextual_embed(bwd, fwd, U" ab ", {{1, 3}}), ContractViolation);
  }
}

TEST_CASE("zero language models give zero context and keep the word embedding") {
  const auto data = ner_fixture();
  const std::u32string text = charlm_text(data);
  CharLM fwd(text, Direction::Forward, tiny_lm());
  CharLM bwd(text, Direction::Backward, tiny_lm());
  zero(fwd.params());
  zero(bwd.params());
  NerTagger t(data, std::move(fwd), std::move(bwd), tiny_ner());
  nn::Graph g;
  const auto xs = t.inputs(g, data[0].words);
  for (const auto& x : xs) {
    const auto v = x.value();
    REQUIRE(v.size() == 3 + 3 + 3);
    for (std::size_t i = 0; i < 6; ++i) CHECK(v[i] == 0.0);
    CHECK(std::any_of(v.begin() + 6, v.end(), [](double d) { return d != 0.0; }));
  }
}

TEST_CASE("NER loss gradients") {
  const auto data = ner_fixture();
  const std::u32string text = charlm_text(data);
  NerTagger t(data, CharLM(text, Direction::Forward, tiny_lm()), CharLM(text, Direction::Backward, tiny_lm()),
              tiny_ner());
  std::mt19937_64 rng(21);
  double worst = 0.0;
  for (int instance = 0; instance < 20; ++instance) {
    testing::randomize(t.params(), rng, 0.5);
    const auto& s = data[static_cast<std::size_t>(instance) % data.size()];
    const auto r = testing::check_gradients(
        t.params(), [&](nn::Graph& g) { return t.loss(g, s.words, s.tags); }, rng, 10);
    INFO(r.worst);
    CHECK(r.max_rel_error < 1e-4);
    worst = std::max(worst, r.max_rel_error);
  }
  MESSAGE("ner max rel error " << worst);
}

TEST_CASE("NER predictions are well-formed BIOES and entities carry offsets") {
  const auto data = ner_fixture();
  const std::u32string text = charlm_text(data);
  NerTagger t(data, CharLM(text, Direction::Forward, tiny_lm()), CharLM(text, Direction::Backward, tiny_lm()),
              tiny_ner());
  std::mt19937_64 rng(2);
  testing::randomize(t.params(), rng, 1.0);
  for (const auto& s : data) {
    const auto tags = t.predict_tags(s.words);
    REQUIRE(tags.size() == s.words.size());
    CHECK(bio::repair(tags) == tags);
  }
  CHECK(t.predict_tags({}).empty());
  CHECK(t.predict_tags({"unseen\xc3\xa9"}).size() == 1);
}

TEST_CASE("NER save and load, with the language model hash checked") {
  const auto data = ner_fixture();
  Config c = tiny_ner();
  c.epochs = 1;
  c.charlm.epochs = 1;
  const NerTagger t = NerTagger::train(data, c);
  const std::string path = "ner_roundtrip.model";
  t.save(path);
  const NerTagger u = NerTagger::load(path);
  CHECK(u.forward_lm().content_hash() == t.forward_lm().content_hash());
  for (const auto& s : data) CHECK(u.predict_tags(s.words) == t.predict_tags(s.words));

  // Flip one byte of the last tensor (a backward language model weight).
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(-3, std::ios::end);
    char byte = 0;
    f.read(&byte, 1);
    f.seekp(-3, std::ios::end);
    byte = static_cast<char>(byte ^ 0x10);
    f.write(&byte, 1);
  }
  CHECK_THROWS_WITH_AS(NerTagger::load(path), doctest::Contains("hash"), Error);
  std::remove(path.c_str());
}

TEST_CASE("NER training data from annotated documents") {
  const auto corpus = testing::toy_corpus();
  const auto data = tagged_sentences(corpus);
  REQUIRE(data.size() == 40);
  std::size_t entities = 0;
  for (const auto& s : data) {
    CHECK(s.words.size() == s.tags.size());
    for (const auto& tag : s.tags) entities += bio::prefix(tag) == 'B' || bio::prefix(tag) == 'S';
  }
  CHECK(entities > 0);
  CHECK_THROWS_AS(NerTagger::train({}, tiny_ner()), Error);
}
