#include <cstdio>
#include <random>
#include <sstream>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "tessera/error.hpp"
#include "tessera/text/utf8.hpp"
#include "tessera/tokenize/tokenizer.hpp"

using namespace tessera;
using namespace tessera::tokenize;
using L = CharLabel;

namespace {

Token make_token(std::size_t start, std::size_t end, const std::string& text) {
  Token t;
  t.start_char = start;
  t.end_char = end;
  t.surface = utf8::substr(text, start, end);
  return t;
}

// Random document: words over a small alphabet (with a non-ASCII letter),
// separated by a space or glued, sentence breaks and MWT flags at random.
Document random_document(std::mt19937_64& rng) {
  const std::u32string alphabet = U"abcé.,";
  std::uniform_int_distribution<std::size_t> letter(0, alphabet.size() - 1), len(1, 4), count(0, 12);
  std::bernoulli_distribution coin(0.5), rare(0.2);
  std::u32string text;
  Document doc;
  Sentence s;
  const std::size_t tokens = count(rng);
  for (std::size_t i = 0; i < tokens; ++i) {
    if (!text.empty() && (coin(rng) || s.tokens.empty())) text += coin(rng) ? U" " : U"\n";
    Token t;
    t.start_char = text.size();
    for (std::size_t k = len(rng); k > 0; --k) text += alphabet[letter(rng)];
    t.end_char = text.size();
    t.expand = rare(rng);
    s.tokens.push_back(t);
    if (rare(rng) || i + 1 == tokens) {
      doc.sentences.push_back(std::move(s));
      s = Sentence{};
    }
  }
  if (coin(rng)) text += U"  ";
  doc.text = utf8::encode(text);
  for (auto& sent : doc.sentences) {
    for (auto& t : sent.tokens) t.surface = utf8::encode(text.substr(t.start_char, t.end_char - t.start_char));
    assign_identity_words(sent);
  }
  return doc;
}

Config tiny_config() {
  Config c;
  c.embed_dim = 3;
  c.hidden = 3;
  c.dropout = 0.0;
  return c;
}

}  // namespace

TEST_CASE("derive_char_labels") {
  SUBCASE("Hi.") {
    Document doc;
    doc.text = "Hi.";
    Sentence s;
    s.tokens = {make_token(0, 2, doc.text), make_token(2, 3, doc.text)};
    assign_identity_words(s);
    doc.sentences.push_back(s);
    CHECK(derive_char_labels(doc) == std::vector<L>{L::Inside, L::TokenEnd, L::SentEnd});
  }
  SUBCASE("French MWT fixture") {
    const auto docs = conllu::read_file(testing::data_path("fr_mwt.conllu"));
    REQUIRE(docs.size() == 1);
    const auto labels = derive_char_labels(docs[0]);
    const Token& des = docs[0].sentences[0].tokens[2];
    REQUIRE(des.surface == "des");
    CHECK(labels[des.end_char - 1] == L::MwtTokenEnd);
    CHECK(labels[des.start_char] == L::Inside);
    const auto ends = std::count_if(labels.begin(), labels.end(),
                                    [](L l) { return l == L::SentEnd || l == L::MwtSentEnd; });
    CHECK(ends == 2);
  }
  SUBCASE("offset mismatch") {
    Document doc;
    doc.text = "Hi.";
    Sentence s;
    Token t = make_token(0, 2, doc.text);
    t.surface = "Ho";
    s.tokens = {t};
    doc.sentences.push_back(s);
    CHECK_THROWS_AS(derive_char_labels(doc), ContractViolation);
  }
}

TEST_CASE("segment inverts derive_char_labels") {
  std::mt19937_64 rng(30);
  for (int trial = 0; trial < 500; ++trial) {
    const Document doc = random_document(rng);
    const auto labels = derive_char_labels(doc);
    const Document back = segment(doc.text, labels);
    CHECK(derive_char_labels(back) == labels);
    REQUIRE(back.sentences.size() == doc.sentences.size());
    for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
      const auto& a = doc.sentences[i].tokens;
      const auto& b = back.sentences[i].tokens;
      REQUIRE(a.size() == b.size());
      for (std::size_t j = 0; j < a.size(); ++j) {
        CHECK(a[j].start_char == b[j].start_char);
        CHECK(a[j].end_char == b[j].end_char);
        CHECK(a[j].expand == b[j].expand);
      }
    }
    CHECK(validate(back).empty());
  }
}

TEST_CASE("segment partitions non-whitespace for arbitrary labels") {
  std::mt19937_64 rng(31);
  const std::u32string alphabet = U"ab. \nç";
  std::uniform_int_distribution<std::size_t> letter(0, alphabet.size() - 1), len(0, 30);
  std::uniform_int_distribution<int> label(0, 4);
  for (int trial = 0; trial < 500; ++trial) {
    std::u32string text;
    for (std::size_t k = len(rng); k > 0; --k) text += alphabet[letter(rng)];
    std::vector<L> labels(text.size());
    for (auto& l : labels) l = static_cast<L>(label(rng));
    const Document doc = segment(utf8::encode(text), labels);
    std::u32string covered, sentences;
    for (const auto& s : doc.sentences) {
      for (const auto& t : s.tokens) {
        const std::u32string span = utf8::decode(t.surface);
        CHECK(std::none_of(span.begin(), span.end(), utf8::is_space));
        covered += span;
      }
      sentences += utf8::decode(doc.sentence_text(s));
    }
    CHECK(covered == utf8::strip_spaces(text));
    CHECK(utf8::strip_spaces(sentences) == utf8::strip_spaces(text));
    CHECK(validate(doc).empty());
  }
}

TEST_CASE("paragraph chunks") {
  const std::u32string text = U"a b\n\nc\n \n\nd\ne\n";
  const auto p = paragraphs(text);
  REQUIRE(p.size() == 3);
  CHECK(text.substr(p[0].first, p[0].second - p[0].first) == U"a b");
  CHECK(text.substr(p[1].first, p[1].second - p[1].first) == U"c");
  CHECK(text.substr(p[2].first, p[2].second - p[2].first) == U"d\ne\n");
  CHECK(paragraphs(U"").empty());
}

TEST_CASE("untrained tokenizer is total") {
  const Tokenizer t(testing::toy_corpus(), tiny_config());
  CHECK(t.tokenize("").sentences.empty());
  const Document one = t.tokenize("\xe2\x9c\x93");  // a character unseen in training
  REQUIRE(one.sentences.size() == 1);
  CHECK(one.sentences[0].tokens.size() == 1);
  const Document ws = t.tokenize("  \n ");
  CHECK(ws.sentences.empty());
  const Document para = t.tokenize("abc de\n\nfg");
  CHECK(para.sentences.size() >= 2);
  CHECK(validate(para).empty());
}

TEST_CASE("tokenizer loss gradients") {
  std::mt19937_64 rng(32);
  const auto corpus = testing::toy_corpus();
  std::uniform_int_distribution<int> label(0, 4);
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    Config c = tiny_config();
    c.seed = static_cast<std::uint64_t>(inst);
    Tokenizer t(corpus, c);
    testing::randomize(t.params(), rng, 0.5);
    const std::u32string chars = U"Le chat." + std::u32string(1, U"xyz"[inst % 3]);
    std::vector<L> gold(chars.size());
    for (auto& l : gold) l = static_cast<L>(label(rng));
    const auto res = testing::check_gradients(
        t.params(), [&](nn::Graph& g) { return t.loss(g, chars, gold); }, rng, 6);
    worst = std::max(worst, res.max_rel_error);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("tokenizer training lowers the loss and survives save/load") {
  auto corpus = testing::toy_corpus();
  corpus.resize(2);
  Config c;
  c.embed_dim = 8;
  c.hidden = 16;
  c.dropout = 0.0;
  c.epochs = 1;
  std::ostringstream log1, log8;
  Tokenizer::train(corpus, c, &log1);
  c.epochs = 8;
  const Tokenizer trained = Tokenizer::train(corpus, c, &log8);
  auto last_loss = [](const std::string& log) {
    return std::stod(log.substr(log.rfind("loss ") + 5));
  };
  CHECK(last_loss(log8.str()) < last_loss(log1.str()));

  trained.save("tokenizer_test.model");
  const Tokenizer loaded = Tokenizer::load("tokenizer_test.model");
  CHECK(loaded.predict(corpus[0].text) == trained.predict(corpus[0].text));
  std::remove("tokenizer_test.model");
  CHECK_THROWS_AS(Tokenizer::train({}, c), Error);
}
