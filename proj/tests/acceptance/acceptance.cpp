// Acceptance suite. Prints one PASS/FAIL line per criterion, followed by
// indented measurements; exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/toy_models.hpp"
#include "tessera/depparse/mst.hpp"
#include "tessera/depparse/parser.hpp"
#include "tessera/doc/bio.hpp"
#include "tessera/doc/conllu.hpp"
#include "tessera/eval/evaluator.hpp"
#include "tessera/lemma/lemmatizer.hpp"
#include "tessera/mwt/expander.hpp"
#include "tessera/ner/crf.hpp"
#include "tessera/ner/tagger.hpp"
#include "tessera/pipeline/wire.hpp"
#include "tessera/pos/tagger.hpp"
#include "tessera/seq2seq/seq2seq.hpp"
#include "tessera/server/server.hpp"
#include "tessera/text/utf8.hpp"
#include "tessera/tokenize/tokenizer.hpp"

using namespace tessera;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int precision = 2) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << v;
  return out.str();
}

std::string sci(double v) {
  std::ostringstream out;
  out << std::scientific << std::setprecision(2) << v;
  return out.str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Collects sub-check results for one criterion.
struct Report {
  bool pass = true;
  std::vector<std::string> lines;

  void check(bool ok, const std::string& line) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok   " : "FAIL ") + line);
  }
  void note(const std::string& line) { lines.push_back("     " + line); }
};

// ---------------------------------------------------------------- CRF

Report crf_oracles() {
  Report r;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> len(1, 6), tags(1, 5);
  const auto t0 = Clock::now();
  std::size_t score_mismatches = 0, path_mismatches = 0;
  double worst_logz = 0.0;
  for (int i = 0; i < 200; ++i) {
    const crf::Lattice l = testing::random_lattice(len(rng), tags(rng), rng);
    const auto brute = testing::brute_force_crf(l);
    const auto decoded = crf::viterbi(l);
    if (decoded.score != brute.max_score) ++score_mismatches;
    if (decoded.tags != brute.argmax) ++path_mismatches;
    worst_logz = std::max(worst_logz, std::abs(crf::log_partition(l) - brute.log_partition));
  }
  const double elapsed = seconds_since(t0);
  r.check(score_mismatches == 0, "viterbi score == brute-force max on 200/200 lattices (mismatches: " +
                                     std::to_string(score_mismatches) + ")");
  r.note("argmax path also identical on " + std::to_string(200 - path_mismatches) + "/200");
  r.check(worst_logz < 1e-6, "max |logZ - brute logsumexp| = " + sci(worst_logz) + " < 1e-6");
  r.check(elapsed < 30.0, "runtime " + fmt(elapsed, 3) + " s < 30 s");
  return r;
}

// ---------------------------------------------------------------- MST

Report mst_oracle() {
  Report r;
  std::mt19937_64 rng(4048);
  std::uniform_int_distribution<std::size_t> len(1, 6);
  const auto t0 = Clock::now();
  std::size_t mismatches = 0, malformed = 0;
  for (int i = 0; i < 200; ++i) {
    const auto scores = testing::random_arc_scores(len(rng), rng);
    const auto heads = depparse::decode_mst(scores);
    if (!depparse::is_single_root_tree(heads)) ++malformed;
    if (depparse::tree_score(scores, heads) != testing::brute_force_mst(scores).max_score) ++mismatches;
  }
  const double elapsed = seconds_since(t0);
  r.check(mismatches == 0, "decode_mst score == exhaustive single-root optimum on 200/200 (mismatches: " +
                               std::to_string(mismatches) + ")");
  r.check(malformed == 0, "every decoded tree is single-rooted and acyclic");
  r.check(elapsed < 60.0, "runtime " + fmt(elapsed, 3) + " s < 60 s");
  return r;
}

// ---------------------------------------------------------------- gradients

constexpr int kGradInstances = 20;
constexpr double kGradTolerance = 1e-4;

struct GradOutcome {
  double worst = 0.0;
  std::size_t entries = 0;
  std::string where;

  void add(const testing::GradCheckResult& res) {
    entries += res.checked;
    if (res.max_rel_error >= worst) {
      worst = res.max_rel_error;
      where = res.worst;
    }
  }
};

GradOutcome tokenizer_gradients(const std::vector<Document>& corpus, std::mt19937_64& rng) {
  GradOutcome out;
  std::uniform_int_distribution<int> label(0, 4);
  for (int inst = 0; inst < kGradInstances; ++inst) {
    tokenize::Config c;
    c.embed_dim = 3;
    c.hidden = 3;
    c.dropout = 0.0;
    c.seed = static_cast<std::uint64_t>(inst);
    tokenize::Tokenizer t(corpus, c);
    testing::randomize(t.params(), rng, 0.5);
    const std::u32string chars = U"Le chat." + std::u32string(1, U"xyzé"[inst % 4]);
    std::vector<tokenize::CharLabel> gold(chars.size());
    for (auto& l : gold) l = static_cast<tokenize::CharLabel>(label(rng));
    out.add(testing::check_gradients(t.params(), [&](nn::Graph& g) { return t.loss(g, chars, gold); }, rng, 6));
  }
  return out;
}

GradOutcome tagger_gradients(const std::vector<Document>& corpus, std::mt19937_64& rng) {
  GradOutcome out;
  for (int inst = 0; inst < kGradInstances; ++inst) {
    pos::Config c;
    c.word_dim = 3;
    c.char_dim = 2;
    c.char_hidden = 2;
    c.hidden = 3;
    c.upos_dim = 2;
    c.dropout = 0.0;
    c.seed = static_cast<std::uint64_t>(inst);
    pos::Tagger t(corpus, c);
    testing::randomize(t.params(), rng, 0.5);
    const auto examples = t.examples(corpus);
    pos::Example ex = examples[static_cast<std::size_t>(inst) % examples.size()];
    ex.forms.resize(3);
    ex.upos.resize(3);
    ex.xpos.resize(3);
    ex.feats.resize(3);
    if (inst % 2) ex.xpos[1].reset();
    out.add(testing::check_gradients(t.params(), [&](nn::Graph& g) { return t.loss(g, ex); }, rng, 5));
  }
  return out;
}

GradOutcome parser_gradients(const std::vector<Document>& corpus, std::mt19937_64& rng) {
  GradOutcome out;
  depparse::Config c;
  c.word_dim = 3;
  c.upos_dim = 2;
  c.feat_dim = 2;
  c.hidden = 3;
  c.layers = 1;
  c.arc_dim = 3;
  c.label_dim = 2;
  c.dropout = 0.0;
  c.aux = true;
  depparse::Parser p(corpus, c);
  // Random four-word single-root trees over real forms and tags.
  const auto examples = p.examples(corpus);
  static const std::vector<std::vector<int>> trees{{2, 0, 2, 2}, {0, 1, 4, 1}, {3, 3, 0, 3},
                                                   {0, 3, 1, 3}, {2, 3, 4, 0}};
  for (int inst = 0; inst < kGradInstances; ++inst) {
    testing::randomize(p.params(), rng, 0.5);
    depparse::Example ex = examples[static_cast<std::size_t>(inst * 3) % examples.size()];
    ex.forms.resize(4);
    ex.upos.resize(4);
    ex.feats.resize(4);
    ex.heads = trees[static_cast<std::size_t>(inst) % trees.size()];
    ex.labels.assign(4, 0);
    for (std::size_t d = 0; d < 4; ++d)
      if (ex.heads[d] != 0) ex.labels[d] = 1 + (d + static_cast<std::size_t>(inst)) % (p.relations().size() - 1);
    out.add(testing::check_gradients(p.params(), [&](nn::Graph& g) { return p.loss(g, ex); }, rng, 12));
  }
  return out;
}

GradOutcome lemmatizer_gradients(const std::vector<Document>& corpus, std::mt19937_64& rng) {
  GradOutcome out;
  for (int inst = 0; inst < kGradInstances; ++inst) {
    lemma::Config c;
    c.model.embed_dim = 3;
    c.model.hidden = 3;
    c.model.dropout = 0.0;
    c.seed = static_cast<std::uint64_t>(inst);
    lemma::Lemmatizer l(corpus, c);
    testing::randomize(l.params(), rng, 0.5);
    const auto data = l.examples(corpus);
    const lemma::Example& ex = data[static_cast<std::size_t>(inst * 7) % data.size()];
    out.add(testing::check_gradients(l.params(), [&](nn::Graph& g) { return l.loss(g, ex); }, rng, 5));
  }
  return out;
}

// The expander's fallback model: characters of an MWT surface to the
// characters of its words joined by the separator.
GradOutcome mwt_gradients(const std::vector<Document>& corpus, std::mt19937_64& rng) {
  std::vector<std::pair<seq2seq::Symbols, seq2seq::Symbols>> pairs;
  nn::Vocab src, tgt;
  for (const auto& doc : corpus)
    for (const auto& s : doc.sentences)
      for (const auto& t : s.tokens) {
        if (!t.is_mwt()) continue;
        std::string joined;
        for (const Word* w : s.words_of(t)) joined += (joined.empty() ? "" : mwt::kSeparator) + w->form;
        pairs.emplace_back(seq2seq::chars(t.surface), seq2seq::chars(joined));
        for (const auto& ch : pairs.back().first) src.add(ch);
        for (const auto& ch : pairs.back().second) tgt.add(ch);
      }
  if (pairs.empty()) throw Error("fixture has no multi-word tokens");
  GradOutcome out;
  for (int inst = 0; inst < kGradInstances; ++inst) {
    nn::ParameterSet params;
    seq2seq::Config cfg;
    cfg.embed_dim = 3;
    cfg.hidden = 3;
    cfg.dropout = 0.0;
    nn::Rng init(static_cast<std::uint64_t>(inst));
    const seq2seq::Model m(params, "mwt", src, tgt, cfg, init);
    testing::randomize(params, rng, 0.5);
    const auto& [source, target] = pairs[static_cast<std::size_t>(inst) % pairs.size()];
    out.add(testing::check_gradients(params, [&](nn::Graph& g) { return m.loss(g, source, target); }, rng, 8));
  }
  return out;
}

GradOutcome ner_gradients(std::mt19937_64& rng) {
  const auto data = bio::read_file(testing::data_path("toy_ner.bio"));
  const std::u32string text = ner::charlm_text(data);
  ner::CharLmConfig lm;
  lm.embed_dim = 3;
  lm.hidden = 3;
  lm.window = 8;
  lm.epochs = 0;
  ner::Config c;
  c.word_dim = 3;
  c.hidden = 3;
  c.dropout = 0.0;
  c.charlm = lm;
  ner::NerTagger t(data, ner::CharLM(text, ner::Direction::Forward, lm),
                   ner::CharLM(text, ner::Direction::Backward, lm), c);
  GradOutcome out;
  for (int inst = 0; inst < kGradInstances; ++inst) {
    testing::randomize(t.params(), rng, 0.5);
    const auto& s = data[static_cast<std::size_t>(inst) % data.size()];
    out.add(testing::check_gradients(t.params(), [&](nn::Graph& g) { return t.loss(g, s.words, s.tags); }, rng, 10));
  }
  return out;
}

GradOutcome crf_gradients(std::mt19937_64& rng) {
  GradOutcome out;
  for (int inst = 0; inst < kGradInstances; ++inst) {
    const std::size_t n = 1 + static_cast<std::size_t>(inst) % 6, k = 1 + static_cast<std::size_t>(inst) % 5;
    nn::ParameterSet params;
    auto& e = params.add("emissions", {n, k}, nn::Init::Zero, rng);
    auto& tr = params.add("transitions", {k, k}, nn::Init::Zero, rng);
    auto& b = params.add("begin", {k}, nn::Init::Zero, rng);
    auto& en = params.add("end", {k}, nn::Init::Zero, rng);
    testing::randomize(params, rng);
    std::uniform_int_distribution<int> tag(0, static_cast<int>(k) - 1);
    std::vector<int> gold(n);
    for (int& y : gold) y = tag(rng);
    out.add(testing::check_gradients(
        params, [&](nn::Graph& g) { return crf::nll(g.param(e), g.param(tr), g.param(b), g.param(en), gold); }, rng));
  }
  return out;
}

Report gradient_suite() {
  Report r;
  const auto corpus = testing::toy_corpus();
  std::mt19937_64 rng(77);
  const std::vector<std::pair<std::string, std::function<GradOutcome()>>> suites = {
      {"tokenizer loss", [&] { return tokenizer_gradients(corpus, rng); }},
      {"tagger loss", [&] { return tagger_gradients(corpus, rng); }},
      {"parser loss (arc + label + linearization + distance)", [&] { return parser_gradients(corpus, rng); }},
      {"lemmatizer loss (edit classifier + seq2seq)", [&] { return lemmatizer_gradients(corpus, rng); }},
      {"MWT seq2seq loss", [&] { return mwt_gradients(corpus, rng); }},
      {"NER loss (CRF over BiLSTM emissions)", [&] { return ner_gradients(rng); }},
      {"CRF NLL", [&] { return crf_gradients(rng); }},
  };
  for (const auto& [name, run] : suites) {
    const auto t0 = Clock::now();
    const GradOutcome o = run();
    r.check(o.worst < kGradTolerance, name + ": " + std::to_string(kGradInstances) + " instances, " +
                                          std::to_string(o.entries) + " entries, max rel err " + sci(o.worst) +
                                          " (" + fmt(seconds_since(t0)) + " s)");
    if (o.worst >= kGradTolerance) r.note("worst entry: " + o.where);
  }
  return r;
}

// ---------------------------------------------------------------- overfitting

constexpr double kOverfitBudget = 300.0;

std::vector<Document> strip(std::vector<Document> docs, const std::function<void(Word&)>& clear) {
  for (auto& d : docs)
    for (auto& s : d.sentences)
      for (auto& w : s.words) clear(w);
  return docs;
}

Report overfitting() {
  Report r;
  const auto corpus = testing::toy_corpus();
  std::size_t sentences = 0;
  for (const auto& d : corpus) sentences += d.sentences.size();
  r.note("treebank: toy_fr.conllu, " + std::to_string(sentences) + " sentences");

  {
    const auto t0 = Clock::now();
    tokenize::Config c;
    c.epochs = 20;
    c.dropout = 0.1;
    const auto tok = tokenize::Tokenizer::train(corpus, c);
    std::vector<Document> system;
    for (const auto& d : corpus) system.push_back(tok.tokenize(d.text));
    const auto report = eval::align_and_score(system, corpus);
    const double f1 = report.at("Tokens").f1, secs = seconds_since(t0);
    r.check(f1 == 100.0 && secs < kOverfitBudget,
            "tokenizer: training token F1 " + fmt(f1) + " (sentences " + fmt(report.at("Sentences").f1) + ", " +
                fmt(secs) + " s)");
  }
  {
    const auto t0 = Clock::now();
    pos::Config c;
    c.epochs = 20;
    c.dropout = 0.1;
    const auto tagger = pos::Tagger::train(corpus, c);
    auto system = strip(corpus, [](Word& w) {
      w.upos.reset();
      w.xpos.reset();
      w.feats.reset();
    });
    for (auto& d : system) tagger.apply(d);
    const auto report = eval::align_and_score(system, corpus);
    const double upos = report.at("UPOS").f1, secs = seconds_since(t0);
    r.check(upos >= 99.0 && secs < kOverfitBudget,
            "tagger: training UPOS " + fmt(upos) + " >= 99 (XPOS " + fmt(report.at("XPOS").f1) + ", UFeats " +
                fmt(report.at("UFeats").f1) + ", " + fmt(secs) + " s)");
  }
  {
    const auto t0 = Clock::now();
    depparse::Config c;
    c.epochs = 15;
    const auto parser = depparse::Parser::train(corpus, c);
    auto system = strip(corpus, [](Word& w) {
      w.head.reset();
      w.deprel.reset();
    });
    for (auto& d : system) parser.apply(d);
    const auto report = eval::align_and_score(system, corpus);
    const double uas = report.at("UAS").f1, secs = seconds_since(t0);
    r.check(uas >= 95.0 && secs < kOverfitBudget,
            "parser: training UAS " + fmt(uas) + " >= 95 (LAS " + fmt(report.at("LAS").f1) + ", " + fmt(secs) +
                " s)");
  }
  {
    const auto t0 = Clock::now();
    const auto data = bio::read_file(testing::data_path("toy_ner.bio"));
    ner::Config c;
    c.epochs = 20;
    c.dropout = 0.1;
    const auto tagger = ner::NerTagger::train(data, c);
    std::vector<bio::TaggedSentence> system;
    for (const auto& s : data) system.push_back({s.words, tagger.predict_tags(s.words)});
    const auto score = eval::score_ner(system, data);
    const double secs = seconds_since(t0);
    r.check(data.size() == 30 && score.f1 == 100.0 && secs < kOverfitBudget,
            "NER: training entity F1 " + fmt(score.f1) + " on " + std::to_string(data.size()) + " sentences (" +
                std::to_string(score.correct) + "/" + std::to_string(score.gold) + " entities, " + fmt(secs) +
                " s)");
  }
  {
    const auto t0 = Clock::now();
    lemma::Config c;
    c.model.embed_dim = 8;
    c.model.hidden = 8;
    c.epochs = 1;
    const auto lemmatizer = lemma::Lemmatizer::train(corpus, c);
    std::size_t pairs = 0, correct = 0, via_dictionary = 0;
    for (const auto& d : corpus)
      for (const auto& s : d.sentences)
        for (const auto& w : s.words) {
          if (!w.lemma) continue;
          ++pairs;
          lemma::Route route;
          if (lemmatizer.lemmatize(w.form, w.upos, &route) == *w.lemma) ++correct;
          if (route == lemma::Route::Dictionary) ++via_dictionary;
        }
    const double secs = seconds_since(t0);
    r.check(pairs > 0 && correct == pairs && via_dictionary == pairs && secs < kOverfitBudget,
            "lemma dictionary: " + std::to_string(correct) + "/" + std::to_string(pairs) +
                " training pairs correct, " + std::to_string(via_dictionary) + " via dictionary (" + fmt(secs) +
                " s)");
  }
  return r;
}

// ---------------------------------------------------------------- formats

Report format_round_trips() {
  Report r;
  for (const char* name : {"fr_mwt.conllu", "three_sentences.conllu", "toy_fr.conllu"}) {
    const std::string raw = slurp(testing::data_path(name));
    const auto docs = conllu::parse(raw);
    bool valid = true;
    for (const auto& d : docs) valid = valid && validate(d).empty();
    r.check(conllu::serialize(docs) == raw, std::string(name) + ": serialize(parse(x)) == x byte for byte");
    r.check(conllu::parse(conllu::serialize(docs)) == docs && valid,
            std::string(name) + ": parse(serialize(doc)) == doc, documents valid");
  }
  {
    const auto docs = conllu::read_file(testing::data_path("fr_mwt.conllu"));
    const Sentence& s = docs.at(0).sentences.at(0);
    const Token& des = s.tokens.at(2);
    const auto words = s.words_of(des);
    r.check(des.surface == "des" && des.is_mwt() && words.size() == 2 && words[0]->form == "de" &&
                words[1]->form == "les",
            "fr_mwt.conllu: token \"des\" (range " + std::to_string(des.first_word) + "-" +
                std::to_string(des.last_word) + ") expands to words \"de\", \"les\"");
  }
  for (const char* name : {"conll03_sample.bio", "toy_ner.bio"}) {
    const std::string raw = slurp(testing::data_path(name));
    const auto sentences = bio::parse(raw);
    r.check(!sentences.empty() && bio::serialize(sentences) == raw && bio::parse(bio::serialize(sentences)) == sentences,
            std::string(name) + ": identity round trip (" + std::to_string(sentences.size()) + " sentences)");
  }
  return r;
}

// ---------------------------------------------------------------- evaluator

Document one_doc(const std::string& conllu_text) { return conllu::parse(conllu_text).at(0); }

std::string row(int id, const std::string& form, int head, const std::string& deprel = "dep",
                const std::string& misc = "_") {
  return std::to_string(id) + "\t" + form + "\t" + form + "\tX\t_\t_\t" + std::to_string(head) + "\t" + deprel +
         "\t_\t" + misc + "\n";
}

bool prf(const eval::Score& s, double p, double r, double f) {
  return eval::rounded(s.precision) == p && eval::rounded(s.recall) == r && eval::rounded(s.f1) == f;
}

std::string prf_text(const eval::Score& s) {
  return "P/R/F1 " + fmt(s.precision) + "/" + fmt(s.recall) + "/" + fmt(s.f1);
}

Report evaluator_fixtures() {
  Report r;
  {
    const auto corpus = testing::toy_corpus();
    const auto report = eval::align_and_score(corpus, corpus);
    bool all = report.count(eval::kEntities) && prf(report.at(eval::kEntities), 100, 100, 100);
    for (const auto& m : eval::kUdMetrics) all = all && report.count(m) && prf(report.at(m), 100, 100, 100);
    r.check(all, "identity (toy_fr.conllu vs itself): 100.00 on all 9 metrics and Entities");
  }
  {
    // Gold [ab][c], system [abc]: no token boundary agrees.
    const auto gold = one_doc("# text = abc\n" + row(1, "ab", 0, "root", "SpaceAfter=No") + row(2, "c", 1) + "\n");
    const auto sys = one_doc("# text = abc\n" + row(1, "abc", 0, "root") + "\n");
    const auto t = eval::align_and_score(sys, gold).at("Tokens");
    r.check(prf(t, 0, 0, 0), "merged tokens [abc] vs [ab][c]: Tokens " + prf_text(t) + " (expected 0/0/0)");
  }
  {
    // Gold [ab][c][d], system [a][b][c][d]: 2 of 4 system, 2 of 3 gold.
    const auto gold = one_doc("# text = ab c d\n" + row(1, "ab", 0, "root") + row(2, "c", 1) + row(3, "d", 1) + "\n");
    const auto sys = one_doc("# text = ab c d\n" + row(1, "a", 0, "root", "SpaceAfter=No") + row(2, "b", 1) +
                             row(3, "c", 1) + row(4, "d", 1) + "\n");
    const auto t = eval::align_and_score(sys, gold).at("Tokens");
    r.check(prf(t, 50.00, 66.67, 57.14), "split token [a][b] vs [ab]: Tokens " + prf_text(t) +
                                             " (expected 50.00/66.67/57.14)");
  }
  {
    // Unexpanded "des": only "chats" aligns, 1 of 2 system words, 1 of 3 gold.
    const std::string text = "# text = des chats\n";
    const auto gold = one_doc(text + "1-2\tdes\t_\t_\t_\t_\t_\t_\t_\t_\n" + row(1, "de", 3, "case") +
                              row(2, "les", 3, "det") + row(3, "chats", 0, "root") + "\n");
    const auto sys = one_doc(text + row(1, "des", 2, "det") + row(2, "chats", 0, "root") + "\n");
    const auto report = eval::align_and_score(sys, gold);
    r.check(prf(report.at("Words"), 50.00, 33.33, 40.00) && prf(report.at("Tokens"), 100, 100, 100),
            "unexpanded MWT: Words " + prf_text(report.at("Words")) + " (expected 50.00/33.33/40.00), Tokens " +
                prf_text(report.at("Tokens")));
  }
  {
    const std::string head = "# text = a b c d\n";
    const auto gold = one_doc(head + row(1, "a", 2) + row(2, "b", 0, "root") + row(3, "c", 2) + row(4, "d", 3) + "\n");
    const auto sys = one_doc(head + row(1, "a", 2) + row(2, "b", 0, "root") + row(3, "c", 2) + row(4, "d", 2) + "\n");
    const auto uas = eval::align_and_score(sys, gold).at("UAS");
    r.check(prf(uas, 75, 75, 75), "3 of 4 heads: UAS " + prf_text(uas) + " (expected 75.00)");
  }
  {
    auto entity = [](const char* type, std::size_t start, std::size_t end) { return Entity{type, start, end, "", 0, 0}; };
    const std::vector<Entity> gold{entity("PER", 0, 5), entity("LOC", 10, 15), entity("ORG", 20, 24)};
    const std::vector<Entity> sys{entity("PER", 0, 5), entity("LOC", 10, 15), entity("LOC", 30, 34)};
    const auto s = eval::score_ner(sys, gold);
    r.check(prf(s, 66.67, 66.67, 66.67), "2 of 3 entities + 1 spurious: " + prf_text(s) + " (expected 66.67)");
  }
  {
    const eval::MetricReport a{{"UAS", eval::Score::from_counts(4, 5, 5)}};
    const eval::MetricReport b{{"UAS", eval::Score::from_counts(3, 5, 5)}};
    const double m = eval::rounded(eval::macro_average({a, b}).at("UAS").f1);
    r.check(m == 70.00, "macro_average{80, 60} = " + fmt(m));
  }
  return r;
}

// ---------------------------------------------------------------- server

std::vector<std::string> fixture_texts() {
  std::vector<std::string> texts;
  const auto corpus = testing::toy_corpus();
  for (const auto& d : corpus) texts.push_back(d.text);
  for (const char* name : {"fr_mwt.conllu", "three_sentences.conllu"})
    for (const auto& d : conllu::read_file(testing::data_path(name))) texts.push_back(d.text);
  for (const auto& d : corpus)
    for (const auto& s : d.sentences) {
      if (texts.size() == 20) return texts;
      texts.push_back(utf8::substr(d.text, s.tokens.front().start_char, s.tokens.back().end_char));
    }
  return texts;
}

class RunningServer {
 public:
  RunningServer(server::Options options, server::Loader loader)
      : server_(std::move(options), std::move(loader)), port_(server_.bind()),
        thread_([this] { server_.serve(); }) {
    for (int i = 0; i < 1000 && !server_.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  ~RunningServer() {
    server_.shutdown();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(120);
    return c;
  }

 private:
  server::AnnotationServer server_;
  int port_;
  std::thread thread_;
};

Report server_equivalence() {
  Report r;
  pipeline::Registry registry(testing::scratch_dir("acceptance_registry"));
  registry.fetch("fr", testing::toy_model_dir().string());

  {
    pipeline::PipelineConfig config;
    config.language = "fr";
    const auto local = pipeline::Pipeline::build(config, registry);
    server::Options o;
    o.port = 0;
    RunningServer running(o, server::registry_loader(registry));
    auto client = running.client();
    const auto texts = fixture_texts();
    std::size_t equal = 0;
    for (const auto& text : texts) {
      auto res = client.Post("/annotate", json{{"text", text}, {"language", "fr"}}.dump(), "application/json");
      if (res && res->status == 200 && res->body == wire::canonical(wire::to_json(local.run(text)))) ++equal;
    }
    r.check(texts.size() == 20 && equal == texts.size(),
            "POST /annotate == in-process pipeline under canonical JSON: " + std::to_string(equal) + "/" +
                std::to_string(texts.size()) + " texts");
  }

  {
    std::mutex m;
    std::condition_variable cv;
    bool release = false;
    std::atomic<bool> finished{false};
    auto inner = server::registry_loader(registry);
    server::Options o;
    o.port = 0;
    o.preload = {server::PipelineKey::parse("fr")};
    RunningServer running(o, [&](const server::PipelineKey& key) {
      {
        std::unique_lock lock(m);
        cv.wait(lock, [&] { return release; });
      }
      auto p = inner(key);
      finished = true;
      return p;
    });
    auto client = running.client();
    std::size_t before = 0, before_503 = 0, premature_200 = 0, after_200 = 0, regressions = 0;
    const auto poll_until = Clock::now() + std::chrono::milliseconds(300);
    while (Clock::now() < poll_until) {
      auto h = client.Get("/health");
      ++before;
      if (h && h->status == 503) ++before_503;
    }
    {
      std::lock_guard lock(m);
      release = true;
    }
    cv.notify_all();
    bool seen_200 = false;
    const auto deadline = Clock::now() + std::chrono::seconds(30);
    std::size_t polls_after = 0;
    while (Clock::now() < deadline && polls_after < 50) {
      auto h = client.Get("/health");
      if (!h) continue;
      if (h->status == 200) {
        if (!finished) ++premature_200;
        seen_200 = true;
        ++after_200;
      } else if (seen_200) {
        ++regressions;
      }
      if (seen_200) ++polls_after;
    }
    r.check(before > 0 && before_503 == before,
            "/health while loading: " + std::to_string(before_503) + "/" + std::to_string(before) + " polls 503");
    r.check(seen_200 && premature_200 == 0 && regressions == 0,
            "/health after load: 200 first seen only after the loader returned (premature: " +
                std::to_string(premature_200) + "), then stays 200 (" + std::to_string(after_200) + " polls)");
  }
  return r;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Report()>>> criteria = {
      {"CRF oracles", crf_oracles},
      {"MST oracle", mst_oracle},
      {"Gradient suite", gradient_suite},
      {"Overfitting oracles", overfitting},
      {"Format round-trips", format_round_trips},
      {"Evaluator fixtures", evaluator_fixtures},
      {"Server equivalence", server_equivalence},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = Clock::now();
    Report report;
    try {
      report = run();
    } catch (const std::exception& e) {
      report.check(false, std::string("threw: ") + e.what());
    }
    if (!report.pass) ++failed;
    std::cout << (report.pass ? "PASS " : "FAIL ") << name << " (" << fmt(seconds_since(t0)) << " s)\n";
    for (const auto& line : report.lines) std::cout << "    " << line << "\n";
    std::cout.flush();
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " acceptance criteria passed\n";
  return failed == 0 ? 0 : 1;
}
