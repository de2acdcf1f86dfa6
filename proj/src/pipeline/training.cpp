#include "tessera/pipeline/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "tessera/doc/bio.hpp"
#include "tessera/doc/conllu.hpp"
#include "tessera/error.hpp"
#include "tessera/pipeline/pipeline.hpp"
#include "tessera/text/utf8.hpp"

namespace tessera::pipeline {

namespace {

// Input for a processor: the gold document with that processor's outputs
// (and those of later processors) removed.
Document strip_for(const std::string& processor, const Document& gold) {
  Document doc = gold;
  for (auto& s : doc.sentences) {
    if (processor == "mwt") {
      // Gold tokenization with MWT flags, one identity word per token.
      std::vector<bool> flagged;
      std::vector<std::vector<std::string>> identity;
      for (const auto& t : s.tokens) {
        flagged.push_back(t.is_mwt());
        identity.push_back({t.surface});
      }
      apply_expansions(s, identity);
      for (std::size_t i = 0; i < s.tokens.size(); ++i) s.tokens[i].expand = flagged[i];
    }
    for (auto& w : s.words) {
      if (processor == "pos") {
        w.upos.reset();
        w.xpos.reset();
        w.feats.reset();
      }
      if (processor == "lemma") w.lemma.reset();
      if (processor == "depparse") {
        w.head.reset();
        w.deprel.reset();
      }
    }
    if (processor == "ner") s.entities.clear();
  }
  return doc;
}

// Raw text of each document, as the tokenizer sees it.
std::vector<Document> tokenize_all(const tokenize::Tokenizer& t, const std::vector<Document>& docs) {
  std::vector<Document> out;
  for (const auto& d : docs) {
    Document doc = t.tokenize(d.text);
    doc.newdoc = d.newdoc;
    for (auto& s : doc.sentences)
      for (auto& tok : s.tokens) tok.expand = false;
    out.push_back(std::move(doc));
  }
  return out;
}

template <typename Model>
std::vector<Document> annotate_all(const Model& model, const std::string& processor, const std::vector<Document>& gold) {
  std::vector<Document> out;
  for (const auto& d : gold) {
    Document doc = strip_for(processor, d);
    model.apply(doc);
    out.push_back(std::move(doc));
  }
  return out;
}

std::size_t count_sentences(const std::vector<Document>& docs) {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.sentences.size();
  return n;
}

std::vector<bio::TaggedSentence> read_ner_file(const std::string& path) {
  if (is_bio_file(path)) return bio::read_file(path);
  return ner::tagged_sentences(conllu::read_file(path));
}

// Deterministic 80/20 split of tagged sentences.
std::pair<std::vector<bio::TaggedSentence>, std::vector<bio::TaggedSentence>> split_tagged(
    const std::vector<bio::TaggedSentence>& data) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(kDevSplitSeed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto dev_n = static_cast<std::size_t>(std::llround(kDevFraction * static_cast<double>(data.size())));
  const std::set<std::size_t> dev(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(dev_n));
  std::pair<std::vector<bio::TaggedSentence>, std::vector<bio::TaggedSentence>> out;
  for (std::size_t i = 0; i < data.size(); ++i) (dev.count(i) ? out.second : out.first).push_back(data[i]);
  return out;
}

TrainResult train_ner(const TrainRequest& r, const std::string& model_file, std::ostream* log) {
  const ner::Config cfg = ner::Config::from_json(r.config);
  auto train = read_ner_file(r.train_file);
  TrainResult result;
  result.model_file = model_file;
  std::optional<std::vector<bio::TaggedSentence>> held_out;
  if (!r.eval_file) {
    auto [tr, dev] = split_tagged(train);
    train = std::move(tr);
    held_out = std::move(dev);
  }
  const auto model = ner::NerTagger::train(train, cfg, log);
  model.save(model_file);
  result.train_sentences = train.size();

  const bool conllu_eval = r.eval_file && !is_bio_file(*r.eval_file);
  if (conllu_eval) {
    const auto input = conllu::read_file(*r.eval_file);
    const auto gold = conllu::read_file(r.gold_file.value_or(*r.eval_file));
    const auto system = annotate_all(model, "ner", input);
    if (r.output_file) conllu::write_file(*r.output_file, system);
    result.dev_sentences = count_sentences(input);
    result.report[eval::kEntities] = eval::align_and_score(system, gold).at(eval::kEntities);
    return result;
  }
  const auto input = held_out ? *held_out : bio::read_file(*r.eval_file);
  const auto gold = held_out ? *held_out : (r.gold_file ? read_ner_file(*r.gold_file) : input);
  std::vector<bio::TaggedSentence> system;
  for (const auto& s : input) system.push_back({s.words, bio::bioes_to_bio(model.predict_tags(s.words))});
  if (r.output_file) {
    std::ofstream out(*r.output_file);
    out << bio::serialize(system);
  }
  result.dev_sentences = input.size();
  result.report[eval::kEntities] = eval::score_ner(system, gold);
  return result;
}

}  // namespace

bool is_bio_file(const std::string& path) {
  for (const char* ext : {".bio", ".iob", ".bioes", ".txt"})
    if (path.ends_with(ext)) return true;
  return false;
}

Document extract_sentences(const Document& doc, const std::vector<std::size_t>& indices) {
  Document out;
  out.newdoc = doc.newdoc;
  std::size_t cursor = 0;
  for (std::size_t i : indices) {
    const Sentence& src = doc.sentences.at(i);
    if (!out.sentences.empty()) {
      out.text += " ";
      ++cursor;
    }
    const std::string text = doc.sentence_text(src);
    const std::size_t base = src.start_char();
    Sentence s = src;
    for (auto& t : s.tokens) {
      t.start_char = t.start_char - base + cursor;
      t.end_char = t.end_char - base + cursor;
    }
    for (auto& e : s.entities) {
      e.start_char = e.start_char - base + cursor;
      e.end_char = e.end_char - base + cursor;
    }
    out.text += text;
    cursor += utf8::length(text);
    out.sentences.push_back(std::move(s));
  }
  return out;
}

std::pair<std::vector<Document>, std::vector<Document>> split_dev(const std::vector<Document>& corpus,
                                                                   double fraction, std::uint64_t seed) {
  require(fraction >= 0.0 && fraction <= 1.0, "dev fraction must be in [0, 1]");
  std::vector<std::pair<std::size_t, std::size_t>> all;  // (document, sentence)
  for (std::size_t d = 0; d < corpus.size(); ++d)
    for (std::size_t s = 0; s < corpus[d].sentences.size(); ++s) all.emplace_back(d, s);
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto dev_n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(all.size())));
  std::set<std::size_t> dev(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(dev_n));

  std::pair<std::vector<Document>, std::vector<Document>> out;
  std::size_t flat = 0;
  for (const auto& doc : corpus) {
    std::vector<std::size_t> train_idx, dev_idx;
    for (std::size_t s = 0; s < doc.sentences.size(); ++s, ++flat) (dev.count(flat) ? dev_idx : train_idx).push_back(s);
    if (!train_idx.empty()) out.first.push_back(extract_sentences(doc, train_idx));
    if (!dev_idx.empty()) out.second.push_back(extract_sentences(doc, dev_idx));
  }
  return out;
}

TrainResult train_processor(const TrainRequest& r, std::ostream* log) {
  if (std::find(kProcessors.begin(), kProcessors.end(), r.processor) == kProcessors.end()) {
    throw Error("unknown processor '" + r.processor + "'; supported processors: " + join(kProcessors, ", "));
  }
  const std::string model_file = r.config.value("model_file", r.processor + ".model");
  if (r.processor == "ner") return train_ner(r, model_file, log);

  auto train = conllu::read_file(r.train_file);
  std::vector<Document> input, gold;
  if (r.eval_file) {
    input = conllu::read_file(*r.eval_file);
    gold = r.gold_file ? conllu::read_file(*r.gold_file) : input;
  } else {
    auto [tr, dev] = split_dev(train);
    train = std::move(tr);
    input = dev;
    gold = std::move(dev);
  }
  TrainResult result;
  result.model_file = model_file;
  result.train_sentences = count_sentences(train);
  result.dev_sentences = count_sentences(input);

  std::vector<Document> system;
  const auto& p = r.processor;
  if (p == "tokenize") {
    const auto m = tokenize::Tokenizer::train(train, tokenize::Config::from_json(r.config), log);
    m.save(model_file);
    system = tokenize_all(m, input);
  } else if (p == "mwt") {
    const auto m = mwt::Expander::train(train, mwt::TrainConfig::from_json(r.config), log);
    m.save(model_file);
    system = annotate_all(m, p, input);
  } else if (p == "pos") {
    const auto m = pos::Tagger::train(train, pos::Config::from_json(r.config), log);
    m.save(model_file);
    system = annotate_all(m, p, input);
  } else if (p == "lemma") {
    const auto m = lemma::Lemmatizer::train(train, lemma::Config::from_json(r.config), log);
    m.save(model_file);
    system = annotate_all(m, p, input);
  } else if (p == "depparse") {
    const auto m = depparse::Parser::train(train, depparse::Config::from_json(r.config), log);
    m.save(model_file);
    system = annotate_all(m, p, input);
  }
  if (r.output_file) conllu::write_file(*r.output_file, system);
  result.report = eval::align_and_score(system, gold);
  return result;
}

}  // namespace tessera::pipeline
