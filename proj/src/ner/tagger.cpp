#include "tessera/ner/tagger.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "tessera/error.hpp"
#include "tessera/ner/crf.hpp"
#include "tessera/nn/container.hpp"
#include "tessera/nn/optimizer.hpp"
#include "tessera/text/utf8.hpp"

namespace tessera::ner {

using nn::Expr;
using nn::Graph;

namespace {

constexpr const char* kKind = "ner";
constexpr const char* kForwardPrefix = "charlm_forward.";
constexpr const char* kBackwardPrefix = "charlm_backward.";

std::vector<std::string> surfaces(const Sentence& s) {
  std::vector<std::string> out;
  for (const auto& t : s.tokens) out.push_back(t.surface);
  return out;
}

}  // namespace

nlohmann::json Config::to_json() const {
  return {{"word_dim", word_dim}, {"hidden", hidden},   {"dropout", dropout},
          {"epochs", epochs},     {"learning_rate", learning_rate}, {"seed", seed},
          {"charlm", charlm.to_json()}};
}

Config Config::from_json(const nlohmann::json& j) {
  Config c;
  c.word_dim = j.value("word_dim", c.word_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.dropout = j.value("dropout", c.dropout);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  if (j.contains("charlm")) c.charlm = CharLmConfig::from_json(j.at("charlm"));
  return c;
}

std::vector<bio::TaggedSentence> tagged_sentences(const std::vector<Document>& corpus) {
  std::vector<bio::TaggedSentence> out;
  for (const auto& doc : corpus)
    for (const auto& s : doc.sentences) {
      if (s.tokens.empty()) continue;
      out.push_back({surfaces(s), bio::entity_tags(s)});
    }
  return out;
}

std::u32string charlm_text(const std::vector<bio::TaggedSentence>& data) {
  std::u32string text;
  for (const auto& s : data) text += sentence_chars(s.words).first;
  return text;
}

NerTagger::NerTagger(const std::vector<bio::TaggedSentence>& data, CharLM forward, CharLM backward,
                     const Config& config)
    : config_(config), forward_(std::move(forward)), backward_(std::move(backward)) {
  require(forward_.direction() == Direction::Forward && backward_.direction() == Direction::Backward,
          "NER needs a forward and a backward language model");
  init(data);
}

void NerTagger::init(const std::vector<bio::TaggedSentence>& data) {
  tags_.add("O");
  for (const auto& s : data) {
    for (const auto& w : s.words) words_.add(utf8::to_lower(w));
    for (const auto& t : bio::repair(s.tags)) tags_.add(t);
  }
  nn::Rng rng(config_.seed);
  const std::size_t in = forward_.hidden_size() + backward_.hidden_size() + config_.word_dim;
  params_.add("word_embed", {words_.size(), config_.word_dim}, nn::Init::Uniform, rng);
  nn::BiLstm(params_, "enc", in, config_.hidden, 1, rng);
  nn::Linear(params_, "out", 2 * config_.hidden, tags_.size(), rng);
  params_.add("crf.transitions", {tags_.size(), tags_.size()}, nn::Init::Zero, rng);
  params_.add("crf.begin", {tags_.size()}, nn::Init::Zero, rng);
  params_.add("crf.end", {tags_.size()}, nn::Init::Zero, rng);
  bind();
}

void NerTagger::bind() {
  word_embed_ = &params_.get("word_embed");
  encoder_ = nn::BiLstm::bind(params_, "enc", 1);
  output_ = nn::Linear::bind(params_, "out");
  transitions_ = &params_.get("crf.transitions");
  begin_ = &params_.get("crf.begin");
  end_ = &params_.get("crf.end");
}

std::vector<std::vector<double>> NerTagger::context(const std::vector<std::string>& words) const {
  const auto [chars, spans] = sentence_chars(words);
  return contextual_embed(forward_, backward_, chars, spans);
}

std::vector<Expr> NerTagger::inputs(Graph& g, const std::vector<std::string>& words,
                                    const std::vector<std::vector<double>>* context) const {
  require(!words.empty(), "cannot tag an empty sentence");
  const auto computed = context ? std::vector<std::vector<double>>{} : this->context(words);
  const auto& ctx = context ? *context : computed;
  require(ctx.size() == words.size(), "context does not match the sentence");
  std::bernoulli_distribution drop(config_.dropout);
  const bool word_dropout = g.training() && config_.dropout > 0;
  std::vector<Expr> out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::size_t w = words_.index(utf8::to_lower(words[i]));
    if (word_dropout && drop(g.rng())) w = 0;
    out.push_back(nn::dropout(nn::concat({g.input(ctx[i]), g.row(*word_embed_, w)}), config_.dropout));
  }
  return out;
}

Expr NerTagger::emissions(Graph& g, const std::vector<std::string>& words,
                          const std::vector<std::vector<double>>* context) const {
  std::vector<Expr> rows;
  for (const Expr& h : encoder_.encode(g, inputs(g, words, context), config_.dropout)) {
    rows.push_back(output_(g, nn::dropout(h, config_.dropout)));
  }
  return nn::stack(rows);
}

Expr NerTagger::loss(Graph& g, const std::vector<std::string>& words, const std::vector<std::string>& tags,
                     const std::vector<std::vector<double>>* context) const {
  require(tags.size() == words.size(), "one tag per word");
  std::vector<int> gold;
  for (const auto& t : bio::repair(tags)) {
    const auto i = tags_.find(t);
    gold.push_back(i ? static_cast<int>(*i) : 0);
  }
  return crf::nll(emissions(g, words, context), g.param(*transitions_), g.param(*begin_), g.param(*end_), gold);
}

std::vector<std::string> NerTagger::predict_tags(const std::vector<std::string>& words) const {
  if (words.empty()) return {};
  Graph g;
  const Expr e = emissions(g, words);
  const std::size_t k = tags_.size();
  crf::Lattice lattice(words.size(), k);
  std::copy(e.value().begin(), e.value().end(), lattice.emissions.begin());
  const auto tv = transitions_->value.data();
  std::copy(tv.begin(), tv.end(), lattice.transitions.begin());
  const auto bv = begin_->value.data();
  std::copy(bv.begin(), bv.end(), lattice.begin.begin());
  const auto ev = end_->value.data();
  std::copy(ev.begin(), ev.end(), lattice.end.begin());
  std::vector<std::string> tags;
  for (int t : crf::viterbi(lattice).tags) tags.push_back(tags_.at(static_cast<std::size_t>(t)));
  return bio::repair(tags);
}

std::vector<Entity> NerTagger::predict_entities(const Sentence& sentence, std::u32string_view text) const {
  if (sentence.tokens.empty()) return {};
  return bio::to_entities(bio::token_units(sentence), predict_tags(surfaces(sentence)), text);
}

void NerTagger::apply(Document& doc) const {
  const std::u32string text = utf8::decode(doc.text);
  for (auto& s : doc.sentences) s.entities = predict_entities(s, text);
}

NerTagger NerTagger::train(const std::vector<bio::TaggedSentence>& data, const Config& config, std::ostream* log) {
  const std::u32string text = charlm_text(data);
  CharLM forward = CharLM::train(text, Direction::Forward, config.charlm, log);
  CharLM backward = CharLM::train(text, Direction::Backward, config.charlm, log);
  return train(data, std::move(forward), std::move(backward), config, log);
}

NerTagger NerTagger::train(const std::vector<bio::TaggedSentence>& data, CharLM forward, CharLM backward,
                           const Config& config, std::ostream* log) {
  std::vector<bio::TaggedSentence> usable;
  for (const auto& s : data)
    if (!s.words.empty()) usable.push_back(s);
  if (usable.empty()) throw Error("NER training needs at least one tagged sentence");
  NerTagger model(usable, std::move(forward), std::move(backward), config);
  // Language models are frozen, so their features are computed once.
  std::vector<std::vector<std::vector<double>>> contexts;
  for (const auto& s : usable) contexts.push_back(model.context(s.words));
  nn::Rng rng(config.seed);
  nn::Optimizer opt(model.params_, {.learning_rate = config.learning_rate});
  std::vector<std::size_t> order(usable.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t i : order) {
      Graph g(true, rng());
      const Expr loss = model.loss(g, usable[i].words, usable[i].tags, &contexts[i]);
      total += loss.scalar();
      g.backward(loss);
      opt.step();
    }
    if (log) *log << "ner epoch " << epoch + 1 << " loss " << total / static_cast<double>(usable.size()) << "\n";
  }
  return model;
}

void NerTagger::save(const std::string& path) const {
  nn::ParameterSet all;
  nn::Rng unused(0);
  for (const nn::Parameter* p : params_.all()) {
    all.add(p->name, p->value.shape(), nn::Init::Zero, unused).value = p->value;
  }
  forward_.export_params(all, kForwardPrefix);
  backward_.export_params(all, kBackwardPrefix);
  nn::save_model(path, kKind,
                 {{"config", config_.to_json()},
                  {"words", words_.to_json()},
                  {"tags", tags_.to_json()},
                  {"charlm_forward", {{"meta", forward_.meta()}, {"sha256", forward_.content_hash()}}},
                  {"charlm_backward", {{"meta", backward_.meta()}, {"sha256", backward_.content_hash()}}}},
                 all);
}

NerTagger NerTagger::load(const std::string& path) {
  nn::ModelFile file = nn::load_model(path, kKind);
  const auto& m = file.meta;
  NerTagger t;
  t.config_ = Config::from_json(m.at("config"));
  t.words_ = nn::Vocab::from_json(m.at("words"));
  t.tags_ = nn::Vocab::from_json(m.at("tags"));
  t.forward_ = CharLM::from_parts(m.at("charlm_forward").at("meta"), file.params, kForwardPrefix);
  t.backward_ = CharLM::from_parts(m.at("charlm_backward").at("meta"), file.params, kBackwardPrefix);
  if (t.forward_.content_hash() != m.at("charlm_forward").at("sha256").get<std::string>() ||
      t.backward_.content_hash() != m.at("charlm_backward").at("sha256").get<std::string>()) {
    throw Error(path + ": embedded language model does not match its recorded hash");
  }
  nn::Rng unused(0);
  for (const nn::Parameter* p : file.params.all()) {
    if (p->name.starts_with(kForwardPrefix) || p->name.starts_with(kBackwardPrefix)) continue;
    t.params_.add(p->name, p->value.shape(), nn::Init::Zero, unused).value = p->value;
  }
  t.bind();
  return t;
}

}  // namespace tessera::ner
