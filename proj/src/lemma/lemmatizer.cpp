#include "tessera/lemma/lemmatizer.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <set>
#include <tuple>

#include "tessera/error.hpp"
#include "tessera/nn/container.hpp"
#include "tessera/nn/optimizer.hpp"
#include "tessera/text/utf8.hpp"

namespace tessera::lemma {

namespace {

constexpr const char* kKind = "lemmatizer";
constexpr std::size_t kEdits = 3;

template <typename Key>
void choose_most_frequent(const std::map<Key, std::vector<std::pair<std::string, std::size_t>>>& counts,
                          std::map<Key, std::string>& out) {
  for (const auto& [key, list] : counts) {
    const auto* best = &list.front();
    for (const auto& e : list)
      if (e.second > best->second) best = &e;
    out[key] = best->first;
  }
}

template <typename Key>
void bump(std::map<Key, std::vector<std::pair<std::string, std::size_t>>>& counts, const Key& key,
          const std::string& lemma) {
  auto& list = counts[key];
  for (auto& [l, n] : list) {
    if (l == lemma) {
      ++n;
      return;
    }
  }
  list.emplace_back(lemma, 1);
}

std::string upos_token(const std::optional<std::string>& upos) { return "<" + upos.value_or("_") + ">"; }

}  // namespace

Edit edit_class(const std::string& form, const std::string& lemma) {
  if (lemma == form) return Edit::Identity;
  if (lemma == utf8::to_lower(form)) return Edit::Lowercase;
  return Edit::Seq2Seq;
}

std::optional<std::string> Dictionary::lookup(const std::string& form,
                                              const std::optional<std::string>& upos) const {
  if (upos) {
    if (const auto it = by_form_upos.find({form, *upos}); it != by_form_upos.end()) return it->second;
  }
  if (const auto it = by_form.find(form); it != by_form.end()) return it->second;
  return std::nullopt;
}

nlohmann::json Dictionary::to_json() const {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [key, lemma] : by_form_upos) pairs.push_back({key.first, key.second, lemma});
  return {{"by_form_upos", pairs}, {"by_form", by_form}};
}

Dictionary Dictionary::from_json(const nlohmann::json& j) {
  Dictionary d;
  for (const auto& e : j.at("by_form_upos")) {
    d.by_form_upos[{e.at(0).get<std::string>(), e.at(1).get<std::string>()}] = e.at(2).get<std::string>();
  }
  d.by_form = j.at("by_form").get<std::map<std::string, std::string>>();
  return d;
}

Dictionary build_dictionary(const std::vector<Document>& corpus) {
  std::map<std::pair<std::string, std::string>, std::vector<std::pair<std::string, std::size_t>>> pair_counts;
  std::map<std::string, std::vector<std::pair<std::string, std::size_t>>> form_counts;
  for (const auto& doc : corpus)
    for (const auto& s : doc.sentences)
      for (const auto& w : s.words) {
        if (!w.lemma) continue;
        if (w.upos) bump(pair_counts, std::make_pair(w.form, *w.upos), *w.lemma);
        bump(form_counts, w.form, *w.lemma);
      }
  Dictionary d;
  choose_most_frequent(pair_counts, d.by_form_upos);
  choose_most_frequent(form_counts, d.by_form);
  return d;
}

Config Config::from_json(const nlohmann::json& j) {
  Config c;
  if (j.contains("model")) c.model = seq2seq::Config::from_json(j.at("model"));
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  return c;
}

nlohmann::json Config::to_json() const {
  return {{"model", model.to_json()}, {"epochs", epochs}, {"learning_rate", learning_rate}, {"seed", seed}};
}

seq2seq::Symbols Lemmatizer::source_symbols(const std::string& form, const std::optional<std::string>& upos) {
  seq2seq::Symbols out{upos_token(upos)};
  for (auto& c : seq2seq::chars(form)) out.push_back(std::move(c));
  return out;
}

Lemmatizer::Lemmatizer(const std::vector<Document>& corpus, const Config& config) : config_(config) {
  dict_ = build_dictionary(corpus);
  nn::Vocab source, target;
  for (const auto& doc : corpus)
    for (const auto& s : doc.sentences)
      for (const auto& w : s.words) {
        for (const auto& sym : source_symbols(w.form, w.upos)) source.add(sym);
        if (w.lemma)
          for (const auto& sym : seq2seq::chars(*w.lemma)) target.add(sym);
      }
  nn::Rng rng(config_.seed);
  model_ = seq2seq::Model(params_, "lemma", source, target, config_.model, rng);
  classifier_ = nn::Linear(params_, "edit", model_.summary_size(), kEdits, rng);
}

void Lemmatizer::bind(const nlohmann::json& model_meta) {
  model_ = seq2seq::Model::bind(params_, "lemma", model_meta);
  classifier_ = nn::Linear::bind(params_, "edit");
}

std::vector<Example> Lemmatizer::examples(const std::vector<Document>& corpus) const {
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::vector<Example> out;
  for (const auto& doc : corpus)
    for (const auto& s : doc.sentences)
      for (const auto& w : s.words) {
        if (!w.lemma || w.form.empty() || w.lemma->empty()) continue;
        if (!seen.insert({w.form, w.upos.value_or("_"), *w.lemma}).second) continue;
        out.push_back({source_symbols(w.form, w.upos), seq2seq::chars(*w.lemma), edit_class(w.form, *w.lemma)});
      }
  return out;
}

nn::Expr Lemmatizer::loss(nn::Graph& g, const Example& ex) const {
  const auto enc = model_.encode(g, ex.source);
  const nn::Expr edit = nn::softmax_cross_entropy(classifier_(g, enc.summary), static_cast<std::size_t>(ex.edit));
  return nn::add(edit, model_.loss(g, enc, ex.target));
}

Edit Lemmatizer::classify(const std::string& form, const std::optional<std::string>& upos) const {
  nn::Graph g;
  const auto enc = model_.encode(g, source_symbols(form, upos));
  const auto logits = classifier_(g, enc.summary).value();
  return static_cast<Edit>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

std::string Lemmatizer::lemmatize(const std::string& form, const std::optional<std::string>& upos,
                                  Route* route) const {
  auto done = [route](Route r, std::string lemma) {
    if (route) *route = r;
    return lemma;
  };
  if (form.empty()) return done(Route::Fallback, form);
  if (auto hit = dict_.lookup(form, upos)) return done(Route::Dictionary, *hit);
  switch (classify(form, upos)) {
    case Edit::Identity:
      return done(Route::Identity, form);
    case Edit::Lowercase:
      return done(Route::Lowercase, utf8::to_lower(form));
    case Edit::Seq2Seq:
      break;
  }
  const std::size_t cap = std::max<std::size_t>(20, 2 * utf8::length(form));
  const auto decoded = model_.decode(source_symbols(form, upos), cap);
  if (!decoded || decoded->empty()) return done(Route::Fallback, form);
  return done(Route::Seq2Seq, seq2seq::join(*decoded));
}

void Lemmatizer::apply(Document& doc) const {
  for (auto& s : doc.sentences)
    for (auto& w : s.words) w.lemma = lemmatize(w.form, w.upos);
}

Lemmatizer Lemmatizer::train(const std::vector<Document>& corpus, const Config& config, std::ostream* log) {
  Lemmatizer model(corpus, config);
  const auto data = model.examples(corpus);
  if (data.empty()) throw Error("lemmatizer training needs words with gold lemmas");
  nn::Rng rng(config.seed);
  nn::Optimizer opt(model.params_, {.learning_rate = config.learning_rate});
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t i : order) {
      nn::Graph g(true, rng());
      const nn::Expr loss = model.loss(g, data[i]);
      total += loss.scalar();
      g.backward(loss);
      opt.step();
    }
    if (log) *log << "lemmatizer epoch " << epoch + 1 << " loss " << total / static_cast<double>(data.size()) << "\n";
  }
  return model;
}

void Lemmatizer::save(const std::string& path) const {
  nn::save_model(path, kKind,
                 {{"config", config_.to_json()}, {"dictionary", dict_.to_json()}, {"model", model_.meta()}},
                 params_);
}

Lemmatizer Lemmatizer::load(const std::string& path) {
  nn::ModelFile file = nn::load_model(path, kKind);
  Lemmatizer l;
  l.config_ = Config::from_json(file.meta.at("config"));
  l.dict_ = Dictionary::from_json(file.meta.at("dictionary"));
  l.params_ = std::move(file.params);
  l.bind(file.meta.at("model"));
  return l;
}

}  // namespace tessera::lemma
