#include "tessera/mwt/expander.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include "tessera/error.hpp"
#include "tessera/nn/container.hpp"
#include "tessera/nn/optimizer.hpp"
#include "tessera/text/utf8.hpp"

namespace tessera::mwt {

namespace {

using Expansion = std::vector<std::string>;

// Occurrence counts per expansion in first-seen order.
using Counts = std::map<std::string, std::vector<std::pair<Expansion, std::size_t>>>;

void count(Counts& counts, const std::string& key, const Expansion& e) {
  auto& list = counts[key];
  for (auto& [seen, n] : list) {
    if (seen == e) {
      ++n;
      return;
    }
  }
  list.emplace_back(e, 1);
}

std::map<std::string, Expansion> most_frequent(const Counts& counts) {
  std::map<std::string, Expansion> out;
  for (const auto& [key, list] : counts) {
    const auto* best = &list.front();
    for (const auto& entry : list) {
      if (entry.second > best->second) best = &entry;
    }
    out[key] = best->first;
  }
  return out;
}

Expansion lowercased(const Expansion& e) {
  Expansion out;
  for (const auto& w : e) out.push_back(utf8::to_lower(w));
  return out;
}

seq2seq::Symbols target_symbols(const Expansion& words) {
  seq2seq::Symbols out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out.emplace_back(kSeparator);
    for (auto& c : seq2seq::chars(words[i])) out.push_back(std::move(c));
  }
  return out;
}

constexpr const char* kKind = "mwt";

}  // namespace

nlohmann::json Lexicon::to_json() const { return {{"exact", exact}, {"lower", lower}}; }

Lexicon Lexicon::from_json(const nlohmann::json& j) {
  Lexicon l;
  l.exact = j.at("exact").get<std::map<std::string, Expansion>>();
  l.lower = j.at("lower").get<std::map<std::string, Expansion>>();
  return l;
}

Lexicon build_lexicon(const std::vector<Document>& corpus) {
  // Forms that ever occur as MWTs, exact and lowercased.
  std::set<std::string> mwt_forms, mwt_lower;
  for (const auto& doc : corpus)
    for (const auto& s : doc.sentences)
      for (const auto& t : s.tokens)
        if (t.is_mwt()) {
          mwt_forms.insert(t.surface);
          mwt_lower.insert(utf8::to_lower(t.surface));
        }
  Counts exact, lower;
  for (const auto& doc : corpus) {
    for (const auto& s : doc.sentences) {
      for (const auto& t : s.tokens) {
        Expansion words;
        for (const Word* w : s.words_of(t)) words.push_back(w->form);
        if (mwt_forms.count(t.surface)) count(exact, t.surface, words);
        const std::string low = utf8::to_lower(t.surface);
        if (mwt_lower.count(low)) count(lower, low, lowercased(words));
      }
    }
  }
  return {most_frequent(exact), most_frequent(lower)};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (j.contains("model")) c.model = seq2seq::Config::from_json(j.at("model"));
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  return c;
}

Expander Expander::train(const std::vector<Document>& corpus, const TrainConfig& config,
                         std::ostream* log) {
  Expander e;
  e.lexicon_ = build_lexicon(corpus);

  std::vector<std::pair<seq2seq::Symbols, seq2seq::Symbols>> pairs;
  nn::Vocab source, target;
  for (const auto& doc : corpus) {
    for (const auto& s : doc.sentences) {
      for (const auto& t : s.tokens) {
        if (!t.is_mwt()) continue;
        Expansion words;
        for (const Word* w : s.words_of(t)) words.push_back(w->form);
        auto src = seq2seq::chars(t.surface);
        auto tgt = target_symbols(words);
        for (const auto& c : src) source.add(c);
        for (const auto& c : tgt) target.add(c);
        pairs.emplace_back(std::move(src), std::move(tgt));
      }
    }
  }
  if (config.epochs == 0 || pairs.empty()) return e;

  nn::Rng rng(config.seed);
  e.model_ = seq2seq::Model(e.params_, "mwt", source, target, config.model, rng);
  e.has_model_ = true;
  nn::Optimizer opt(e.params_, {.learning_rate = config.learning_rate});
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t i : order) {
      nn::Graph g(true, rng());
      const nn::Expr loss = e.model_.loss(g, pairs[i].first, pairs[i].second);
      total += loss.scalar();
      g.backward(loss);
      opt.step();
    }
    if (log) *log << "mwt epoch " << epoch + 1 << " loss " << total / static_cast<double>(pairs.size()) << "\n";
  }
  return e;
}

void Expander::save(const std::string& path) const {
  nlohmann::json meta = {{"lexicon", lexicon_.to_json()}, {"has_model", has_model_}};
  if (has_model_) meta["model"] = model_.meta();
  nn::save_model(path, kKind, meta, params_);
}

Expander Expander::load(const std::string& path) {
  nn::ModelFile file = nn::load_model(path, kKind);
  Expander e;
  e.lexicon_ = Lexicon::from_json(file.meta.at("lexicon"));
  e.has_model_ = file.meta.at("has_model").get<bool>();
  e.params_ = std::move(file.params);
  if (e.has_model_) e.model_ = seq2seq::Model::bind(e.params_, "mwt", file.meta.at("model"));
  return e;
}

std::vector<std::string> Expander::expand(const std::string& surface, Route* route) const {
  // A one-word expansion is the token itself, whatever its predicted casing.
  auto done = [route, &surface](Route r, Expansion words) {
    if (route) *route = r;
    if (words.size() == 1) words.front() = surface;
    return words;
  };
  if (const auto it = lexicon_.exact.find(surface); it != lexicon_.exact.end()) {
    return done(Route::Exact, it->second);
  }
  if (const auto it = lexicon_.lower.find(utf8::to_lower(surface)); it != lexicon_.lower.end()) {
    Expansion words = it->second;
    if (utf8::starts_upper(surface)) words.front() = utf8::capitalize(words.front());
    return done(Route::Lowercase, words);
  }
  if (has_model_ && !surface.empty()) {
    const std::size_t cap = std::max<std::size_t>(20, 3 * utf8::length(surface));
    if (const auto decoded = model_.decode(seq2seq::chars(surface), cap)) {
      Expansion words(1);
      for (const auto& sym : *decoded) {
        if (sym == kSeparator) {
          words.emplace_back();
        } else {
          words.back() += sym;
        }
      }
      const bool ok = std::none_of(words.begin(), words.end(), [](const std::string& w) { return w.empty(); });
      if (ok) return done(Route::Model, words);
    }
  }
  return done(Route::Fallback, {surface});
}

void Expander::apply(Document& doc) const {
  for (auto& s : doc.sentences) {
    std::vector<std::vector<std::string>> expansions;
    bool any = false;
    for (const auto& t : s.tokens) {
      if (t.expand) {
        expansions.push_back(expand(t.surface));
        any = true;
      } else {
        std::vector<std::string> words;
        for (const Word* w : s.words_of(t)) words.push_back(w->form);
        if (words.empty()) words.push_back(t.surface);
        expansions.push_back(std::move(words));
      }
    }
    if (any) apply_expansions(s, expansions);
    for (auto& t : s.tokens) t.expand = false;
  }
}

}  // namespace tessera::mwt
