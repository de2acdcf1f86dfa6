#include "tessera/pos/tagger.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "tessera/error.hpp"
#include "tessera/nn/container.hpp"
#include "tessera/nn/optimizer.hpp"
#include "tessera/text/utf8.hpp"

namespace tessera::pos {

using nn::Expr;
using nn::Graph;

namespace {

constexpr const char* kKind = "tagger";

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<std::string> word_forms(const Sentence& s) {
  std::vector<std::string> out;
  for (const auto& w : s.words) out.push_back(w.form);
  return out;
}

}  // namespace

nlohmann::json Config::to_json() const {
  return {{"word_dim", word_dim}, {"char_dim", char_dim}, {"char_hidden", char_hidden},
          {"hidden", hidden},     {"layers", layers},     {"upos_dim", upos_dim},
          {"dropout", dropout},   {"epochs", epochs},     {"learning_rate", learning_rate},
          {"seed", seed}};
}

Config Config::from_json(const nlohmann::json& j) {
  Config c;
  c.word_dim = j.value("word_dim", c.word_dim);
  c.char_dim = j.value("char_dim", c.char_dim);
  c.char_hidden = j.value("char_hidden", c.char_hidden);
  c.hidden = j.value("hidden", c.hidden);
  c.layers = j.value("layers", c.layers);
  c.upos_dim = j.value("upos_dim", c.upos_dim);
  c.dropout = j.value("dropout", c.dropout);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  return c;
}

Tagger::Tagger(const std::vector<Document>& corpus, const Config& config) : config_(config) {
  std::map<std::string, std::vector<std::string>> values;
  for (const auto& doc : corpus) {
    for (const auto& s : doc.sentences) {
      for (const auto& w : s.words) {
        words_.add(utf8::to_lower(w.form));
        for (const auto& c : utf8::decode(w.form)) chars_.add(utf8::encode(c));
        if (w.upos) upos_.add(*w.upos);
        if (w.xpos) xpos_.add(*w.xpos);
        if (w.feats) {
          for (const auto& [attr, vals] : w.feats->attrs()) {
            has_feats_ = true;
            auto& list = values[attr];
            const std::string v = *w.feats->get(attr);
            if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
          }
        }
      }
    }
  }
  require(upos_.size() > 0, "tagger training data has no UPOS annotation");
  for (const auto& [attr, list] : values) {
    nn::Vocab v(false);
    v.add(kNone);
    for (const auto& val : list) v.add(val);
    feats_.emplace(attr, std::move(v));
  }

  nn::Rng rng(config_.seed);
  const std::size_t h2 = 2 * config_.hidden;
  params_.add("word_embed", {words_.size(), config_.word_dim}, nn::Init::Uniform, rng);
  params_.add("char_embed", {chars_.size(), config_.char_dim}, nn::Init::Uniform, rng);
  params_.add("upos_embed", {upos_.size(), config_.upos_dim}, nn::Init::Uniform, rng);
  nn::BiLstm(params_, "char_enc", config_.char_dim, config_.char_hidden, 1, rng);
  nn::BiLstm(params_, "enc", config_.word_dim + 2 * config_.char_hidden, config_.hidden, config_.layers, rng);
  nn::Linear(params_, "upos", h2, upos_.size(), rng);
  if (xpos_.size() > 0) nn::Biaffine(params_, "xpos", h2, config_.upos_dim, xpos_.size(), rng);
  for (const auto& [attr, v] : feats_) nn::Biaffine(params_, "feat." + attr, h2, config_.upos_dim, v.size(), rng);
  bind();
}

void Tagger::bind() {
  word_embed_ = &params_.get("word_embed");
  char_embed_ = &params_.get("char_embed");
  upos_embed_ = &params_.get("upos_embed");
  char_encoder_ = nn::BiLstm::bind(params_, "char_enc", 1);
  encoder_ = nn::BiLstm::bind(params_, "enc", config_.layers);
  upos_head_ = nn::Linear::bind(params_, "upos");
  if (xpos_.size() > 0) xpos_head_ = nn::Biaffine::bind(params_, "xpos");
  feat_heads_.clear();
  for (const auto& [attr, v] : feats_) feat_heads_.push_back(nn::Biaffine::bind(params_, "feat." + attr));
}

std::vector<nn::Biaffine> Tagger::conditioned_heads() const {
  std::vector<nn::Biaffine> out;
  if (xpos_.size() > 0) out.push_back(xpos_head_);
  out.insert(out.end(), feat_heads_.begin(), feat_heads_.end());
  return out;
}

std::vector<Expr> Tagger::encode(Graph& g, const std::vector<std::string>& forms) const {
  require(!forms.empty(), "cannot tag an empty sentence");
  std::bernoulli_distribution drop_word(config_.dropout);
  const std::size_t ch = config_.char_hidden;
  std::vector<Expr> xs;
  for (const auto& form : forms) {
    std::size_t index = words_.index(utf8::to_lower(form));
    if (g.training() && config_.dropout > 0 && drop_word(g.rng())) index = 0;
    std::vector<Expr> cs;
    for (char32_t c : utf8::decode(form)) cs.push_back(g.row(*char_embed_, chars_.index(utf8::encode(c))));
    if (cs.empty()) cs.push_back(g.zeros(config_.char_dim));
    const auto states = char_encoder_.encode(g, cs);
    const Expr char_rep = nn::concat({nn::slice(states.back(), 0, ch), nn::slice(states.front(), ch, ch)});
    xs.push_back(nn::dropout(nn::concat({g.row(*word_embed_, index), char_rep}), config_.dropout));
  }
  std::vector<Expr> hs = encoder_.encode(g, xs, config_.dropout);
  for (auto& h : hs) h = nn::dropout(h, config_.dropout);
  return hs;
}

Tagger::Logits Tagger::logits(Graph& g, const std::vector<std::string>& forms,
                              const std::optional<std::vector<std::size_t>>& condition) const {
  const auto hs = encode(g, forms);
  Logits out;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    out.upos.push_back(upos_head_(g, hs[i]));
    const std::size_t cond = condition ? (*condition)[i] : argmax(out.upos.back().value());
    const Expr u = g.row(*upos_embed_, cond);
    if (xpos_.size() > 0) out.xpos.push_back(xpos_head_(g, hs[i], u));
    std::vector<Expr> fs;
    for (const auto& head : feat_heads_) fs.push_back(head(g, hs[i], u));
    out.feats.push_back(std::move(fs));
  }
  return out;
}

std::vector<Example> Tagger::examples(const std::vector<Document>& corpus) const {
  std::vector<Example> out;
  for (const auto& doc : corpus) {
    for (const auto& s : doc.sentences) {
      if (s.words.empty()) continue;
      Example ex;
      bool ok = true;
      for (const auto& w : s.words) {
        if (!w.upos || !upos_.find(*w.upos)) {
          ok = false;
          break;
        }
        ex.forms.push_back(w.form);
        ex.upos.push_back(*upos_.find(*w.upos));
        ex.xpos.push_back(w.xpos ? xpos_.find(*w.xpos) : std::nullopt);
        std::vector<std::size_t> fv;
        if (has_feats_) {
          for (const auto& [attr, vocab] : feats_) {
            const auto value = w.feats ? w.feats->get(attr) : std::nullopt;
            fv.push_back(value ? vocab.find(*value).value_or(0) : 0);
          }
        }
        ex.feats.push_back(std::move(fv));
      }
      if (ok) out.push_back(std::move(ex));
    }
  }
  return out;
}

Expr Tagger::loss(Graph& g, const Example& ex) const {
  const Logits l = logits(g, ex.forms, ex.upos);
  std::vector<Expr> terms;
  for (std::size_t i = 0; i < ex.forms.size(); ++i) {
    terms.push_back(nn::softmax_cross_entropy(l.upos[i], ex.upos[i]));
    if (!l.xpos.empty() && ex.xpos[i]) terms.push_back(nn::softmax_cross_entropy(l.xpos[i], *ex.xpos[i]));
    for (std::size_t a = 0; a < ex.feats[i].size(); ++a) {
      terms.push_back(nn::softmax_cross_entropy(l.feats[i][a], ex.feats[i][a]));
    }
  }
  return nn::sum(terms);
}

std::vector<Tags> Tagger::tag(const std::vector<std::string>& forms) const {
  Graph g;
  const Logits l = logits(g, forms);
  std::vector<Tags> out;
  for (std::size_t i = 0; i < forms.size(); ++i) {
    Tags t;
    t.upos = upos_.at(argmax(l.upos[i].value()));
    if (!l.xpos.empty()) t.xpos = xpos_.at(argmax(l.xpos[i].value()));
    MorphFeatures feats;
    std::size_t a = 0;
    for (const auto& [attr, vocab] : feats_) {
      const std::size_t v = argmax(l.feats[i][a++].value());
      if (v != 0) feats.set(attr, vocab.at(v));
    }
    if (!feats.empty()) t.feats = feats;
    out.push_back(std::move(t));
  }
  return out;
}

void Tagger::apply(Document& doc) const {
  for (auto& s : doc.sentences) {
    if (s.words.empty()) continue;
    const auto tags = tag(word_forms(s));
    for (std::size_t i = 0; i < tags.size(); ++i) {
      s.words[i].upos = tags[i].upos;
      s.words[i].xpos = tags[i].xpos;
      s.words[i].feats = tags[i].feats;
    }
  }
}

Tagger Tagger::train(const std::vector<Document>& corpus, const Config& config, std::ostream* log) {
  Tagger model(corpus, config);
  const auto data = model.examples(corpus);
  if (data.empty()) throw Error("tagger training needs sentences with UPOS annotation");
  nn::Rng rng(config.seed);
  nn::Optimizer opt(model.params_, {.learning_rate = config.learning_rate});
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t i : order) {
      Graph g(true, rng());
      const Expr loss = model.loss(g, data[i]);
      total += loss.scalar();
      g.backward(loss);
      opt.step();
    }
    if (log) *log << "tagger epoch " << epoch + 1 << " loss " << total / static_cast<double>(data.size()) << "\n";
  }
  return model;
}

void Tagger::save(const std::string& path) const {
  nlohmann::json feats = nlohmann::json::object();
  for (const auto& [attr, v] : feats_) feats[attr] = v.to_json();
  nn::save_model(path, kKind,
                 {{"config", config_.to_json()},
                  {"words", words_.to_json()},
                  {"chars", chars_.to_json()},
                  {"upos", upos_.to_json()},
                  {"xpos", xpos_.to_json()},
                  {"feats", feats},
                  {"has_feats", has_feats_}},
                 params_);
}

Tagger Tagger::load(const std::string& path) {
  nn::ModelFile file = nn::load_model(path, kKind);
  Tagger t;
  const auto& m = file.meta;
  t.config_ = Config::from_json(m.at("config"));
  t.words_ = nn::Vocab::from_json(m.at("words"));
  t.chars_ = nn::Vocab::from_json(m.at("chars"));
  t.upos_ = nn::Vocab::from_json(m.at("upos"));
  t.xpos_ = nn::Vocab::from_json(m.at("xpos"));
  for (const auto& [attr, v] : m.at("feats").items()) t.feats_.emplace(attr, nn::Vocab::from_json(v));
  t.has_feats_ = m.at("has_feats").get<bool>();
  t.params_ = std::move(file.params);
  t.bind();
  return t;
}

}  // namespace tessera::pos
