#include "tessera/depparse/parser.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <ostream>

#include "tessera/error.hpp"
#include "tessera/nn/container.hpp"
#include "tessera/nn/optimizer.hpp"
#include "tessera/text/utf8.hpp"

namespace tessera::depparse {

using nn::Expr;
using nn::Graph;

namespace {

constexpr const char* kKind = "parser";
constexpr const char* kRoot = "root";

std::vector<std::string> feature_items(const std::optional<MorphFeatures>& feats) {
  std::vector<std::string> out;
  if (!feats) return out;
  for (const auto& [attr, vals] : feats->attrs()) out.push_back(attr + "=" + *feats->get(attr));
  return out;
}

}  // namespace

std::size_t distance_bucket(std::size_t distance) {
  require(distance >= 1, "distance buckets start at 1");
  if (distance <= 4) return distance - 1;
  if (distance <= 8) return 4;
  return 5;
}

nlohmann::json Config::to_json() const {
  return {{"word_dim", word_dim},
          {"upos_dim", upos_dim},
          {"feat_dim", feat_dim},
          {"hidden", hidden},
          {"layers", layers},
          {"arc_dim", arc_dim},
          {"label_dim", label_dim},
          {"dropout", dropout},
          {"aux", aux},
          {"linearization_weight", linearization_weight},
          {"distance_weight", distance_weight},
          {"epochs", epochs},
          {"learning_rate", learning_rate},
          {"seed", seed}};
}

Config Config::from_json(const nlohmann::json& j) {
  Config c;
  c.word_dim = j.value("word_dim", c.word_dim);
  c.upos_dim = j.value("upos_dim", c.upos_dim);
  c.feat_dim = j.value("feat_dim", c.feat_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.layers = j.value("layers", c.layers);
  c.arc_dim = j.value("arc_dim", c.arc_dim);
  c.label_dim = j.value("label_dim", c.label_dim);
  c.dropout = j.value("dropout", c.dropout);
  c.aux = j.value("aux", c.aux);
  c.linearization_weight = j.value("linearization_weight", c.linearization_weight);
  c.distance_weight = j.value("distance_weight", c.distance_weight);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  return c;
}

Example features_of(const Sentence& s) {
  Example ex;
  for (const auto& w : s.words) {
    ex.forms.push_back(w.form);
    ex.upos.push_back(w.upos);
    ex.feats.push_back(feature_items(w.feats));
  }
  return ex;
}

Parser::Parser(const std::vector<Document>& corpus, const Config& config) : config_(config) {
  relations_.add(kRoot);
  for (const auto& doc : corpus)
    for (const auto& s : doc.sentences)
      for (const auto& w : s.words) {
        words_.add(utf8::to_lower(w.form));
        if (w.upos) upos_.add(*w.upos);
        for (const auto& f : feature_items(w.feats)) feats_.add(f);
        if (w.deprel) relations_.add(*w.deprel);
      }
  nn::Rng rng(config_.seed);
  const std::size_t in = config_.word_dim + config_.upos_dim + config_.feat_dim;
  const std::size_t h2 = 2 * config_.hidden;
  params_.add("word_embed", {words_.size(), config_.word_dim}, nn::Init::Uniform, rng);
  params_.add("upos_embed", {upos_.size(), config_.upos_dim}, nn::Init::Uniform, rng);
  params_.add("feat_embed", {feats_.size(), config_.feat_dim}, nn::Init::Uniform, rng);
  params_.add("root", {in}, nn::Init::Uniform, rng);
  nn::BiLstm(params_, "enc", in, config_.hidden, config_.layers, rng);
  nn::Linear(params_, "arc_head", h2, config_.arc_dim, rng);
  nn::Linear(params_, "arc_dep", h2, config_.arc_dim, rng);
  nn::Linear(params_, "label_head", h2, config_.label_dim, rng);
  nn::Linear(params_, "label_dep", h2, config_.label_dim, rng);
  params_.add("arc.U", {config_.arc_dim, config_.arc_dim}, nn::Init::ScaledGaussian, rng);
  params_.add("arc.head_bias", {config_.arc_dim}, nn::Init::Zero, rng);
  params_.add("arc.dep_bias", {config_.arc_dim}, nn::Init::Zero, rng);
  nn::Biaffine(params_, "label", config_.label_dim, config_.label_dim, relations_.size(), rng);
  nn::Biaffine(params_, "linearization", config_.arc_dim, config_.arc_dim, 1, rng);
  nn::Biaffine(params_, "distance", config_.arc_dim, config_.arc_dim, kDistanceBuckets, rng);
  bind();
}

void Parser::bind() {
  word_embed_ = &params_.get("word_embed");
  upos_embed_ = &params_.get("upos_embed");
  feat_embed_ = &params_.get("feat_embed");
  root_ = &params_.get("root");
  encoder_ = nn::BiLstm::bind(params_, "enc", config_.layers);
  arc_head_ = nn::Linear::bind(params_, "arc_head");
  arc_dep_ = nn::Linear::bind(params_, "arc_dep");
  label_head_ = nn::Linear::bind(params_, "label_head");
  label_dep_ = nn::Linear::bind(params_, "label_dep");
  arc_u_ = &params_.get("arc.U");
  arc_head_bias_ = &params_.get("arc.head_bias");
  arc_dep_bias_ = &params_.get("arc.dep_bias");
  label_ = nn::Biaffine::bind(params_, "label");
  linearization_ = nn::Biaffine::bind(params_, "linearization");
  distance_ = nn::Biaffine::bind(params_, "distance");
}

std::vector<Example> Parser::examples(const std::vector<Document>& corpus) const {
  std::vector<Example> out;
  for (const auto& doc : corpus)
    for (const auto& s : doc.sentences) {
      if (s.words.empty()) continue;
      const bool complete = std::all_of(s.words.begin(), s.words.end(),
                                        [](const Word& w) { return w.head && w.deprel; });
      if (!complete) continue;
      Example ex = features_of(s);
      for (const auto& w : s.words) {
        ex.heads.push_back(*w.head);
        ex.labels.push_back(relations_.find(*w.head == 0 ? kRoot : *w.deprel).value_or(0));
      }
      out.push_back(std::move(ex));
    }
  return out;
}

Parser::Encoded Parser::encode(Graph& g, const Example& ex) const {
  require(!ex.forms.empty(), "cannot parse an empty sentence");
  std::bernoulli_distribution drop(config_.dropout);
  const bool word_dropout = g.training() && config_.dropout > 0;
  std::vector<Expr> xs{g.param(*root_)};
  for (std::size_t i = 0; i < ex.forms.size(); ++i) {
    std::size_t w = words_.index(utf8::to_lower(ex.forms[i]));
    if (word_dropout && drop(g.rng())) w = 0;
    const std::size_t u = ex.upos[i] ? upos_.index(*ex.upos[i]) : 0;
    std::vector<Expr> fs;
    for (const auto& f : ex.feats[i]) fs.push_back(g.row(*feat_embed_, feats_.index(f)));
    const Expr feats = fs.empty() ? g.zeros(config_.feat_dim) : nn::sum(fs);
    xs.push_back(nn::dropout(nn::concat({g.row(*word_embed_, w), g.row(*upos_embed_, u), feats}), config_.dropout));
  }
  Encoded e;
  for (Expr h : encoder_.encode(g, xs, config_.dropout)) {
    h = nn::dropout(h, config_.dropout);
    e.arc_head.push_back(nn::tanh(arc_head_(g, h)));
    e.arc_dep.push_back(nn::tanh(arc_dep_(g, h)));
    e.label_head.push_back(nn::tanh(label_head_(g, h)));
    e.label_dep.push_back(nn::tanh(label_dep_(g, h)));
  }
  return e;
}

// `projected[d]` caches U b_d (built on first use).
Expr Parser::arc_score(Graph& g, const Encoded& e, std::size_t h, std::size_t d,
                       std::vector<Expr>& projected) const {
  if (projected[d].id < 0) {
    projected[d] = nn::add(nn::matvec(g.param(*arc_u_), e.arc_dep[d]), g.param(*arc_head_bias_));
  }
  return nn::add(nn::dot(e.arc_head[h], projected[d]), nn::dot(g.param(*arc_dep_bias_), e.arc_dep[d]));
}

Expr Parser::aux_loss(Graph& g, const Example& ex) const {
  const Encoded e = encode(g, ex);
  std::vector<Expr> terms;
  for (std::size_t d = 1; d <= ex.forms.size(); ++d) {
    const auto h = static_cast<std::size_t>(ex.heads[d - 1]);
    if (h == 0) continue;
    const Expr lin = linearization_(g, e.arc_head[h], e.arc_dep[d]);
    terms.push_back(nn::scale(nn::logistic_loss(lin, d > h), config_.linearization_weight));
    const std::size_t bucket = distance_bucket(d > h ? d - h : h - d);
    const Expr dist = distance_(g, e.arc_head[h], e.arc_dep[d]);
    terms.push_back(nn::scale(nn::softmax_cross_entropy(dist, bucket), config_.distance_weight));
  }
  if (terms.empty()) return g.constant(0.0);
  return nn::sum(terms);
}

Expr Parser::loss(Graph& g, const Example& ex) const {
  const std::size_t n = ex.forms.size();
  require(ex.heads.size() == n && ex.labels.size() == n, "parser loss needs gold heads and labels");
  const Encoded e = encode(g, ex);
  std::vector<Expr> projected(n + 1);
  std::vector<Expr> terms;
  for (std::size_t d = 1; d <= n; ++d) {
    const auto gold = static_cast<std::size_t>(ex.heads[d - 1]);
    std::vector<Expr> candidates;
    std::size_t gold_index = 0;
    for (std::size_t h = 0; h <= n; ++h) {
      if (h == d) continue;
      if (h == gold) gold_index = candidates.size();
      candidates.push_back(arc_score(g, e, h, d, projected));
    }
    terms.push_back(nn::softmax_cross_entropy(nn::concat(candidates), gold_index));
    terms.push_back(nn::softmax_cross_entropy(label_(g, e.label_head[gold], e.label_dep[d]), ex.labels[d - 1]));
    if (config_.aux && gold != 0) {
      const Expr lin = linearization_(g, e.arc_head[gold], e.arc_dep[d]);
      terms.push_back(nn::scale(nn::logistic_loss(lin, d > gold), config_.linearization_weight));
      const Expr dist = distance_(g, e.arc_head[gold], e.arc_dep[d]);
      const std::size_t bucket = distance_bucket(d > gold ? d - gold : gold - d);
      terms.push_back(nn::scale(nn::softmax_cross_entropy(dist, bucket), config_.distance_weight));
    }
  }
  return nn::sum(terms);
}

ArcScores Parser::score_arcs(const Example& ex) const {
  Graph g;
  const std::size_t n = ex.forms.size();
  const Encoded e = encode(g, ex);
  std::vector<Expr> projected(n + 1);
  ArcScores s(n + 1, std::vector<double>(n + 1, 0.0));
  for (std::size_t d = 1; d <= n; ++d)
    for (std::size_t h = 0; h <= n; ++h)
      if (h != d) s[h][d] = arc_score(g, e, h, d, projected).scalar();
  return s;
}

std::pair<std::vector<int>, std::vector<std::string>> Parser::parse(const Example& ex) const {
  Graph g;
  const std::size_t n = ex.forms.size();
  const Encoded e = encode(g, ex);
  std::vector<Expr> projected(n + 1);
  ArcScores s(n + 1, std::vector<double>(n + 1, 0.0));
  for (std::size_t d = 1; d <= n; ++d)
    for (std::size_t h = 0; h <= n; ++h)
      if (h != d) s[h][d] = arc_score(g, e, h, d, projected).scalar();
  std::vector<int> heads = decode_mst(s);
  require(is_single_root_tree(heads), "decoder produced an invalid tree");
  // Label scores are needed only for the chosen arcs.
  std::vector<std::vector<std::vector<double>>> label_scores(n + 1, std::vector<std::vector<double>>(n + 1));
  for (std::size_t d = 1; d <= n; ++d) {
    const auto h = static_cast<std::size_t>(heads[d - 1]);
    const auto v = label_(g, e.label_head[h], e.label_dep[d]).value();
    label_scores[h][d].assign(v.begin(), v.end());
  }
  return {heads, assign_labels(label_scores, heads, relations_.items(), kRoot)};
}

void Parser::apply(Document& doc) const {
  for (auto& s : doc.sentences) {
    if (s.words.empty()) continue;
    const auto [heads, labels] = parse(features_of(s));
    for (std::size_t i = 0; i < s.words.size(); ++i) {
      s.words[i].head = heads[i];
      s.words[i].deprel = labels[i];
    }
  }
}

Parser Parser::train(const std::vector<Document>& corpus, const Config& config, std::ostream* log) {
  Parser model(corpus, config);
  const auto data = model.examples(corpus);
  if (data.empty()) throw Error("parser training needs sentences with gold heads and relations");
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
    if (log) *log << "parser epoch " << epoch + 1 << " loss " << total / static_cast<double>(data.size()) << "\n";
  }
  return model;
}

void Parser::save(const std::string& path) const {
  nn::save_model(path, kKind,
                 {{"config", config_.to_json()},
                  {"words", words_.to_json()},
                  {"upos", upos_.to_json()},
                  {"feats", feats_.to_json()},
                  {"relations", relations_.to_json()}},
                 params_);
}

Parser Parser::load(const std::string& path) {
  nn::ModelFile file = nn::load_model(path, kKind);
  Parser p;
  const auto& m = file.meta;
  p.config_ = Config::from_json(m.at("config"));
  p.words_ = nn::Vocab::from_json(m.at("words"));
  p.upos_ = nn::Vocab::from_json(m.at("upos"));
  p.feats_ = nn::Vocab::from_json(m.at("feats"));
  p.relations_ = nn::Vocab::from_json(m.at("relations"));
  p.params_ = std::move(file.params);
  p.bind();
  return p;
}

}  // namespace tessera::depparse
