#include "tessera/seq2seq/seq2seq.hpp"

#include "tessera/error.hpp"
#include "tessera/text/utf8.hpp"

namespace tessera::seq2seq {

using nn::Expr;
using nn::Graph;

nlohmann::json Config::to_json() const {
  return {{"embed_dim", embed_dim}, {"hidden", hidden}, {"dropout", dropout}};
}

Config Config::from_json(const nlohmann::json& j) {
  Config c;
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.dropout = j.value("dropout", c.dropout);
  return c;
}

Symbols chars(const std::string& s) {
  Symbols out;
  for (char32_t c : utf8::decode(s)) out.push_back(utf8::encode(c));
  return out;
}

std::string join(const Symbols& symbols) {
  std::string out;
  for (const auto& s : symbols) out += s;
  return out;
}

Model::Model(nn::ParameterSet& params, const std::string& prefix, nn::Vocab source,
             nn::Vocab target, Config config, nn::Rng& rng)
    : source_(std::move(source)), target_(std::move(target)), config_(config) {
  target_.add(kStart);
  target_.add(kStop);
  const std::size_t h = config_.hidden;
  source_embed_ = &params.add(prefix + ".src_embed", {source_.size(), config_.embed_dim},
                              nn::Init::Uniform, rng);
  target_embed_ = &params.add(prefix + ".tgt_embed", {target_.size(), config_.embed_dim},
                              nn::Init::Uniform, rng);
  encoder_ = nn::BiLstm(params, prefix + ".enc", config_.embed_dim, h, 1, rng);
  decoder_ = nn::LstmLayer(params, prefix + ".dec", config_.embed_dim, h, rng);
  init_h_ = nn::Linear(params, prefix + ".init_h", 2 * h, h, rng);
  init_c_ = nn::Linear(params, prefix + ".init_c", 2 * h, h, rng);
  attention_ = &params.add(prefix + ".attn", {2 * h, h}, nn::Init::ScaledGaussian, rng);
  output_ = nn::Linear(params, prefix + ".out", 3 * h, target_.size(), rng);
}

Model Model::bind(nn::ParameterSet& params, const std::string& prefix, const nlohmann::json& meta) {
  Model m;
  m.source_ = nn::Vocab::from_json(meta.at("source"));
  m.target_ = nn::Vocab::from_json(meta.at("target"));
  m.config_ = Config::from_json(meta.at("config"));
  m.source_embed_ = &params.get(prefix + ".src_embed");
  m.target_embed_ = &params.get(prefix + ".tgt_embed");
  m.encoder_ = nn::BiLstm::bind(params, prefix + ".enc", 1);
  m.decoder_ = nn::LstmLayer::bind(params, prefix + ".dec");
  m.init_h_ = nn::Linear::bind(params, prefix + ".init_h");
  m.init_c_ = nn::Linear::bind(params, prefix + ".init_c");
  m.attention_ = &params.get(prefix + ".attn");
  m.output_ = nn::Linear::bind(params, prefix + ".out");
  return m;
}

nlohmann::json Model::meta() const {
  return {{"source", source_.to_json()}, {"target", target_.to_json()}, {"config", config_.to_json()}};
}

Model::Encoded Model::encode(Graph& g, const Symbols& source) const {
  require(!source.empty(), "seq2seq source must be non-empty");
  std::vector<Expr> xs;
  xs.reserve(source.size());
  for (const auto& s : source) xs.push_back(g.row(*source_embed_, source_.index(s)));
  Encoded enc;
  enc.states = encoder_.encode(g, xs, config_.dropout);
  const std::size_t h = config_.hidden;
  enc.summary = nn::concat({nn::slice(enc.states.back(), 0, h), nn::slice(enc.states.front(), h, h)});
  return enc;
}

nn::LstmLayer::State Model::start_state(Graph& g, const Encoded& enc) const {
  return {nn::tanh(init_h_(g, enc.summary)), init_c_(g, enc.summary)};
}

Expr Model::step_logits(Graph& g, const Encoded& enc, nn::LstmLayer::State& state,
                        std::size_t prev) const {
  state = decoder_.step(g, g.row(*target_embed_, prev), state);
  const auto attn = nn::attend(g, state.h, enc.states, enc.states, *attention_);
  return output_(g, nn::concat({state.h, attn.context}));
}

Expr Model::loss(Graph& g, const Encoded& enc, const Symbols& target) const {
  auto state = start_state(g, enc);
  std::size_t prev = target_.index(kStart);
  std::vector<Expr> losses;
  for (std::size_t t = 0; t <= target.size(); ++t) {
    const std::size_t gold = t < target.size() ? target_.index(target[t]) : target_.index(kStop);
    losses.push_back(nn::softmax_cross_entropy(step_logits(g, enc, state, prev), gold));
    prev = gold;
  }
  return nn::sum(losses);
}

Expr Model::loss(Graph& g, const Symbols& source, const Symbols& target) const {
  return loss(g, encode(g, source), target);
}

std::optional<Symbols> Model::decode(const Symbols& source, std::size_t max_len) const {
  Graph g;
  const Encoded enc = encode(g, source);
  auto state = start_state(g, enc);
  std::size_t prev = target_.index(kStart);
  const std::size_t stop = target_.index(kStop);
  Symbols out;
  while (true) {
    const auto logits = step_logits(g, enc, state, prev).value();
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
      if (logits[i] > logits[best]) best = i;
    }
    if (best == stop) return out;
    if (out.size() == max_len || best == target_.index(kStart) || target_.at(best) == nn::Vocab::kUnk) {
      return std::nullopt;
    }
    out.push_back(target_.at(best));
    prev = best;
  }
}

}  // namespace tessera::seq2seq
