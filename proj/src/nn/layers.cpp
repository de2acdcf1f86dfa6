#include "tessera/nn/layers.hpp"

#include <cmath>

#include "tessera/error.hpp"

namespace tessera::nn {

LstmLayer::LstmLayer(ParameterSet& params, const std::string& prefix, std::size_t input,
                     std::size_t hidden, Rng& rng)
    : input_(input), hidden_(hidden) {
  w_ = &params.add(prefix + ".W", {4 * hidden, input + hidden}, Init::ScaledGaussian, rng);
  b_ = &params.add(prefix + ".b", {4 * hidden}, Init::Zero, rng);
  for (std::size_t i = hidden; i < 2 * hidden; ++i) b_->value[i] = 1.0;
}

LstmLayer LstmLayer::bind(ParameterSet& params, const std::string& prefix) {
  LstmLayer l;
  l.w_ = &params.get(prefix + ".W");
  l.b_ = &params.get(prefix + ".b");
  l.hidden_ = l.w_->value.rows() / 4;
  l.input_ = l.w_->value.cols() - l.hidden_;
  return l;
}

LstmLayer::State LstmLayer::initial(Graph& g) const { return {g.zeros(hidden_), g.zeros(hidden_)}; }

LstmLayer::State LstmLayer::step(Graph& g, Expr x, const State& prev) const {
  require(x.size() == input_, "LSTM input size mismatch");
  const Expr gates = affine(g.param(*w_), concat({x, prev.h}), g.param(*b_));
  const Expr i = sigmoid(slice(gates, 0, hidden_));
  const Expr f = sigmoid(slice(gates, hidden_, hidden_));
  const Expr o = sigmoid(slice(gates, 2 * hidden_, hidden_));
  const Expr cand = tanh(slice(gates, 3 * hidden_, hidden_));
  const Expr c = add(cmul(f, prev.c), cmul(i, cand));
  const Expr h = cmul(o, tanh(c));
  return {h, c};
}

std::vector<Expr> LstmLayer::run(Graph& g, const std::vector<Expr>& xs) const {
  std::vector<Expr> out;
  out.reserve(xs.size());
  State s = initial(g);
  for (const Expr& x : xs) {
    s = step(g, x, s);
    out.push_back(s.h);
  }
  return out;
}

BiLstm::BiLstm(ParameterSet& params, const std::string& prefix, std::size_t input,
               std::size_t hidden, std::size_t layers, Rng& rng) {
  require(layers >= 1, "BiLstm needs at least one layer");
  std::size_t in = input;
  for (std::size_t l = 0; l < layers; ++l) {
    fwd_.emplace_back(params, prefix + ".l" + std::to_string(l) + ".fwd", in, hidden, rng);
    bwd_.emplace_back(params, prefix + ".l" + std::to_string(l) + ".bwd", in, hidden, rng);
    in = 2 * hidden;
  }
}

BiLstm BiLstm::bind(ParameterSet& params, const std::string& prefix, std::size_t layers) {
  BiLstm b;
  for (std::size_t l = 0; l < layers; ++l) {
    b.fwd_.push_back(LstmLayer::bind(params, prefix + ".l" + std::to_string(l) + ".fwd"));
    b.bwd_.push_back(LstmLayer::bind(params, prefix + ".l" + std::to_string(l) + ".bwd"));
  }
  return b;
}

std::vector<Expr> BiLstm::encode(Graph& g, const std::vector<Expr>& inputs, double dropout_p) const {
  require(!inputs.empty(), "BiLSTM input must be a non-empty sequence");
  std::vector<Expr> layer_in = inputs;
  for (std::size_t l = 0; l < fwd_.size(); ++l) {
    if (l > 0) {
      for (auto& x : layer_in) x = dropout(x, dropout_p);
    }
    const auto forward = fwd_[l].run(g, layer_in);
    std::vector<Expr> reversed(layer_in.rbegin(), layer_in.rend());
    auto backward = bwd_[l].run(g, reversed);
    std::vector<Expr> out;
    out.reserve(layer_in.size());
    const std::size_t n = layer_in.size();
    for (std::size_t t = 0; t < n; ++t) out.push_back(concat({forward[t], backward[n - 1 - t]}));
    layer_in = std::move(out);
  }
  return layer_in;
}

Linear::Linear(ParameterSet& params, const std::string& prefix, std::size_t input,
               std::size_t output, Rng& rng) {
  w_ = &params.add(prefix + ".W", {output, input}, Init::ScaledGaussian, rng);
  b_ = &params.add(prefix + ".b", {output}, Init::Zero, rng);
}

Linear Linear::bind(ParameterSet& params, const std::string& prefix) {
  Linear l;
  l.w_ = &params.get(prefix + ".W");
  l.b_ = &params.get(prefix + ".b");
  return l;
}

Expr Linear::operator()(Graph& g, Expr x) const { return affine(g.param(*w_), x, g.param(*b_)); }

std::size_t Linear::output_size() const { return w_ ? w_->value.rows() : 0; }

Biaffine::Biaffine(ParameterSet& params, const std::string& prefix, std::size_t dx, std::size_t dy,
                   std::size_t classes, Rng& rng) {
  u_ = &params.add(prefix + ".U", {classes, dx, dy}, Init::Zero, rng);
  w_ = &params.add(prefix + ".W", {classes, dx + dy}, Init::ScaledGaussian, rng);
  b_ = &params.add(prefix + ".b", {classes}, Init::Zero, rng);
  // Small random bilinear term so the interaction is active from the start.
  std::normal_distribution<double> dist(0.0, 0.1 / std::sqrt(static_cast<double>(dx * dy)));
  for (double& v : u_->value.data()) v = dist(rng);
}

Biaffine Biaffine::bind(ParameterSet& params, const std::string& prefix) {
  Biaffine b;
  b.u_ = &params.get(prefix + ".U");
  b.w_ = &params.get(prefix + ".W");
  b.b_ = &params.get(prefix + ".b");
  return b;
}

Expr Biaffine::operator()(Graph& g, Expr x, Expr y) const {
  return biaffine(x, y, g.param(*u_), g.param(*w_), g.param(*b_));
}

Attention attend(Graph& g, Expr query, const std::vector<Expr>& keys,
                 const std::vector<Expr>& values, Parameter& bilinear) {
  require(!keys.empty(), "attention needs at least one key");
  require(keys.size() == values.size(), "attention needs one value per key");
  const Expr projected = matvec(g.param(bilinear), query);
  std::vector<Expr> scores;
  scores.reserve(keys.size());
  for (const Expr& k : keys) scores.push_back(dot(projected, k));
  const Expr weights = softmax(concat(scores));
  return {weighted_sum(weights, values), weights};
}

}  // namespace tessera::nn
