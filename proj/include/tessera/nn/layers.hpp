#pragma once

#include <string>
#include <vector>

#include "tessera/nn/graph.hpp"
#include "tessera/nn/ops.hpp"

namespace tessera::nn {

/// One LSTM layer. Gates are laid out [input, forget, output, candidate] in a
/// single (4h x (in + h)) matrix; the forget-gate bias starts at 1.
class LstmLayer {
 public:
  struct State {
    Expr h;
    Expr c;
  };

  LstmLayer() = default;
  LstmLayer(ParameterSet& params, const std::string& prefix, std::size_t input, std::size_t hidden,
            Rng& rng);
  /// Binds to parameters already present in `params` (after loading).
  static LstmLayer bind(ParameterSet& params, const std::string& prefix);

  State initial(Graph& g) const;
  State step(Graph& g, Expr x, const State& prev) const;

  /// Runs over `xs` in order and returns the hidden state after each input.
  std::vector<Expr> run(Graph& g, const std::vector<Expr>& xs) const;

  std::size_t input_size() const { return input_; }
  std::size_t hidden_size() const { return hidden_; }

 private:
  Parameter* w_ = nullptr;
  Parameter* b_ = nullptr;
  std::size_t input_ = 0;
  std::size_t hidden_ = 0;
};

/// Stacked bidirectional LSTM. Output t is [forward_t; backward_t] where the
/// forward state has read inputs 0..t and the backward state t..n-1.
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(ParameterSet& params, const std::string& prefix, std::size_t input, std::size_t hidden,
         std::size_t layers, Rng& rng);
  static BiLstm bind(ParameterSet& params, const std::string& prefix, std::size_t layers);

  /// Requires a non-empty sequence. Dropout applies between layers.
  std::vector<Expr> encode(Graph& g, const std::vector<Expr>& inputs, double dropout = 0.0) const;

  std::size_t output_size() const { return fwd_.empty() ? 0 : 2 * fwd_[0].hidden_size(); }

 private:
  std::vector<LstmLayer> fwd_;
  std::vector<LstmLayer> bwd_;
};

/// Dense layer y = W x + b.
class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet& params, const std::string& prefix, std::size_t input, std::size_t output,
         Rng& rng);
  static Linear bind(ParameterSet& params, const std::string& prefix);

  Expr operator()(Graph& g, Expr x) const;
  std::size_t output_size() const;

 private:
  Parameter* w_ = nullptr;
  Parameter* b_ = nullptr;
};

/// Biaffine classifier with K outputs over (x, y).
class Biaffine {
 public:
  Biaffine() = default;
  Biaffine(ParameterSet& params, const std::string& prefix, std::size_t dx, std::size_t dy,
           std::size_t classes, Rng& rng);
  static Biaffine bind(ParameterSet& params, const std::string& prefix);

  Expr operator()(Graph& g, Expr x, Expr y) const;

  Parameter& u() const { return *u_; }
  Parameter& w() const { return *w_; }
  Parameter& b() const { return *b_; }

 private:
  Parameter* u_ = nullptr;
  Parameter* w_ = nullptr;
  Parameter* b_ = nullptr;
};

/// Bilinear dot-product attention: score_i = q' A k_i, weights softmax(score).
struct Attention {
  Expr context;
  Expr weights;
};
Attention attend(Graph& g, Expr query, const std::vector<Expr>& keys,
                 const std::vector<Expr>& values, Parameter& bilinear);

}  // namespace tessera::nn
