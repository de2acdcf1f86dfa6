#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tessera/nn/layers.hpp"
#include "tessera/nn/vocab.hpp"

namespace tessera::seq2seq {

/// Sequences are lists of symbols: single code points as UTF-8 strings, or
/// reserved tokens such as "<NOUN>" used for conditioning.
using Symbols = std::vector<std::string>;

inline constexpr const char* kStart = "<s>";
inline constexpr const char* kStop = "</s>";

struct Config {
  std::size_t embed_dim = 32;
  std::size_t hidden = 64;
  double dropout = 0.33;

  nlohmann::json to_json() const;
  static Config from_json(const nlohmann::json& j);
};

/// Splits a UTF-8 string into one symbol per code point.
Symbols chars(const std::string& s);
std::string join(const Symbols& symbols);

/// Character encoder-decoder with bilinear attention over BiLSTM encoder
/// states. The decoder LSTM starts from a projection of the encoder's final
/// states and predicts each symbol from [decoder state; attention context].
class Model {
 public:
  Model() = default;
  Model(nn::ParameterSet& params, const std::string& prefix, nn::Vocab source, nn::Vocab target,
        Config config, nn::Rng& rng);
  static Model bind(nn::ParameterSet& params, const std::string& prefix, const nlohmann::json& meta);
  nlohmann::json meta() const;

  struct Encoded {
    std::vector<nn::Expr> states;
    // [forward state after the last symbol; backward state after the first]
    nn::Expr summary;
  };
  Encoded encode(nn::Graph& g, const Symbols& source) const;

  /// Sum of per-step cross-entropies for `target` followed by the stop symbol.
  nn::Expr loss(nn::Graph& g, const Encoded& enc, const Symbols& target) const;
  nn::Expr loss(nn::Graph& g, const Symbols& source, const Symbols& target) const;

  /// Greedy decode up to the stop symbol. nullopt when the decode is
  /// degenerate: `max_len` symbols without a stop, or a reserved symbol.
  std::optional<Symbols> decode(const Symbols& source, std::size_t max_len) const;

  std::size_t summary_size() const { return 2 * config_.hidden; }
  const nn::Vocab& source_vocab() const { return source_; }
  const nn::Vocab& target_vocab() const { return target_; }

 private:
  nn::LstmLayer::State start_state(nn::Graph& g, const Encoded& enc) const;
  nn::Expr step_logits(nn::Graph& g, const Encoded& enc, nn::LstmLayer::State& state,
                       std::size_t prev) const;

  nn::Vocab source_;
  nn::Vocab target_;
  Config config_;
  nn::Parameter* source_embed_ = nullptr;
  nn::Parameter* target_embed_ = nullptr;
  nn::BiLstm encoder_;
  nn::LstmLayer decoder_;
  nn::Linear init_h_;
  nn::Linear init_c_;
  nn::Parameter* attention_ = nullptr;
  nn::Linear output_;
};

}  // namespace tessera::seq2seq
