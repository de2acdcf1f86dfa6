#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tessera/nn/layers.hpp"
#include "tessera/nn/vocab.hpp"

namespace tessera::ner {

enum class Direction { Forward, Backward };

struct CharLmConfig {
  std::size_t embed_dim = 16;
  std::size_t hidden = 64;
  // Truncated back-propagation window.
  std::size_t window = 50;
  std::size_t epochs = 20;
  double learning_rate = 3e-3;
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
  static CharLmConfig from_json(const nlohmann::json& j);
};

/// Single-layer character LSTM language model. A backward model reads the
/// character stream reversed; it shares no parameters with a forward one.
class CharLM {
 public:
  CharLM() = default;
  /// Untrained model over the characters of `text`.
  CharLM(std::u32string_view text, Direction direction, const CharLmConfig& config);

  static CharLM train(std::u32string_view text, Direction direction, const CharLmConfig& config,
                      std::ostream* log = nullptr);

  /// The stream the model reads for `text` (reversed when backward).
  std::u32string reading_order(std::u32string_view text) const;

  /// Mean next-character cross-entropy over `text` (in nats).
  double mean_loss(std::u32string_view text) const;
  /// Loss of one window read in model order, starting from `state`.
  nn::Expr window_loss(nn::Graph& g, std::u32string_view stream, const nn::LstmLayer::State& state,
                       nn::LstmLayer::State* final_state = nullptr) const;

  /// Hidden states after consuming each character of `stream`, given in
  /// the model's reading order.
  std::vector<std::vector<double>> states(std::u32string_view stream) const;

  Direction direction() const { return direction_; }
  std::size_t hidden_size() const { return config_.hidden; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

  /// Metadata + parameters, for embedding inside another model file.
  nlohmann::json meta() const;
  void export_params(nn::ParameterSet& out, const std::string& prefix) const;
  static CharLM from_parts(const nlohmann::json& meta, const nn::ParameterSet& all,
                           const std::string& prefix);
  /// SHA-256 over metadata and parameter bytes.
  std::string content_hash() const;

  void save(const std::string& path) const;
  static CharLM load(const std::string& path);

 private:
  void bind();
  std::size_t symbol(char32_t c) const;

  Direction direction_ = Direction::Forward;
  CharLmConfig config_;
  nn::Vocab chars_;
  nn::ParameterSet params_;
  nn::Parameter* embed_ = nullptr;
  nn::LstmLayer lstm_;
  nn::Linear output_;
};

/// Word spans over a sentence's characters: [start, end) code points.
using Span = std::pair<std::size_t, std::size_t>;

/// Sentence characters the NER model feeds to its language models: words
/// joined by single spaces with one space of padding on each side, and each
/// word's span in it.
std::pair<std::u32string, std::vector<Span>> sentence_chars(const std::vector<std::string>& words);

/// Per word: [forward state after the character following the word;
/// backward state after (in reverse) the character preceding it]. Requires
/// 1 <= start < end < |chars| for every span.
std::vector<std::vector<double>> contextual_embed(const CharLM& forward, const CharLM& backward,
                                                  std::u32string_view chars,
                                                  const std::vector<Span>& spans);

}  // namespace tessera::ner
