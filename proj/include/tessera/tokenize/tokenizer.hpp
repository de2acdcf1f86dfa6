#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "tessera/doc/document.hpp"
#include "tessera/nn/layers.hpp"
#include "tessera/nn/vocab.hpp"

namespace tessera::tokenize {

/// Per-character label. Sentence ends are token ends; the MWT variants mark
/// the last character of a token that needs expansion.
enum class CharLabel : int { Inside = 0, TokenEnd = 1, SentEnd = 2, MwtTokenEnd = 3, MwtSentEnd = 4 };
inline constexpr std::size_t kNumLabels = 5;

const char* label_name(CharLabel label);

/// Labels for every code point of `doc.text`. Characters outside tokens are
/// Inside. Throws ContractViolation when a token's offsets do not reproduce
/// its surface.
std::vector<CharLabel> derive_char_labels(const Document& doc);

/// Rebuilds tokens and sentences from labels over `text`. Whitespace always
/// ends an open token and is never part of one; labels on whitespace are
/// ignored. Material after the last sentence end becomes a final token and
/// sentence. Tokens get identity words; MWT-labelled tokens get `expand`.
Document segment(const std::string& text, const std::vector<CharLabel>& labels);

/// Splits `text` into paragraph chunks at blank lines. Returns code-point
/// [begin, end) ranges covering every non-blank-line character.
std::vector<std::pair<std::size_t, std::size_t>> paragraphs(const std::u32string& text);

struct Config {
  std::size_t embed_dim = 32;
  std::size_t hidden = 64;
  std::size_t layers = 1;
  double dropout = 0.33;
  std::size_t epochs = 30;
  double learning_rate = 3e-3;
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
  static Config from_json(const nlohmann::json& j);
};

class Tokenizer {
 public:
  Tokenizer() = default;
  /// Fresh untrained model over the characters of `corpus`.
  Tokenizer(const std::vector<Document>& corpus, const Config& config);

  /// Throws tessera::Error on an empty corpus.
  static Tokenizer train(const std::vector<Document>& corpus, const Config& config,
                         std::ostream* log = nullptr);

  void save(const std::string& path) const;
  static Tokenizer load(const std::string& path);

  /// Sum of per-character cross-entropies of one chunk.
  nn::Expr loss(nn::Graph& g, const std::u32string& chars, const std::vector<CharLabel>& gold) const;

  /// Per-character label scores (n x 5) for one chunk.
  std::vector<std::vector<double>> scores(const std::u32string& chars) const;

  /// Argmax labels over the whole text, chunked at blank lines; the last
  /// character of each chunk is forced to end a sentence.
  std::vector<CharLabel> predict(const std::string& text) const;

  Document tokenize(const std::string& text) const;

  nn::ParameterSet& params() { return params_; }
  const Config& config() const { return config_; }
  /// Whether the training data contained multi-word tokens, i.e. whether
  /// output tokens may await MWT expansion.
  bool flags_mwt() const { return flags_mwt_; }

 private:
  std::vector<nn::Expr> logits(nn::Graph& g, const std::u32string& chars) const;
  void bind();

  Config config_;
  nn::Vocab chars_;
  bool flags_mwt_ = false;
  nn::ParameterSet params_;
  nn::Parameter* embed_ = nullptr;
  nn::BiLstm encoder_;
  nn::Linear output_;
};

}  // namespace tessera::tokenize
