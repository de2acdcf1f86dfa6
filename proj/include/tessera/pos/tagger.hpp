#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tessera/doc/document.hpp"
#include "tessera/nn/layers.hpp"
#include "tessera/nn/vocab.hpp"

namespace tessera::pos {

inline constexpr const char* kNone = "NONE";

struct Config {
  std::size_t word_dim = 50;
  std::size_t char_dim = 16;
  std::size_t char_hidden = 32;
  std::size_t hidden = 64;
  std::size_t layers = 1;
  std::size_t upos_dim = 16;
  double dropout = 0.33;
  std::size_t epochs = 30;
  double learning_rate = 3e-3;
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
  static Config from_json(const nlohmann::json& j);
};

struct Tags {
  std::string upos;
  std::optional<std::string> xpos;
  std::optional<MorphFeatures> feats;

  friend bool operator==(const Tags&, const Tags&) = default;
};

/// Gold targets for one sentence. Missing XPOS is skipped in the loss;
/// missing FEATS count as all-NONE when the corpus annotates features at all.
struct Example {
  std::vector<std::string> forms;
  std::vector<std::size_t> upos;
  std::vector<std::optional<std::size_t>> xpos;
  // feats[word][attribute index] = value index (0 = NONE); empty = skipped
  std::vector<std::vector<std::size_t>> feats;
};

/// UPOS classifier over a shared sentence BiLSTM; XPOS and each UFeats
/// attribute are biaffine classifiers over (sentence state, UPOS embedding).
class Tagger {
 public:
  Tagger() = default;
  /// Untrained model with inventories collected from `corpus`.
  Tagger(const std::vector<Document>& corpus, const Config& config);

  static Tagger train(const std::vector<Document>& corpus, const Config& config,
                      std::ostream* log = nullptr);
  void save(const std::string& path) const;
  static Tagger load(const std::string& path);

  std::vector<Example> examples(const std::vector<Document>& corpus) const;

  /// Joint loss with gold UPOS used for conditioning.
  nn::Expr loss(nn::Graph& g, const Example& ex) const;

  struct Logits {
    std::vector<nn::Expr> upos;
    std::vector<nn::Expr> xpos;                 // empty without an XPOS inventory
    std::vector<std::vector<nn::Expr>> feats;   // [word][attribute]
  };
  /// Conditioning uses `condition` when given (one UPOS index per word),
  /// otherwise the argmax UPOS.
  Logits logits(nn::Graph& g, const std::vector<std::string>& forms,
                const std::optional<std::vector<std::size_t>>& condition = std::nullopt) const;

  /// Requires a non-empty sentence.
  std::vector<Tags> tag(const std::vector<std::string>& forms) const;
  void apply(Document& doc) const;

  const nn::Vocab& upos_vocab() const { return upos_; }
  const nn::Vocab& xpos_vocab() const { return xpos_; }
  const std::map<std::string, nn::Vocab>& feat_vocabs() const { return feats_; }
  nn::ParameterSet& params() { return params_; }
  /// Biaffine heads for XPOS (first) and each attribute, for wiring tests.
  std::vector<nn::Biaffine> conditioned_heads() const;

 private:
  void bind();
  std::vector<nn::Expr> encode(nn::Graph& g, const std::vector<std::string>& forms) const;

  Config config_;
  nn::Vocab words_;
  nn::Vocab chars_;
  nn::Vocab upos_{false};
  nn::Vocab xpos_{false};
  std::map<std::string, nn::Vocab> feats_;  // value inventories; index 0 = NONE
  bool has_feats_ = false;
  nn::ParameterSet params_;

  nn::Parameter* word_embed_ = nullptr;
  nn::Parameter* char_embed_ = nullptr;
  nn::Parameter* upos_embed_ = nullptr;
  nn::BiLstm char_encoder_;
  nn::BiLstm encoder_;
  nn::Linear upos_head_;
  nn::Biaffine xpos_head_;
  std::vector<nn::Biaffine> feat_heads_;
};

}  // namespace tessera::pos
