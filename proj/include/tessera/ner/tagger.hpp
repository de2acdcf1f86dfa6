#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "tessera/doc/bio.hpp"
#include "tessera/doc/document.hpp"
#include "tessera/ner/charlm.hpp"
#include "tessera/nn/layers.hpp"
#include "tessera/nn/vocab.hpp"

namespace tessera::ner {

struct Config {
  std::size_t word_dim = 50;
  std::size_t hidden = 64;
  double dropout = 0.33;
  std::size_t epochs = 30;
  double learning_rate = 3e-3;
  std::uint64_t seed = 1;
  CharLmConfig charlm;

  nlohmann::json to_json() const;
  static Config from_json(const nlohmann::json& j);
};

/// Tagged sentences (BIO or BIOES) from the token surfaces and entities of
/// annotated documents. Sentences without entities contribute all-`O` tags.
std::vector<bio::TaggedSentence> tagged_sentences(const std::vector<Document>& corpus);

/// Language model training text: sentences in the same padded form the
/// tagger reads, concatenated.
std::u32string charlm_text(const std::vector<bio::TaggedSentence>& data);

/// One-layer BiLSTM over [frozen char-LM context; word embedding] with a
/// linear-chain CRF over BIOES tags.
class NerTagger {
 public:
  NerTagger() = default;
  NerTagger(const std::vector<bio::TaggedSentence>& data, CharLM forward, CharLM backward,
            const Config& config);

  /// Trains the language models on the training text first when none are given.
  static NerTagger train(const std::vector<bio::TaggedSentence>& data, const Config& config,
                         std::ostream* log = nullptr);
  static NerTagger train(const std::vector<bio::TaggedSentence>& data, CharLM forward, CharLM backward,
                         const Config& config, std::ostream* log = nullptr);

  void save(const std::string& path) const;
  /// Refuses files whose embedded language models do not match their hashes.
  static NerTagger load(const std::string& path);

  /// Per-word inputs: char-LM context (constant) followed by the word embedding.
  std::vector<nn::Expr> inputs(nn::Graph& g, const std::vector<std::string>& words,
                               const std::vector<std::vector<double>>* context = nullptr) const;
  nn::Expr emissions(nn::Graph& g, const std::vector<std::string>& words,
                     const std::vector<std::vector<double>>* context = nullptr) const;
  /// CRF negative log-likelihood of `tags` (BIO or BIOES).
  nn::Expr loss(nn::Graph& g, const std::vector<std::string>& words, const std::vector<std::string>& tags,
                const std::vector<std::vector<double>>* context = nullptr) const;

  /// Repaired BIOES tags for `words`.
  std::vector<std::string> predict_tags(const std::vector<std::string>& words) const;
  /// Entities over the tokens of `sentence`; `text` is the document text.
  std::vector<Entity> predict_entities(const Sentence& sentence, std::u32string_view text) const;
  void apply(Document& doc) const;

  std::vector<std::vector<double>> context(const std::vector<std::string>& words) const;

  const nn::Vocab& tags() const { return tags_; }
  nn::ParameterSet& params() { return params_; }
  const CharLM& forward_lm() const { return forward_; }
  const CharLM& backward_lm() const { return backward_; }

 private:
  void init(const std::vector<bio::TaggedSentence>& data);
  void bind();

  Config config_;
  CharLM forward_;
  CharLM backward_;
  nn::Vocab words_;
  nn::Vocab tags_{false};
  nn::ParameterSet params_;
  nn::Parameter* word_embed_ = nullptr;
  nn::BiLstm encoder_;
  nn::Linear output_;
  nn::Parameter* transitions_ = nullptr;
  nn::Parameter* begin_ = nullptr;
  nn::Parameter* end_ = nullptr;
};

}  // namespace tessera::ner
