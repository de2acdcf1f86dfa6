#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tessera/depparse/mst.hpp"
#include "tessera/doc/document.hpp"
#include "tessera/nn/layers.hpp"
#include "tessera/nn/vocab.hpp"

namespace tessera::depparse {

/// Bucket of a linear distance |d - h| >= 1: {1, 2, 3, 4, 5-8, 9+} -> 0..5.
std::size_t distance_bucket(std::size_t distance);
inline constexpr std::size_t kDistanceBuckets = 6;

struct Config {
  std::size_t word_dim = 50;
  std::size_t upos_dim = 16;
  std::size_t feat_dim = 16;
  std::size_t hidden = 64;
  std::size_t layers = 2;
  std::size_t arc_dim = 64;
  std::size_t label_dim = 32;
  double dropout = 0.33;
  // Linearization and distance objectives.
  bool aux = true;
  double linearization_weight = 0.1;
  double distance_weight = 0.1;
  std::size_t epochs = 30;
  double learning_rate = 2e-3;
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
  static Config from_json(const nlohmann::json& j);
};

struct Example {
  std::vector<std::string> forms;
  std::vector<std::optional<std::string>> upos;
  std::vector<std::vector<std::string>> feats;  // "Attr=Val" items
  std::vector<int> heads;                       // heads[d-1]
  std::vector<std::size_t> labels;              // relation index per word
};

/// Input features of one sentence.
Example features_of(const Sentence& s);

/// Biaffine arc and label scorer over a BiLSTM encoding of
/// [ROOT, w1..wn]. Arc score(h, d) = a_h' U b_d + u'a_h + v'b_d + c with
/// head and dependent projections a, b.
class Parser {
 public:
  Parser() = default;
  Parser(const std::vector<Document>& corpus, const Config& config);

  static Parser train(const std::vector<Document>& corpus, const Config& config,
                      std::ostream* log = nullptr);
  void save(const std::string& path) const;
  static Parser load(const std::string& path);

  std::vector<Example> examples(const std::vector<Document>& corpus) const;

  /// Arc cross-entropy over candidate heads + label cross-entropy on gold
  /// arcs + weighted auxiliary losses when enabled.
  nn::Expr loss(nn::Graph& g, const Example& ex) const;
  /// Auxiliary terms only (already weighted).
  nn::Expr aux_loss(nn::Graph& g, const Example& ex) const;

  ArcScores score_arcs(const Example& ex) const;
  /// Heads (heads[d-1]) and relations for one sentence.
  std::pair<std::vector<int>, std::vector<std::string>> parse(const Example& ex) const;
  void apply(Document& doc) const;

  const nn::Vocab& relations() const { return relations_; }
  nn::ParameterSet& params() { return params_; }
  const Config& config() const { return config_; }

 private:
  struct Encoded {
    std::vector<nn::Expr> arc_head, arc_dep, label_head, label_dep;
  };
  Encoded encode(nn::Graph& g, const Example& ex) const;
  nn::Expr arc_score(nn::Graph& g, const Encoded& e, std::size_t h, std::size_t d,
                     std::vector<nn::Expr>& projected) const;
  void bind();

  Config config_;
  nn::Vocab words_;
  nn::Vocab upos_;
  nn::Vocab feats_;
  nn::Vocab relations_{false};
  nn::ParameterSet params_;

  nn::Parameter* word_embed_ = nullptr;
  nn::Parameter* upos_embed_ = nullptr;
  nn::Parameter* feat_embed_ = nullptr;
  nn::Parameter* root_ = nullptr;
  nn::BiLstm encoder_;
  nn::Linear arc_head_, arc_dep_, label_head_, label_dep_;
  nn::Parameter* arc_u_ = nullptr;
  nn::Parameter* arc_head_bias_ = nullptr;
  nn::Parameter* arc_dep_bias_ = nullptr;
  nn::Biaffine label_;
  nn::Biaffine linearization_;
  nn::Biaffine distance_;
};

}  // namespace tessera::depparse
