#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "tessera/doc/document.hpp"
#include "tessera/seq2seq/seq2seq.hpp"

namespace tessera::mwt {

/// Word separator inside seq2seq targets. Never part of a word form.
inline constexpr const char* kSeparator = " ";

/// Most frequent expansion per surface form, over forms seen at least once
/// as a multi-word token. Occurrences as plain tokens count as the identity
/// expansion. Ties go to the expansion seen first.
struct Lexicon {
  std::map<std::string, std::vector<std::string>> exact;
  // Keyed by lowercased surface; expansions lowercased.
  std::map<std::string, std::vector<std::string>> lower;

  nlohmann::json to_json() const;
  static Lexicon from_json(const nlohmann::json& j);
};

Lexicon build_lexicon(const std::vector<Document>& corpus);

struct TrainConfig {
  seq2seq::Config model;
  std::size_t epochs = 40;
  double learning_rate = 3e-3;
  std::uint64_t seed = 1;

  static TrainConfig from_json(const nlohmann::json& j);
};

enum class Route { Exact, Lowercase, Model, Fallback };

class Expander {
 public:
  Expander() = default;

  /// Builds the lexicon and trains the seq2seq fallback on every multi-word
  /// token of the corpus. With zero epochs or no MWTs no model is attached.
  static Expander train(const std::vector<Document>& corpus, const TrainConfig& config,
                        std::ostream* log = nullptr);

  void save(const std::string& path) const;
  static Expander load(const std::string& path);

  /// Word forms for one token flagged for expansion. Always ≥ 1 non-empty
  /// word; falls back to the surface itself.
  std::vector<std::string> expand(const std::string& surface, Route* route = nullptr) const;

  /// Expands every token of `doc` whose `expand` flag is set and clears the
  /// flags.
  void apply(Document& doc) const;

  const Lexicon& lexicon() const { return lexicon_; }
  bool has_model() const { return has_model_; }

 private:
  Lexicon lexicon_;
  nn::ParameterSet params_;
  seq2seq::Model model_;
  bool has_model_ = false;
};

}  // namespace tessera::mwt
