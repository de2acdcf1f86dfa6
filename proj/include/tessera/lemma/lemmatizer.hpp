#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tessera/doc/document.hpp"
#include "tessera/seq2seq/seq2seq.hpp"

namespace tessera::lemma {

enum class Edit : int { Identity = 0, Lowercase = 1, Seq2Seq = 2 };

/// Identity when lemma == form, Lowercase when lemma == lowercase(form) != form.
Edit edit_class(const std::string& form, const std::string& lemma);

/// Most frequent gold lemma per (form, UPOS) and per form; ties go to the
/// lemma seen first.
struct Dictionary {
  std::map<std::pair<std::string, std::string>, std::string> by_form_upos;
  std::map<std::string, std::string> by_form;

  /// (form, upos) first, then form alone.
  std::optional<std::string> lookup(const std::string& form, const std::optional<std::string>& upos) const;

  nlohmann::json to_json() const;
  static Dictionary from_json(const nlohmann::json& j);
};

Dictionary build_dictionary(const std::vector<Document>& corpus);

struct Config {
  seq2seq::Config model;
  std::size_t epochs = 30;
  double learning_rate = 3e-3;
  std::uint64_t seed = 1;

  static Config from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct Example {
  seq2seq::Symbols source;  // UPOS token then characters
  seq2seq::Symbols target;
  Edit edit = Edit::Identity;
};

enum class Route { Dictionary, Identity, Lowercase, Seq2Seq, Fallback };

/// Dictionary lookup with a seq2seq back-off. An edit classifier on the
/// encoder summary short-cuts identity copies and lowercasing.
class Lemmatizer {
 public:
  Lemmatizer() = default;
  Lemmatizer(const std::vector<Document>& corpus, const Config& config);

  static Lemmatizer train(const std::vector<Document>& corpus, const Config& config,
                          std::ostream* log = nullptr);
  void save(const std::string& path) const;
  static Lemmatizer load(const std::string& path);

  /// One example per distinct (form, UPOS, lemma) triple.
  std::vector<Example> examples(const std::vector<Document>& corpus) const;
  static seq2seq::Symbols source_symbols(const std::string& form, const std::optional<std::string>& upos);

  /// Edit-classifier cross-entropy plus the seq2seq loss.
  nn::Expr loss(nn::Graph& g, const Example& ex) const;

  Edit classify(const std::string& form, const std::optional<std::string>& upos) const;
  std::string lemmatize(const std::string& form, const std::optional<std::string>& upos,
                        Route* route = nullptr) const;
  void apply(Document& doc) const;

  const Dictionary& dictionary() const { return dict_; }
  nn::ParameterSet& params() { return params_; }

 private:
  void bind(const nlohmann::json& model_meta);

  Config config_;
  Dictionary dict_;
  nn::ParameterSet params_;
  seq2seq::Model model_;
  nn::Linear classifier_;
};

}  // namespace tessera::lemma
