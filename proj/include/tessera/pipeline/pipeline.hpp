#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tessera/depparse/parser.hpp"
#include "tessera/doc/document.hpp"
#include "tessera/lemma/lemmatizer.hpp"
#include "tessera/mwt/expander.hpp"
#include "tessera/ner/tagger.hpp"
#include "tessera/pipeline/registry.hpp"
#include "tessera/pos/tagger.hpp"
#include "tessera/tokenize/tokenizer.hpp"

namespace tessera::pipeline {

/// Unknown processor names or a processor list missing prerequisites.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Processors in execution order.
inline const std::vector<std::string> kProcessors = {"tokenize", "mwt", "pos", "lemma", "depparse", "ner"};

/// Comma-joined list, for messages.
std::string join(const std::vector<std::string>& items, const std::string& separator = ",");
/// Parses "a,b,c" (spaces allowed); "" gives an empty list.
std::vector<std::string> split_processors(const std::string& list);

struct PipelineConfig {
  std::string language;
  /// Empty means every processor installed for the language.
  std::vector<std::string> processors;
  /// Per-processor model file overriding the registry.
  std::map<std::string, std::string> model_paths;
  std::size_t batch_size = 32;
  std::string device = "cpu";
};

/// Throws ConfigError on an unknown processor (listing the supported
/// ones) and on a list missing prerequisites (listing them). `mwt_flagged`
/// says whether the tokenizer marks tokens for expansion, which makes mwt a
/// prerequisite of pos. Returns the processors in execution order.
std::vector<std::string> resolve_processors(const std::vector<std::string>& requested, bool mwt_flagged);

struct Models {
  std::shared_ptr<const tokenize::Tokenizer> tokenize;
  std::shared_ptr<const mwt::Expander> mwt;
  std::shared_ptr<const pos::Tagger> pos;
  std::shared_ptr<const lemma::Lemmatizer> lemma;
  std::shared_ptr<const depparse::Parser> depparse;
  std::shared_ptr<const ner::NerTagger> ner;

  bool has(const std::string& processor) const;
};

/// Immutable after construction; run() may be called concurrently.
class Pipeline {
 public:
  /// Uses exactly the processors whose models are set; validates them.
  explicit Pipeline(Models models);

  /// Loads models from the registry (or config.model_paths).
  static Pipeline build(const PipelineConfig& config, const Registry& registry);

  Document run(const std::string& text) const;
  /// Runs the processors after tokenize on an already tokenized document.
  void annotate(Document& doc) const;

  const std::vector<std::string>& processors() const { return processors_; }
  const Models& models() const { return models_; }

 private:
  Models models_;
  std::vector<std::string> processors_;
};

}  // namespace tessera::pipeline
