#include "tessera/pipeline/pipeline.hpp"

#include <algorithm>
#include <set>

#include "tessera/error.hpp"

namespace tessera::pipeline {

namespace {

const std::map<std::string, std::vector<std::string>>& prerequisites() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"tokenize", {}},
      {"mwt", {"tokenize"}},
      {"pos", {"tokenize"}},
      {"lemma", {"tokenize", "pos"}},
      {"depparse", {"tokenize", "pos", "lemma"}},
      {"ner", {"tokenize"}},
  };
  return table;
}

template <typename Model>
std::shared_ptr<const Model> load(const std::string& path) {
  return std::make_shared<const Model>(Model::load(path));
}

}  // namespace

std::string join(const std::vector<std::string>& items, const std::string& separator) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? separator : "") + items[i];
  return out;
}

std::vector<std::string> split_processors(const std::string& list) {
  std::vector<std::string> out;
  std::string current;
  for (char c : list + ",") {
    if (c == ',') {
      if (!current.empty()) out.push_back(current);
      current.clear();
    } else if (c != ' ' && c != '\t') {
      current += c;
    }
  }
  return out;
}

std::vector<std::string> resolve_processors(const std::vector<std::string>& requested, bool mwt_flagged) {
  std::set<std::string> wanted;
  for (const auto& p : requested) {
    if (!prerequisites().count(p)) {
      throw ConfigError("unknown processor '" + p + "'; supported processors: " + join(kProcessors, ", "));
    }
    wanted.insert(p);
  }
  std::vector<std::string> missing;
  auto need = [&](const std::string& p) {
    if (!wanted.count(p) && std::find(missing.begin(), missing.end(), p) == missing.end()) missing.push_back(p);
  };
  for (const auto& p : wanted) {
    for (const auto& q : prerequisites().at(p)) need(q);
    if (mwt_flagged && (p == "pos" || p == "lemma" || p == "depparse")) need("mwt");
  }
  if (!missing.empty()) {
    std::vector<std::string> ordered;
    for (const auto& p : kProcessors)
      if (std::find(missing.begin(), missing.end(), p) != missing.end()) ordered.push_back(p);
    throw ConfigError("processors '" + join(requested) + "' are missing prerequisites: " + join(ordered, ", "));
  }
  std::vector<std::string> out;
  for (const auto& p : kProcessors)
    if (wanted.count(p)) out.push_back(p);
  return out;
}

bool Models::has(const std::string& processor) const {
  if (processor == "tokenize") return tokenize != nullptr;
  if (processor == "mwt") return mwt != nullptr;
  if (processor == "pos") return pos != nullptr;
  if (processor == "lemma") return lemma != nullptr;
  if (processor == "depparse") return depparse != nullptr;
  if (processor == "ner") return ner != nullptr;
  return false;
}

Pipeline::Pipeline(Models models) : models_(std::move(models)) {
  if (!models_.tokenize) throw Error("a pipeline needs the tokenize processor");
  std::vector<std::string> present;
  for (const auto& p : kProcessors)
    if (models_.has(p)) present.push_back(p);
  processors_ = resolve_processors(present, models_.tokenize && models_.tokenize->flags_mwt());
}

Pipeline Pipeline::build(const PipelineConfig& config, const Registry& registry) {
  if (config.device != "cpu") throw ConfigError("unsupported device '" + config.device + "'; only cpu is available");
  std::vector<std::string> requested = config.processors;
  if (requested.empty()) {
    const auto manifest = registry.manifest(config.language);
    for (const auto& p : kProcessors)
      if ((manifest && manifest->processors.count(p)) || config.model_paths.count(p)) requested.push_back(p);
    if (requested.empty()) {
      throw ModelUnavailable("no models installed for language '" + config.language + "'; run tessera models fetch --lang " +
                  config.language + " --source <archive, directory or URL>");
    }
  }
  // Validate names and the static closure before loading anything.
  const auto order = resolve_processors(requested, false);
  auto path_of = [&](const std::string& p) {
    const auto it = config.model_paths.find(p);
    return it != config.model_paths.end() ? it->second : registry.model_path(config.language, p).string();
  };
  Models m;
  for (const auto& p : order) {
    const std::string path = path_of(p);
    if (p == "tokenize") m.tokenize = load<tokenize::Tokenizer>(path);
    if (p == "mwt") m.mwt = load<mwt::Expander>(path);
    if (p == "pos") m.pos = load<pos::Tagger>(path);
    if (p == "lemma") m.lemma = load<lemma::Lemmatizer>(path);
    if (p == "depparse") m.depparse = load<depparse::Parser>(path);
    if (p == "ner") m.ner = load<ner::NerTagger>(path);
  }
  return Pipeline(std::move(m));
}

Document Pipeline::run(const std::string& text) const {
  Document doc = models_.tokenize->tokenize(text);
  annotate(doc);
  return doc;
}

void Pipeline::annotate(Document& doc) const {
  if (models_.mwt) {
    models_.mwt->apply(doc);
  } else {
    for (auto& s : doc.sentences)
      for (auto& t : s.tokens) t.expand = false;
  }
  if (models_.pos) models_.pos->apply(doc);
  if (models_.lemma) models_.lemma->apply(doc);
  if (models_.depparse) models_.depparse->apply(doc);
  if (models_.ner) models_.ner->apply(doc);
}

}  // namespace tessera::pipeline
