#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tessera/doc/document.hpp"
#include "tessera/eval/evaluator.hpp"

namespace tessera::pipeline {

inline constexpr double kDevFraction = 0.2;
inline constexpr std::uint64_t kDevSplitSeed = 20200101;

/// Copy of `doc` keeping only the sentences at `indices` (ascending). Text
/// is rebuilt as the kept sentence texts joined by single spaces and all
/// offsets are shifted to match.
Document extract_sentences(const Document& doc, const std::vector<std::size_t>& indices);

/// Holds out round(fraction * #sentences) sentences, chosen by a seeded
/// shuffle, as development data. Sentence order is kept within each side;
/// documents with no sentence on a side are dropped from it.
std::pair<std::vector<Document>, std::vector<Document>> split_dev(const std::vector<Document>& corpus,
                                                                   double fraction = kDevFraction,
                                                                   std::uint64_t seed = kDevSplitSeed);

/// Training-CLI request. `config` carries the processor's hyper-parameters
/// and optionally "model_file" (default "<processor>.model").
struct TrainRequest {
  std::string processor;
  std::string train_file;
  std::optional<std::string> eval_file;
  std::optional<std::string> gold_file;
  std::optional<std::string> output_file;
  nlohmann::json config = nlohmann::json::object();
};

struct TrainResult {
  std::string model_file;
  eval::MetricReport report;
  std::size_t train_sentences = 0;
  std::size_t dev_sentences = 0;
};

/// Trains, saves, annotates the development input (eval_file, else the
/// held-out split) and scores it against gold_file (else the same data).
/// NER accepts BIO column files (`.bio`/`.iob`/`.txt`) or CoNLL-U.
TrainResult train_processor(const TrainRequest& request, std::ostream* log = nullptr);

/// Whether a path names a BIO column file by extension.
bool is_bio_file(const std::string& path);

}  // namespace tessera::pipeline
