#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "tessera/doc/bio.hpp"
#include "tessera/doc/document.hpp"

namespace tessera::eval {

/// Percentages in [0, 100], kept at full precision; reports round to 2 decimals.
struct Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t correct = 0;
  std::size_t system = 0;
  std::size_t gold = 0;

  static Score from_counts(std::size_t correct, std::size_t system, std::size_t gold);
  static Score from_counts(std::size_t system_correct, std::size_t gold_correct, std::size_t system,
                           std::size_t gold);
};

inline const std::vector<std::string> kUdMetrics = {"Tokens", "Sentences", "Words",  "UPOS", "XPOS",
                                                    "UFeats", "Lemmas",    "UAS",    "LAS"};
inline constexpr const char* kEntities = "Entities";

/// Metric name -> score. Holds the nine UD metrics, plus "Entities" when
/// either side carries entities.
using MetricReport = std::map<std::string, Score>;

/// Aligns system and gold over their whitespace-free character streams and
/// scores every UD metric. Throws tessera::Error naming the first divergent
/// offset when the streams differ.
MetricReport align_and_score(const std::vector<Document>& system, const std::vector<Document>& gold);
MetricReport align_and_score(const Document& system, const Document& gold);

/// Entity micro-P/R/F1; an entity is correct iff (type, start, end) match
/// a not yet matched gold entity of the same document.
Score score_ner(const std::vector<std::vector<Entity>>& system, const std::vector<std::vector<Entity>>& gold);
Score score_ner(const std::vector<Entity>& system, const std::vector<Entity>& gold);
/// Entity scores over BIO/BIOES column files. Word sequences must agree.
Score score_ner(const std::vector<bio::TaggedSentence>& system, const std::vector<bio::TaggedSentence>& gold);

/// Unweighted mean of precision, recall and F1 per metric over the reports
/// that contain it. Throws ContractViolation on an empty list.
MetricReport macro_average(const std::vector<MetricReport>& reports);

/// Value rounded to 2 decimals, as reported.
double rounded(double value);

nlohmann::json to_json(const MetricReport& report);
/// One line per metric: name, precision, recall, F1 (2 decimals).
std::string format_text(const MetricReport& report);

}  // namespace tessera::eval
