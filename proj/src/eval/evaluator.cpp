#include "tessera/eval/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <tuple>

#include "tessera/error.hpp"
#include "tessera/text/utf8.hpp"

namespace tessera::eval {

namespace {

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  friend auto operator<=>(const Span&, const Span&) = default;
};

// One word of the flattened corpus. MWT words carry their token's span.
struct FlatWord {
  const Word* word = nullptr;
  Span span;
  bool multiword = false;
  std::size_t sentence_base = 0;  // flat index of word 1 of its sentence, minus 1
};

struct Flat {
  std::u32string stream;
  std::vector<Span> tokens;
  std::vector<Span> sentences;
  std::vector<FlatWord> words;
};

Flat flatten(const std::vector<Document>& docs) {
  Flat f;
  for (const auto& doc : docs)
    for (const auto& s : doc.sentences) {
      if (s.tokens.empty()) continue;
      const std::size_t sentence_start = f.stream.size();
      const std::size_t base = f.words.size();
      for (const auto& t : s.tokens) {
        const std::size_t start = f.stream.size();
        for (char32_t c : utf8::decode(t.surface))
          if (!utf8::is_space(c)) f.stream += c;
        const Span span{start, f.stream.size()};
        f.tokens.push_back(span);
        for (const Word* w : s.words_of(t)) f.words.push_back({w, span, t.is_mwt(), base});
      }
      f.sentences.push_back({sentence_start, f.stream.size()});
    }
  return f;
}

void check_streams(const Flat& system, const Flat& gold) {
  const auto& a = system.stream;
  const auto& b = gold.stream;
  if (a == b) return;
  const std::size_t n = std::min(a.size(), b.size());
  std::size_t i = 0;
  while (i < n && a[i] == b[i]) ++i;
  auto around = [&](const std::u32string& s) { return utf8::encode(s.substr(i, 20)); };
  throw Error("system and gold texts differ at non-whitespace character " + std::to_string(i) + ": system '" +
              around(a) + "' vs gold '" + around(b) + "'");
}

std::size_t count_shared(const std::vector<Span>& system, const std::vector<Span>& gold) {
  const std::set<Span> g(gold.begin(), gold.end());
  return static_cast<std::size_t>(std::count_if(system.begin(), system.end(), [&](const Span& s) { return g.count(s); }));
}

bool beyond_end(const std::vector<FlatWord>& words, std::size_t i, std::size_t end) {
  return i >= words.size() || words[i].span.start >= end;
}

std::size_t extend_end(const FlatWord& w, std::size_t end) {
  return w.multiword && w.span.end > end ? w.span.end : end;
}

std::string lower_form(const FlatWord& w) { return utf8::to_lower(w.word->form); }

// gold word index -> system word index.
std::vector<std::optional<std::size_t>> align_words(const std::vector<FlatWord>& sys, const std::vector<FlatWord>& gold) {
  std::vector<std::optional<std::size_t>> aligned(gold.size());
  std::size_t gi = 0, si = 0;
  while (gi < gold.size() && si < sys.size()) {
    if (gold[gi].multiword || sys[si].multiword) {
      // Minimal region that starts at a multiword token and ends where
      // neither side has a word starting before the region end.
      std::size_t end = 0;
      if (gold[gi].multiword) {
        end = gold[gi].span.end;
        if (!sys[si].multiword && sys[si].span.start < gold[gi].span.start) ++si;
      } else {
        end = sys[si].span.end;
        if (!gold[gi].multiword && gold[gi].span.start < sys[si].span.start) ++gi;
      }
      const std::size_t gs = gi, ss = si;
      while (!beyond_end(gold, gi, end) || !beyond_end(sys, si, end)) {
        if (gi < gold.size() && (si >= sys.size() || gold[gi].span.start <= sys[si].span.start)) {
          end = extend_end(gold[gi], end);
          ++gi;
        } else {
          end = extend_end(sys[si], end);
          ++si;
        }
      }
      // Leftmost longest common subsequence of lowercased forms.
      const std::size_t ng = gi - gs, ns = si - ss;
      std::vector<std::vector<std::size_t>> lcs(ng + 1, std::vector<std::size_t>(ns + 1, 0));
      for (std::size_t g = ng; g-- > 0;)
        for (std::size_t s = ns; s-- > 0;) {
          if (lower_form(gold[gs + g]) == lower_form(sys[ss + s])) lcs[g][s] = 1 + lcs[g + 1][s + 1];
          lcs[g][s] = std::max({lcs[g][s], lcs[g + 1][s], lcs[g][s + 1]});
        }
      std::size_t g = 0, s = 0;
      while (g < ng && s < ns) {
        if (lower_form(gold[gs + g]) == lower_form(sys[ss + s])) {
          aligned[gs + g] = ss + s;
          ++g;
          ++s;
        } else if (lcs[g][s] == lcs[g + 1][s]) {
          ++g;
        } else {
          ++s;
        }
      }
    } else if (gold[gi].span == sys[si].span) {
      aligned[gi++] = si++;
    } else if (gold[gi].span.start <= sys[si].span.start) {
      ++gi;
    } else {
      ++si;
    }
  }
  return aligned;
}

std::string feats_string(const Word& w) { return w.feats ? w.feats->to_string() : "_"; }

// Flat index of a word's head, or nullopt for the root; unset heads map to
// a sentinel that only matches another unset head.
constexpr std::size_t kUnsetHead = static_cast<std::size_t>(-1);
std::optional<std::size_t> head_index(const FlatWord& w) {
  if (!w.word->head) return kUnsetHead;
  if (*w.word->head == 0) return std::nullopt;
  return w.sentence_base + static_cast<std::size_t>(*w.word->head) - 1;
}

template <typename Pred>
std::size_t count_aligned(const std::vector<std::optional<std::size_t>>& aligned, Pred pred) {
  std::size_t n = 0;
  for (std::size_t g = 0; g < aligned.size(); ++g)
    if (aligned[g] && pred(g, *aligned[g])) ++n;
  return n;
}

bool has_entities(const std::vector<Document>& docs) {
  for (const auto& d : docs)
    for (const auto& s : d.sentences)
      if (!s.entities.empty()) return true;
  return false;
}

std::vector<std::vector<Entity>> entities_by_document(const std::vector<Document>& docs) {
  std::vector<std::vector<Entity>> out;
  for (const auto& d : docs) {
    out.emplace_back();
    for (const auto& s : d.sentences) out.back().insert(out.back().end(), s.entities.begin(), s.entities.end());
  }
  return out;
}

}  // namespace

Score Score::from_counts(std::size_t correct, std::size_t system, std::size_t gold) {
  return from_counts(correct, correct, system, gold);
}

Score Score::from_counts(std::size_t system_correct, std::size_t gold_correct, std::size_t system, std::size_t gold) {
  Score s;
  s.correct = system_correct;
  s.system = system;
  s.gold = gold;
  s.precision = system > 0 ? 100.0 * static_cast<double>(system_correct) / static_cast<double>(system) : 0.0;
  s.recall = gold > 0 ? 100.0 * static_cast<double>(gold_correct) / static_cast<double>(gold) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

MetricReport align_and_score(const std::vector<Document>& system, const std::vector<Document>& gold) {
  const Flat sys = flatten(system);
  const Flat gld = flatten(gold);
  check_streams(sys, gld);

  MetricReport r;
  r["Tokens"] = Score::from_counts(count_shared(sys.tokens, gld.tokens), sys.tokens.size(), gld.tokens.size());
  r["Sentences"] =
      Score::from_counts(count_shared(sys.sentences, gld.sentences), sys.sentences.size(), gld.sentences.size());

  const auto aligned = align_words(sys.words, gld.words);
  std::vector<std::optional<std::size_t>> gold_of(sys.words.size());
  for (std::size_t g = 0; g < aligned.size(); ++g)
    if (aligned[g]) gold_of[*aligned[g]] = g;

  const std::size_t ns = sys.words.size(), ng = gld.words.size();
  auto score = [&](auto pred) { return Score::from_counts(count_aligned(aligned, pred), ns, ng); };
  auto word = [](const std::vector<FlatWord>& ws, std::size_t i) -> const Word& { return *ws[i].word; };

  r["Words"] = score([](std::size_t, std::size_t) { return true; });
  r["UPOS"] = score([&](std::size_t g, std::size_t s) { return word(gld.words, g).upos == word(sys.words, s).upos; });
  r["XPOS"] = score([&](std::size_t g, std::size_t s) { return word(gld.words, g).xpos == word(sys.words, s).xpos; });
  r["UFeats"] = score([&](std::size_t g, std::size_t s) {
    return feats_string(word(gld.words, g)) == feats_string(word(sys.words, s));
  });
  r["Lemmas"] = score([&](std::size_t g, std::size_t s) { return word(gld.words, g).lemma == word(sys.words, s).lemma; });
  auto head_ok = [&](std::size_t g, std::size_t s) {
    const auto gh = head_index(gld.words[g]);
    const auto sh = head_index(sys.words[s]);
    if (!gh || !sh) return !gh && !sh;
    if (*gh == kUnsetHead || *sh == kUnsetHead) return *gh == *sh;
    return aligned[*gh] && *aligned[*gh] == *sh;
  };
  r["UAS"] = score(head_ok);
  r["LAS"] = score([&](std::size_t g, std::size_t s) {
    return head_ok(g, s) && word(gld.words, g).deprel == word(sys.words, s).deprel;
  });

  if (has_entities(system) || has_entities(gold)) {
    require(system.size() == gold.size(), "entity scoring needs the same number of documents");
    r[kEntities] = score_ner(entities_by_document(system), entities_by_document(gold));
  }
  return r;
}

MetricReport align_and_score(const Document& system, const Document& gold) {
  return align_and_score(std::vector<Document>{system}, std::vector<Document>{gold});
}

Score score_ner(const std::vector<std::vector<Entity>>& system, const std::vector<std::vector<Entity>>& gold) {
  require(system.size() == gold.size(), "entity scoring needs the same number of documents");
  std::size_t correct = 0, ns = 0, ng = 0;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    std::multiset<std::tuple<std::string, std::size_t, std::size_t>> remaining;
    for (const auto& e : gold[d]) remaining.emplace(e.type, e.start_char, e.end_char);
    ng += gold[d].size();
    ns += system[d].size();
    for (const auto& e : system[d]) {
      const auto it = remaining.find({e.type, e.start_char, e.end_char});
      if (it == remaining.end()) continue;
      remaining.erase(it);
      ++correct;
    }
  }
  return Score::from_counts(correct, ns, ng);
}

Score score_ner(const std::vector<Entity>& system, const std::vector<Entity>& gold) {
  return score_ner(std::vector<std::vector<Entity>>{system}, std::vector<std::vector<Entity>>{gold});
}

Score score_ner(const std::vector<bio::TaggedSentence>& system, const std::vector<bio::TaggedSentence>& gold) {
  if (system.size() != gold.size()) {
    throw Error("system has " + std::to_string(system.size()) + " sentences, gold has " + std::to_string(gold.size()));
  }
  // Offsets are word positions in one running sequence.
  std::vector<Entity> sys_entities, gold_entities;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (system[i].words != gold[i].words) throw Error("sentence " + std::to_string(i + 1) + ": words differ");
    std::vector<bio::Unit> units;
    for (std::size_t w = 0; w < gold[i].words.size(); ++w) {
      units.push_back({offset + w, offset + w + 1, static_cast<int>(w + 1), static_cast<int>(w + 1)});
    }
    for (const auto& [tags, out] : {std::pair{&system[i].tags, &sys_entities}, std::pair{&gold[i].tags, &gold_entities}}) {
      for (const auto& span : bio::decode_spans(*tags)) {
        out->push_back({span.type, units[span.first].start_char, units[span.last].end_char, "", 0, 0});
      }
    }
    offset += gold[i].words.size();
  }
  return score_ner(sys_entities, gold_entities);
}

MetricReport macro_average(const std::vector<MetricReport>& reports) {
  require(!reports.empty(), "macro_average needs at least one report");
  std::map<std::string, std::pair<Score, std::size_t>> sums;
  for (const auto& r : reports)
    for (const auto& [name, s] : r) {
      auto& [sum, n] = sums[name];
      sum.precision += s.precision;
      sum.recall += s.recall;
      sum.f1 += s.f1;
      sum.correct += s.correct;
      sum.system += s.system;
      sum.gold += s.gold;
      ++n;
    }
  MetricReport out;
  for (auto& [name, entry] : sums) {
    auto& [sum, n] = entry;
    const double k = static_cast<double>(n);
    sum.precision /= k;
    sum.recall /= k;
    sum.f1 /= k;
    out[name] = sum;
  }
  return out;
}

double rounded(double value) { return std::round(value * 100.0) / 100.0; }

nlohmann::json to_json(const MetricReport& report) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, s] : report) {
    j[name] = {{"precision", rounded(s.precision)},
               {"recall", rounded(s.recall)},
               {"f1", rounded(s.f1)},
               {"correct", s.correct},
               {"system", s.system},
               {"gold", s.gold}};
  }
  return j;
}

std::string format_text(const MetricReport& report) {
  std::vector<std::string> order = kUdMetrics;
  order.push_back(kEntities);
  std::string out = "Metric     | Precision |    Recall |  F1 Score\n";
  out += "-----------+-----------+-----------+-----------\n";
  char line[128];
  for (const auto& name : order) {
    const auto it = report.find(name);
    if (it == report.end()) continue;
    std::snprintf(line, sizeof line, "%-10s | %9.2f | %9.2f | %9.2f\n", name.c_str(), it->second.precision,
                  it->second.recall, it->second.f1);
    out += line;
  }
  return out;
}

}  // namespace tessera::eval
