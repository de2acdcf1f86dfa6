#include "tessera/doc/document.hpp"

#include <algorithm>
#include <cctype>

#include "tessera/error.hpp"
#include "tessera/text/utf8.hpp"

namespace tessera {

bool CaseInsensitiveLess::operator()(const std::string& a, const std::string& b) const {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const int ca = std::tolower(static_cast<unsigned char>(a[i]));
    const int cb = std::tolower(static_cast<unsigned char>(b[i]));
    if (ca != cb) return ca < cb;
  }
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

MorphFeatures MorphFeatures::parse(std::string_view column) {
  MorphFeatures out;
  if (column.empty() || column == "_") return out;
  std::size_t pos = 0;
  while (pos <= column.size()) {
    std::size_t bar = column.find('|', pos);
    if (bar == std::string_view::npos) bar = column.size();
    const std::string_view item = column.substr(pos, bar - pos);
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == item.size()) {
      throw ParseError(0, "malformed feature '" + std::string(item) + "'");
    }
    const std::string attr(item.substr(0, eq));
    std::string_view values = item.substr(eq + 1);
    std::size_t vpos = 0;
    while (vpos <= values.size()) {
      std::size_t comma = values.find(',', vpos);
      if (comma == std::string_view::npos) comma = values.size();
      out.add(attr, std::string(values.substr(vpos, comma - vpos)));
      vpos = comma + 1;
    }
    pos = bar + 1;
  }
  return out;
}

std::string MorphFeatures::to_string() const {
  if (attrs_.empty()) return "_";
  std::string out;
  for (const auto& [attr, values] : attrs_) {
    if (!out.empty()) out += '|';
    out += attr;
    out += '=';
    bool first = true;
    for (const auto& v : values) {
      if (!first) out += ',';
      out += v;
      first = false;
    }
  }
  return out;
}

void MorphFeatures::set(const std::string& attr, const std::string& value) {
  attrs_[attr] = {value};
}

void MorphFeatures::add(const std::string& attr, const std::string& value) {
  attrs_[attr].insert(value);
}

std::optional<std::string> MorphFeatures::get(const std::string& attr) const {
  const auto it = attrs_.find(attr);
  if (it == attrs_.end()) return std::nullopt;
  std::string out;
  for (const auto& v : it->second) {
    if (!out.empty()) out += ',';
    out += v;
  }
  return out;
}

std::vector<const Word*> Sentence::words_of(const Token& token) const {
  std::vector<const Word*> out;
  for (const auto& w : words) {
    if (w.id >= token.first_word && w.id <= token.last_word) out.push_back(&w);
  }
  return out;
}

std::string Document::span(std::size_t start, std::size_t end) const {
  return utf8::substr(text, start, end);
}

std::string Document::sentence_text(const Sentence& s) const {
  return span(s.start_char(), s.end_char());
}

std::size_t Document::num_words() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.words.size();
  return n;
}

std::size_t Document::num_tokens() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens.size();
  return n;
}

std::vector<std::string> validate(const Document& doc) {
  std::vector<std::string> errors;
  const std::u32string chars = utf8::decode(doc.text);
  auto slice = [&](std::size_t a, std::size_t b) {
    return utf8::encode(std::u32string_view(chars).substr(a, b - a));
  };
  std::size_t prev_end = 0;
  bool first_sentence = true;
  for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
    const Sentence& s = doc.sentences[si];
    const std::string where = "sentence " + std::to_string(si + 1);
    if (s.tokens.empty()) {
      errors.push_back(where + ": no tokens");
      continue;
    }
    if (!first_sentence && s.start_char() < prev_end) {
      errors.push_back(where + ": overlaps previous sentence");
    }
    first_sentence = false;
    prev_end = s.end_char();

    int expected_word = 1;
    std::size_t covered = 0;
    std::size_t prev_token_end = s.start_char();
    for (const Token& t : s.tokens) {
      if (t.first_word != expected_word || t.last_word < t.first_word) {
        errors.push_back(where + ": token '" + t.surface + "' has bad id range");
      }
      expected_word = t.last_word + 1;
      covered += static_cast<std::size_t>(t.last_word - t.first_word + 1);
      if (t.end_char <= t.start_char || t.end_char > chars.size()) {
        errors.push_back(where + ": token '" + t.surface + "' has bad offsets");
        continue;
      }
      if (t.start_char < prev_token_end) {
        errors.push_back(where + ": token '" + t.surface + "' overlaps");
      }
      prev_token_end = t.end_char;
      if (slice(t.start_char, t.end_char) != t.surface) {
        errors.push_back(where + ": token '" + t.surface + "' does not match text");
      }
      if (!t.is_mwt()) {
        for (const auto& w : s.words) {
          if (w.id == t.first_word && w.form != t.surface) {
            errors.push_back(where + ": word form differs from token '" + t.surface + "'");
          }
        }
      }
    }
    if (covered != s.words.size()) {
      errors.push_back(where + ": token ranges do not cover words");
    }
    bool any_head = false;
    int roots = 0;
    const int n = static_cast<int>(s.words.size());
    for (int i = 0; i < n; ++i) {
      const Word& w = s.words[static_cast<std::size_t>(i)];
      if (w.id != i + 1) errors.push_back(where + ": word ids not contiguous");
      if (!w.head) continue;
      any_head = true;
      if (*w.head == 0) ++roots;
      if (*w.head == w.id) errors.push_back(where + ": self-loop at word " + std::to_string(w.id));
      if (*w.head < 0 || *w.head > n) errors.push_back(where + ": head out of range");
      if (w.deprel && ((*w.head == 0) != (*w.deprel == "root"))) {
        errors.push_back(where + ": root/deprel mismatch at word " + std::to_string(w.id));
      }
    }
    if (any_head && roots != 1) {
      errors.push_back(where + ": expected exactly one root, found " + std::to_string(roots));
    }
    for (const auto& e : s.entities) {
      if (e.end_char > chars.size() || e.end_char <= e.start_char ||
          slice(e.start_char, e.end_char) != e.text) {
        errors.push_back(where + ": entity '" + e.text + "' does not match text");
      }
    }
  }
  return errors;
}

void assign_identity_words(Sentence& sentence) {
  sentence.words.clear();
  int id = 1;
  for (auto& t : sentence.tokens) {
    t.first_word = t.last_word = id;
    Word w;
    w.id = id;
    w.form = t.surface;
    sentence.words.push_back(std::move(w));
    ++id;
  }
}

void apply_expansions(Sentence& sentence,
                      const std::vector<std::vector<std::string>>& expansions) {
  require(expansions.size() == sentence.tokens.size(), "one expansion per token required");
  std::vector<Word> words;
  int id = 1;
  for (std::size_t i = 0; i < expansions.size(); ++i) {
    require(!expansions[i].empty(), "expansion must contain at least one word");
    Token& t = sentence.tokens[i];
    t.first_word = id;
    for (const auto& form : expansions[i]) {
      Word w;
      w.id = id++;
      w.form = form;
      words.push_back(std::move(w));
    }
    t.last_word = id - 1;
    t.expand = false;
  }
  sentence.words = std::move(words);
}

}  // namespace tessera
