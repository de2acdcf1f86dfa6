#include "tessera/doc/bio.hpp"

#include <fstream>
#include <optional>
#include <sstream>

#include "tessera/error.hpp"
#include "tessera/text/utf8.hpp"

namespace tessera::bio {

namespace {

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string with_prefix(char p, const std::string& type) {
  return std::string(1, p) + "-" + type;
}

}  // namespace

bool is_valid_tag(std::string_view tag) {
  if (tag == "O") return true;
  if (tag.size() < 3 || tag[1] != '-') return false;
  const char p = tag[0];
  return p == 'B' || p == 'I' || p == 'E' || p == 'S';
}

char prefix(std::string_view tag) { return tag.empty() ? 'O' : tag[0]; }

std::string type_of(std::string_view tag) {
  if (tag.size() < 3) return {};
  return std::string(tag.substr(2));
}

std::vector<TaggedSentence> parse(std::string_view content) {
  std::vector<TaggedSentence> out;
  TaggedSentence current;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto flush = [&] {
    if (!current.words.empty()) out.push_back(std::move(current));
    current = {};
  };
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto cols = split_ws(line);
    if (cols.empty()) {
      flush();
      continue;
    }
    if (cols.size() != 2) {
      throw ParseError(line_no, "expected 2 columns, found " + std::to_string(cols.size()));
    }
    if (!is_valid_tag(cols[1])) {
      throw ParseError(line_no, "invalid tag '" + cols[1] + "'");
    }
    current.words.push_back(cols[0]);
    current.tags.push_back(cols[1]);
  }
  flush();
  return out;
}

std::vector<TaggedSentence> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string serialize(const std::vector<TaggedSentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.words.size(); ++i) {
      out += s.words[i];
      out += ' ';
      out += s.tags[i];
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

std::vector<std::string> bio_to_bioes(const std::vector<std::string>& tags) {
  std::vector<std::string> out(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const char p = prefix(tags[i]);
    if (p == 'O') {
      out[i] = "O";
      continue;
    }
    const std::string type = type_of(tags[i]);
    const bool continues = i + 1 < tags.size() && prefix(tags[i + 1]) == 'I' &&
                           type_of(tags[i + 1]) == type;
    if (p == 'B') {
      out[i] = with_prefix(continues ? 'B' : 'S', type);
    } else if (p == 'I') {
      out[i] = with_prefix(continues ? 'I' : 'E', type);
    } else {
      out[i] = tags[i];
    }
  }
  return out;
}

std::vector<std::string> bioes_to_bio(const std::vector<std::string>& tags) {
  std::vector<std::string> out(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const char p = prefix(tags[i]);
    if (p == 'S') {
      out[i] = with_prefix('B', type_of(tags[i]));
    } else if (p == 'E') {
      out[i] = with_prefix('I', type_of(tags[i]));
    } else {
      out[i] = tags[i];
    }
  }
  return out;
}

std::vector<Span> decode_spans(const std::vector<std::string>& tags) {
  std::vector<Span> spans;
  std::optional<Span> open;
  auto close = [&] {
    if (open) spans.push_back(*open);
    open.reset();
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const char p = prefix(tags[i]);
    const std::string type = type_of(tags[i]);
    switch (p) {
      case 'B':
        close();
        open = Span{i, i, type};
        break;
      case 'I':
        if (open && open->type == type) {
          open->last = i;
        } else {
          close();
          open = Span{i, i, type};
        }
        break;
      case 'E':
        if (open && open->type == type) {
          open->last = i;
          close();
        } else {
          close();
          spans.push_back(Span{i, i, type});
        }
        break;
      case 'S':
        close();
        spans.push_back(Span{i, i, type});
        break;
      default:
        close();
        break;
    }
  }
  close();
  return spans;
}

std::vector<std::string> repair(const std::vector<std::string>& tags) {
  std::vector<std::string> out(tags.size(), "O");
  for (const auto& span : decode_spans(tags)) {
    if (span.first == span.last) {
      out[span.first] = with_prefix('S', span.type);
      continue;
    }
    out[span.first] = with_prefix('B', span.type);
    for (std::size_t i = span.first + 1; i < span.last; ++i) out[i] = with_prefix('I', span.type);
    out[span.last] = with_prefix('E', span.type);
  }
  return out;
}

std::vector<Entity> to_entities(const std::vector<Unit>& units,
                                const std::vector<std::string>& tags,
                                std::u32string_view text) {
  require(units.size() == tags.size(), "one tag per unit required");
  std::vector<Entity> out;
  for (const auto& span : decode_spans(tags)) {
    Entity e;
    e.type = span.type;
    e.start_char = units[span.first].start_char;
    e.end_char = units[span.last].end_char;
    require(e.end_char <= text.size() && e.start_char < e.end_char, "entity span out of range");
    e.text = utf8::encode(text.substr(e.start_char, e.end_char - e.start_char));
    e.first_word = units[span.first].first_word;
    e.last_word = units[span.last].last_word;
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<Unit> token_units(const Sentence& sentence) {
  std::vector<Unit> units;
  units.reserve(sentence.tokens.size());
  for (const auto& t : sentence.tokens) {
    units.push_back(Unit{t.start_char, t.end_char, t.first_word, t.last_word});
  }
  return units;
}

std::vector<std::string> entity_tags(const Sentence& sentence) {
  std::vector<std::string> tags(sentence.tokens.size(), "O");
  for (const auto& e : sentence.entities) {
    std::vector<std::size_t> covered;
    for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
      const auto& t = sentence.tokens[i];
      if (t.start_char >= e.start_char && t.end_char <= e.end_char) covered.push_back(i);
    }
    if (covered.empty()) continue;
    if (covered.size() == 1) {
      tags[covered[0]] = with_prefix('S', e.type);
      continue;
    }
    tags[covered.front()] = with_prefix('B', e.type);
    for (std::size_t k = 1; k + 1 < covered.size(); ++k) tags[covered[k]] = with_prefix('I', e.type);
    tags[covered.back()] = with_prefix('E', e.type);
  }
  return tags;
}

}  // namespace tessera::bio
