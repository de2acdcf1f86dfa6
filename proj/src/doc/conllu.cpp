#include "tessera/doc/conllu.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

#include "tessera/doc/bio.hpp"
#include "tessera/error.hpp"
#include "tessera/text/utf8.hpp"

namespace tessera::conllu {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      break;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

std::optional<int> to_int(std::string_view s) {
  int value = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::optional<std::size_t> to_size(std::string_view s) {
  std::size_t value = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::optional<std::string> optional_column(std::string_view s) {
  if (s == "_") return std::nullopt;
  return std::string(s);
}

// MISC entries split into the ones we derive and the ones kept verbatim.
struct Misc {
  bool no_space_after = false;
  std::optional<std::size_t> start_char;
  std::optional<std::size_t> end_char;
  std::string ner;
  std::string opaque;
};

Misc parse_misc(std::string_view column, std::size_t line_no) {
  Misc m;
  if (column == "_" || column.empty()) return m;
  for (const auto item : split(column, '|')) {
    if (item == "SpaceAfter=No") {
      m.no_space_after = true;
    } else if (item.starts_with("start_char=")) {
      m.start_char = to_size(item.substr(11));
      if (!m.start_char) throw ParseError(line_no, "bad start_char");
    } else if (item.starts_with("end_char=")) {
      m.end_char = to_size(item.substr(9));
      if (!m.end_char) throw ParseError(line_no, "bad end_char");
    } else if (item.starts_with("ner=")) {
      m.ner = std::string(item.substr(4));
      if (!bio::is_valid_tag(m.ner)) throw ParseError(line_no, "bad ner tag '" + m.ner + "'");
    } else {
      if (!m.opaque.empty()) m.opaque += '|';
      m.opaque += item;
    }
  }
  return m;
}

struct RawToken {
  Misc misc;
  std::size_t line = 0;
};

struct RawSentence {
  Sentence sentence;
  std::optional<std::string> text;
  std::vector<RawToken> raw;
  std::size_t first_line = 0;
};

struct RawDocument {
  std::string newdoc;
  std::vector<RawSentence> sentences;
};

Word parse_word(const std::vector<std::string_view>& cols, int id, std::size_t line_no) {
  Word w;
  w.id = id;
  w.form = std::string(cols[1]);
  w.lemma = optional_column(cols[2]);
  w.upos = optional_column(cols[3]);
  w.xpos = optional_column(cols[4]);
  if (cols[5] != "_") {
    try {
      w.feats = MorphFeatures::parse(cols[5]);
    } catch (const ParseError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (cols[6] != "_") {
    w.head = to_int(cols[6]);
    if (!w.head || *w.head < 0) throw ParseError(line_no, "bad HEAD '" + std::string(cols[6]) + "'");
  }
  w.deprel = optional_column(cols[7]);
  if (cols[8] != "_") w.deps = std::string(cols[8]);
  return w;
}

void finish_sentence(RawSentence& rs, std::optional<std::pair<int, int>>& pending,
                     std::size_t line_no) {
  if (pending) throw ParseError(line_no, "multi-word token range not completed");
  const int n = static_cast<int>(rs.sentence.words.size());
  for (const auto& w : rs.sentence.words) {
    if (w.head && *w.head > n) throw ParseError(rs.first_line, "HEAD out of range");
  }
}

std::vector<RawDocument> read_blocks(std::string_view content) {
  std::vector<RawDocument> docs(1);
  RawSentence current;
  std::optional<std::pair<int, int>> pending;  // open MWT range
  int next_id = 1;
  bool in_sentence = false;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (!in_sentence) return;
    finish_sentence(current, pending, line_no);
    if (!current.sentence.tokens.empty()) docs.back().sentences.push_back(std::move(current));
    current = RawSentence{};
    pending.reset();
    next_id = 1;
    in_sentence = false;
  };

  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      flush();
      continue;
    }
    if (!in_sentence) {
      in_sentence = true;
      current.first_line = line_no;
    }
    if (line.front() == '#') {
      std::string_view body = line.substr(1);
      if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      if (body.starts_with("newdoc")) {
        if (!docs.back().sentences.empty() || !docs.back().newdoc.empty()) docs.emplace_back();
        docs.back().newdoc = std::string(body);
      } else if (body.starts_with("text = ")) {
        current.text = std::string(body.substr(7));
      } else if (body == "text =") {
        current.text = std::string();
      } else {
        current.sentence.comments.emplace_back(body);
      }
      continue;
    }

    const auto cols = split(line, '\t');
    if (cols.size() != 10) {
      throw ParseError(line_no, "expected 10 columns, found " + std::to_string(cols.size()));
    }
    const std::string_view id = cols[0];
    if (id.find('.') != std::string_view::npos) {
      current.sentence.empty_nodes.push_back(EmptyNode{next_id - 1, std::string(line)});
      continue;
    }
    if (const auto dash = id.find('-'); dash != std::string_view::npos) {
      const auto a = to_int(id.substr(0, dash));
      const auto b = to_int(id.substr(dash + 1));
      if (!a || !b || *b <= *a) throw ParseError(line_no, "bad range id '" + std::string(id) + "'");
      if (pending) throw ParseError(line_no, "overlapping multi-word token ranges");
      if (*a != next_id) throw ParseError(line_no, "multi-word token range must start at the next word id");
      pending = std::make_pair(*a, *b);
      Token t;
      t.first_word = *a;
      t.last_word = *b;
      t.surface = std::string(cols[1]);
      RawToken rt{parse_misc(cols[9], line_no), line_no};
      t.misc = rt.misc.opaque;
      current.sentence.tokens.push_back(std::move(t));
      current.raw.push_back(std::move(rt));
      continue;
    }
    const auto word_id = to_int(id);
    if (!word_id) throw ParseError(line_no, "bad id '" + std::string(id) + "'");
    if (*word_id != next_id) {
      throw ParseError(line_no, "non-contiguous word id " + std::to_string(*word_id) +
                                    ", expected " + std::to_string(next_id));
    }
    ++next_id;
    Word w = parse_word(cols, *word_id, line_no);
    if (pending) {
      // Word inside a range: MISC stays with the word.
      w.misc = cols[9] == "_" ? std::string() : std::string(cols[9]);
      if (*word_id == pending->second) pending.reset();
    } else {
      RawToken rt{parse_misc(cols[9], line_no), line_no};
      w.misc = rt.misc.opaque;
      Token t;
      t.first_word = t.last_word = *word_id;
      t.surface = w.form;
      current.sentence.tokens.push_back(std::move(t));
      current.raw.push_back(std::move(rt));
    }
    current.sentence.words.push_back(std::move(w));
  }
  flush();
  if (docs.size() == 1 && docs.front().sentences.empty() && docs.front().newdoc.empty()) {
    docs.clear();
  }
  return docs;
}

std::string joined_forms(const RawSentence& rs) {
  std::string out;
  const auto& tokens = rs.sentence.tokens;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out += tokens[i].surface;
    if (i + 1 < tokens.size() && !rs.raw[i].misc.no_space_after) out += ' ';
  }
  return out;
}

Document assemble(RawDocument& raw) {
  Document doc;
  doc.newdoc = raw.newdoc;
  bool all_offsets = !raw.sentences.empty();
  for (const auto& rs : raw.sentences) {
    for (const auto& rt : rs.raw) {
      if (!rt.misc.start_char || !rt.misc.end_char) all_offsets = false;
    }
  }

  std::u32string text;
  if (all_offsets) {
    std::size_t length = 0;
    for (auto& rs : raw.sentences) {
      for (std::size_t i = 0; i < rs.sentence.tokens.size(); ++i) {
        auto& t = rs.sentence.tokens[i];
        t.start_char = *rs.raw[i].misc.start_char;
        t.end_char = *rs.raw[i].misc.end_char;
        if (t.end_char < t.start_char) throw ParseError(rs.raw[i].line, "end_char before start_char");
        length = std::max(length, t.end_char);
      }
      if (rs.text) {
        length = std::max(length, rs.sentence.start_char() + utf8::length(*rs.text));
      }
    }
    text.assign(length, U' ');
    for (auto& rs : raw.sentences) {
      if (rs.text) {
        const auto chars = utf8::decode(*rs.text);
        std::copy(chars.begin(), chars.end(), text.begin() + static_cast<std::ptrdiff_t>(rs.sentence.start_char()));
      }
    }
    for (auto& rs : raw.sentences) {
      for (std::size_t i = 0; i < rs.sentence.tokens.size(); ++i) {
        const auto& t = rs.sentence.tokens[i];
        const auto chars = utf8::decode(t.surface);
        if (chars.size() != t.end_char - t.start_char) {
          throw ParseError(rs.raw[i].line, "offsets of '" + t.surface + "' do not match its length");
        }
        const std::u32string_view placed(text.data() + t.start_char, chars.size());
        if (rs.text && placed != chars) {
          throw ParseError(rs.raw[i].line, "token '" + t.surface + "' does not match # text");
        }
        std::copy(chars.begin(), chars.end(), text.begin() + static_cast<std::ptrdiff_t>(t.start_char));
      }
    }
  } else {
    for (std::size_t si = 0; si < raw.sentences.size(); ++si) {
      auto& rs = raw.sentences[si];
      if (si > 0 && !raw.sentences[si - 1].raw.back().misc.no_space_after) text += U' ';
      const std::size_t base = text.size();
      const std::u32string stext = utf8::decode(rs.text ? *rs.text : joined_forms(rs));
      std::size_t cursor = 0;
      for (std::size_t i = 0; i < rs.sentence.tokens.size(); ++i) {
        auto& t = rs.sentence.tokens[i];
        const std::u32string form = utf8::decode(t.surface);
        while (cursor < stext.size() && utf8::is_space(stext[cursor])) ++cursor;
        std::size_t at = cursor;
        if (stext.compare(cursor, form.size(), form) != 0) {
          at = stext.find(form, cursor);
          if (at == std::u32string::npos) {
            throw ParseError(rs.raw[i].line, "form '" + t.surface + "' not found in sentence text");
          }
        }
        t.start_char = base + at;
        t.end_char = base + at + form.size();
        cursor = at + form.size();
      }
      text += stext;
    }
  }
  doc.text = utf8::encode(text);
  doc.implicit_offsets = !all_offsets;

  for (auto& rs : raw.sentences) {
    bool tagged = false;
    std::vector<std::string> tags;
    for (const auto& rt : rs.raw) {
      tags.push_back(rt.misc.ner.empty() ? "O" : rt.misc.ner);
      tagged = tagged || !rt.misc.ner.empty();
    }
    rs.sentence.text_comment = rs.text.has_value();
    if (tagged) rs.sentence.entities = bio::to_entities(bio::token_units(rs.sentence), tags, text);
    doc.sentences.push_back(std::move(rs.sentence));
  }
  return doc;
}

std::string misc_column(const std::string& opaque, const std::string& ner, bool no_space_after,
                        const Token& t, bool offsets) {
  std::string out = opaque;
  auto add = [&](const std::string& item) {
    if (!out.empty()) out += '|';
    out += item;
  };
  if (!ner.empty() && ner != "O") add("ner=" + ner);
  if (no_space_after) add("SpaceAfter=No");
  if (offsets) {
    add("start_char=" + std::to_string(t.start_char));
    add("end_char=" + std::to_string(t.end_char));
  }
  return out;
}

std::string or_blank(const std::optional<std::string>& s) { return s ? *s : "_"; }

void write_word(std::string& out, const Word& w, const std::string& misc) {
  out += std::to_string(w.id);
  out += '\t';
  out += w.form;
  out += '\t';
  out += or_blank(w.lemma);
  out += '\t';
  out += or_blank(w.upos);
  out += '\t';
  out += or_blank(w.xpos);
  out += '\t';
  out += w.feats ? w.feats->to_string() : "_";
  out += '\t';
  out += w.head ? std::to_string(*w.head) : "_";
  out += '\t';
  out += or_blank(w.deprel);
  out += '\t';
  out += w.deps.empty() ? "_" : w.deps;
  out += '\t';
  out += misc.empty() ? "_" : misc;
  out += '\n';
}

std::string one_line(std::string s) {
  for (auto& c : s) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  }
  return s;
}

}  // namespace

std::vector<Document> parse(std::string_view content) {
  auto raw = read_blocks(content);
  std::vector<Document> docs;
  docs.reserve(raw.size());
  for (auto& r : raw) docs.push_back(assemble(r));
  return docs;
}

std::vector<Document> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

namespace {

// `faithful` reproduces the source form: offsets and `# text` lines only
// where the document was read with them.
std::string serialize_with(const Document& doc, bool faithful) {
  const bool offsets = !faithful || !doc.implicit_offsets;
  std::string out;
  const std::u32string text = utf8::decode(doc.text);
  if (!doc.newdoc.empty()) out += "# " + doc.newdoc + "\n";
  for (const auto& s : doc.sentences) {
    for (const auto& c : s.comments) out += "# " + c + "\n";
    if (!faithful || s.text_comment) {
      out += "# text = " +
             one_line(utf8::encode(std::u32string_view(text).substr(
                 s.start_char(), s.end_char() - s.start_char()))) +
             "\n";
    }
    const auto tags = s.entities.empty() ? std::vector<std::string>(s.tokens.size(), "O")
                                         : bio::entity_tags(s);
    auto empty_after = [&](int word_id) {
      for (const auto& e : s.empty_nodes) {
        if (e.after_word == word_id) out += e.line + "\n";
      }
    };
    empty_after(0);
    for (std::size_t ti = 0; ti < s.tokens.size(); ++ti) {
      const Token& t = s.tokens[ti];
      const bool no_space = t.end_char < text.size() && !utf8::is_space(text[t.end_char]);
      if (t.is_mwt()) {
        const std::string misc = misc_column(t.misc, tags[ti], no_space, t, offsets);
        out += std::to_string(t.first_word) + "-" + std::to_string(t.last_word) + "\t" +
               t.surface + "\t_\t_\t_\t_\t_\t_\t_\t" + (misc.empty() ? "_" : misc) + "\n";
        for (const auto& w : s.words) {
          if (w.id < t.first_word || w.id > t.last_word) continue;
          write_word(out, w, w.misc);
          empty_after(w.id);
        }
      } else {
        for (const auto& w : s.words) {
          if (w.id != t.first_word) continue;
          write_word(out, w, misc_column(w.misc, tags[ti], no_space, t, offsets));
          empty_after(w.id);
        }
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace

std::string serialize(const Document& doc) {
  const bool all_text = std::all_of(doc.sentences.begin(), doc.sentences.end(),
                                    [](const Sentence& s) { return s.text_comment; });
  if (doc.implicit_offsets || !all_text) {
    std::string out = serialize_with(doc, true);
    const auto back = parse(out);
    if (back.size() == 1 && back[0] == doc) return out;
  }
  return serialize_with(doc, false);
}

std::string serialize(const std::vector<Document>& docs) {
  std::string out;
  for (const auto& d : docs) out += serialize(d);
  return out;
}

void write_file(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << serialize(docs);
}

}  // namespace tessera::conllu
