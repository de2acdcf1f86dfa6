#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tessera {

/// Attribute names compare ASCII case-insensitively, ties broken bytewise.
struct CaseInsensitiveLess {
  bool operator()(const std::string& a, const std::string& b) const;
};

/// Universal morphological features, `Attr=Val1,Val2|Attr2=Val`.
class MorphFeatures {
 public:
  using Map = std::map<std::string, std::set<std::string>, CaseInsensitiveLess>;

  MorphFeatures() = default;
  explicit MorphFeatures(Map attrs) : attrs_(std::move(attrs)) {}

  /// Parses the FEATS column. `_` and "" give the empty bundle.
  /// Throws ParseError (line 0) on an item without `=`.
  static MorphFeatures parse(std::string_view column);

  std::string to_string() const;

  void set(const std::string& attr, const std::string& value);
  void add(const std::string& attr, const std::string& value);
  /// Comma-joined values of `attr`, or nullopt.
  std::optional<std::string> get(const std::string& attr) const;

  bool empty() const { return attrs_.empty(); }
  const Map& attrs() const { return attrs_; }

  friend bool operator==(const MorphFeatures&, const MorphFeatures&) = default;

 private:
  Map attrs_;
};

struct Word {
  int id = 0;
  std::string form;
  std::optional<std::string> lemma;
  std::optional<std::string> upos;
  std::optional<std::string> xpos;
  std::optional<MorphFeatures> feats;
  std::optional<int> head;
  std::optional<std::string> deprel;
  // Preserved verbatim, never interpreted. Empty means `_`.
  std::string deps;
  std::string misc;

  friend bool operator==(const Word&, const Word&) = default;
};

struct Token {
  int first_word = 0;
  int last_word = 0;
  std::string surface;
  std::size_t start_char = 0;
  std::size_t end_char = 0;
  // Set by the tokenizer on tokens that still await MWT expansion.
  bool expand = false;
  // Opaque MISC entries of an MWT range line.
  std::string misc;

  bool is_mwt() const { return last_word > first_word; }

  friend bool operator==(const Token&, const Token&) = default;
};

struct Entity {
  std::string type;
  std::size_t start_char = 0;
  std::size_t end_char = 0;
  std::string text;
  int first_word = 0;
  int last_word = 0;

  friend bool operator==(const Entity&, const Entity&) = default;
};

/// An empty node (`5.1`) line, kept verbatim after word `after_word`.
struct EmptyNode {
  int after_word = 0;
  std::string line;

  friend bool operator==(const EmptyNode&, const EmptyNode&) = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::vector<Word> words;
  std::vector<Entity> entities;
  // Comment lines other than `# text` / `# newdoc`, without the leading "# ".
  std::vector<std::string> comments;
  std::vector<EmptyNode> empty_nodes;
  // False when read from CoNLL-U without a `# text` line; serialization then
  // omits it again if the text stays recoverable.
  bool text_comment = true;

  std::size_t start_char() const { return tokens.empty() ? 0 : tokens.front().start_char; }
  std::size_t end_char() const { return tokens.empty() ? 0 : tokens.back().end_char; }

  /// Words belonging to `token`.
  std::vector<const Word*> words_of(const Token& token) const;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Document {
  std::string text;
  std::vector<Sentence> sentences;
  // Content of the `# newdoc ...` line that opened this document, if any.
  std::string newdoc;
  // Offsets were recovered from the text on read rather than stored in MISC.
  // Serialization then omits them again, provided they stay recoverable.
  bool implicit_offsets = false;

  /// Code-point substring of `text`.
  std::string span(std::size_t start, std::size_t end) const;
  /// Text covered by a sentence.
  std::string sentence_text(const Sentence& s) const;

  std::size_t num_words() const;
  std::size_t num_tokens() const;

  friend bool operator==(const Document&, const Document&) = default;
};

/// Checks every structural invariant of the data model and returns a list of
/// violations (empty when valid).
std::vector<std::string> validate(const Document& doc);

/// Replaces `words` with one word per token (form = surface) and renumbers
/// token ranges. Used after tokenization, before MWT expansion.
void assign_identity_words(Sentence& sentence);

/// Rebuilds token id ranges and the flat word list from per-token expansions.
/// `expansions[i]` lists the word forms of token i (≥ 1 each).
void apply_expansions(Sentence& sentence,
                      const std::vector<std::vector<std::string>>& expansions);

}  // namespace tessera
