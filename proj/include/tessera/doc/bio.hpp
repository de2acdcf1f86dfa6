#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "tessera/doc/document.hpp"

namespace tessera::bio {

struct TaggedSentence {
  std::vector<std::string> words;
  std::vector<std::string> tags;

  friend bool operator==(const TaggedSentence&, const TaggedSentence&) = default;
};

/// Two whitespace-separated columns per line (form, tag); blank lines end
/// sentences. Accepts BIO and BIOES tags. Throws ParseError on a bad tag or
/// column count.
std::vector<TaggedSentence> parse(std::string_view content);
std::vector<TaggedSentence> read_file(const std::string& path);
std::string serialize(const std::vector<TaggedSentence>& sentences);

/// `O`, or a prefix in {B,I,E,S} followed by `-TYPE`.
bool is_valid_tag(std::string_view tag);

/// Prefix letter of a tag ('O' for `O`) and its entity type ("" for `O`).
char prefix(std::string_view tag);
std::string type_of(std::string_view tag);

std::vector<std::string> bio_to_bioes(const std::vector<std::string>& tags);
std::vector<std::string> bioes_to_bio(const std::vector<std::string>& tags);

/// Something a tag can be attached to: a word or token with its offsets.
struct Unit {
  std::size_t start_char = 0;
  std::size_t end_char = 0;
  int first_word = 0;
  int last_word = 0;
};

/// Decodes BIO or BIOES tags into entities, repairing left to right:
/// `I-X`/`E-X` with no open `X` span start a new span (as `B-X`/`S-X`).
/// `text` is the character sequence the unit offsets index into.
std::vector<Entity> to_entities(const std::vector<Unit>& units,
                                const std::vector<std::string>& tags,
                                std::u32string_view text);

/// Span-level decoding shared by to_entities and repair: (first, last, type).
struct Span {
  std::size_t first = 0;
  std::size_t last = 0;
  std::string type;
};
std::vector<Span> decode_spans(const std::vector<std::string>& tags);

/// Canonical BIOES re-encoding of the decoded spans. Idempotent; identity on
/// well-formed BIOES input.
std::vector<std::string> repair(const std::vector<std::string>& tags);

/// Units for the tokens of a sentence.
std::vector<Unit> token_units(const Sentence& sentence);

/// BIOES tags per token for the entities of a sentence.
std::vector<std::string> entity_tags(const Sentence& sentence);

}  // namespace tessera::bio
