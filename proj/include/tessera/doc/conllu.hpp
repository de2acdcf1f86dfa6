#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "tessera/doc/document.hpp"

namespace tessera::conllu {

/// Reads CoNLL-U. Documents split at `# newdoc`; otherwise one document.
///
/// Character offsets come from `start_char`/`end_char` in MISC when every
/// token carries them. Otherwise they are recovered by matching forms left to
/// right against `# text` (or against forms joined with single spaces, minus
/// `SpaceAfter=No`).
///
/// Throws ParseError with the offending line number on malformed input.
std::vector<Document> parse(std::string_view content);
std::vector<Document> read_file(const std::string& path);

/// Writes one document. Unset columns render as `_`; offsets, `SpaceAfter=No`
/// and entity tags are written to MISC. Offsets are left out for documents
/// read without them, as long as re-reading recovers the same offsets.
std::string serialize(const Document& doc);
std::string serialize(const std::vector<Document>& docs);
void write_file(const std::string& path, const std::vector<Document>& docs);

}  // namespace tessera::conllu
