#pragma once

#include <string>

#include "json.hpp"
#include "tessera/doc/document.hpp"

namespace tessera::wire {

/// Bumped on any incompatible change to the field layout.
inline constexpr int kWireVersion = 1;

/// Document -> wire JSON. Unset annotations are null, never omitted.
nlohmann::json to_json(const Document& doc);

/// Inverse of to_json for every field the schema carries (token and word
/// MISC, comments and empty nodes are not transmitted). Throws
/// tessera::Error on a malformed body or a different wire_version.
Document from_json(const nlohmann::json& j);

/// Sorted keys, no insignificant whitespace: equal documents give equal bytes.
std::string canonical(const nlohmann::json& j);

}  // namespace tessera::wire
