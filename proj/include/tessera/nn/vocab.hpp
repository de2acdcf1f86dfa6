#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace tessera::nn {

/// String <-> index mapping. With `unk`, index 0 is reserved for unknown
/// items and lookups of unseen strings return it.
class Vocab {
 public:
  static constexpr const char* kUnk = "<unk>";

  explicit Vocab(bool unk = true);

  std::size_t add(const std::string& item);
  std::optional<std::size_t> find(const std::string& item) const;
  /// Index of `item`, or the UNK index. Requires an UNK-enabled vocabulary
  /// when `item` is unknown.
  std::size_t index(const std::string& item) const;
  const std::string& at(std::size_t i) const { return items_.at(i); }
  std::size_t size() const { return items_.size(); }
  bool has_unk() const { return unk_; }
  const std::vector<std::string>& items() const { return items_; }

  nlohmann::json to_json() const;
  static Vocab from_json(const nlohmann::json& j);

 private:
  bool unk_;
  std::vector<std::string> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace tessera::nn
