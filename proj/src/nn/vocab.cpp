#include "tessera/nn/vocab.hpp"

#include "tessera/error.hpp"

namespace tessera::nn {

Vocab::Vocab(bool unk) : unk_(unk) {
  if (unk_) add(kUnk);
}

std::size_t Vocab::add(const std::string& item) {
  if (const auto it = index_.find(item); it != index_.end()) return it->second;
  items_.push_back(item);
  index_[item] = items_.size() - 1;
  return items_.size() - 1;
}

std::optional<std::size_t> Vocab::find(const std::string& item) const {
  const auto it = index_.find(item);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocab::index(const std::string& item) const {
  if (const auto found = find(item)) return *found;
  require(unk_, "unknown item '" + item + "' in a closed vocabulary");
  return 0;
}

nlohmann::json Vocab::to_json() const {
  nlohmann::json items = nlohmann::json::array();
  const std::size_t first = unk_ ? 1 : 0;
  for (std::size_t i = first; i < items_.size(); ++i) items.push_back(items_[i]);
  return {{"unk", unk_}, {"items", items}};
}

Vocab Vocab::from_json(const nlohmann::json& j) {
  Vocab v(j.at("unk").get<bool>());
  for (const auto& item : j.at("items")) v.add(item.get<std::string>());
  return v;
}

}  // namespace tessera::nn
