#include "tessera/pipeline/wire.hpp"

#include "tessera/error.hpp"

namespace tessera::wire {

using nlohmann::json;

namespace {

template <typename T>
json nullable(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

json word_json(const Word& w) {
  return {{"id", w.id},
          {"text", w.form},
          {"lemma", nullable(w.lemma)},
          {"upos", nullable(w.upos)},
          {"xpos", nullable(w.xpos)},
          {"feats", w.feats ? json(w.feats->to_string()) : json(nullptr)},
          {"head", nullable(w.head)},
          {"deprel", nullable(w.deprel)}};
}

}  // namespace

json to_json(const Document& doc) {
  json sentences = json::array();
  for (const auto& s : doc.sentences) {
    json tokens = json::array();
    for (const auto& t : s.tokens) {
      json words = json::array();
      for (const Word* w : s.words_of(t)) words.push_back(word_json(*w));
      tokens.push_back({{"id", {t.first_word, t.last_word}},
                        {"text", t.surface},
                        {"start_char", t.start_char},
                        {"end_char", t.end_char},
                        {"words", std::move(words)}});
    }
    json entities = json::array();
    for (const auto& e : s.entities) {
      entities.push_back({{"type", e.type},
                          {"start_char", e.start_char},
                          {"end_char", e.end_char},
                          {"text", e.text},
                          {"words", {e.first_word, e.last_word}}});
    }
    sentences.push_back({{"text", doc.sentence_text(s)},
                         {"start_char", s.start_char()},
                         {"end_char", s.end_char()},
                         {"tokens", std::move(tokens)},
                         {"entities", std::move(entities)}});
  }
  return {{"wire_version", kWireVersion}, {"text", doc.text}, {"sentences", std::move(sentences)}};
}

Document from_json(const json& j) {
  try {
    if (j.at("wire_version").get<int>() != kWireVersion) {
      throw Error("wire_version " + j.at("wire_version").dump() + " is not supported");
    }
    Document doc;
    doc.text = j.at("text").get<std::string>();
    for (const auto& js : j.at("sentences")) {
      Sentence s;
      for (const auto& jt : js.at("tokens")) {
        Token t;
        t.first_word = jt.at("id").at(0).get<int>();
        t.last_word = jt.at("id").at(1).get<int>();
        t.surface = jt.at("text").get<std::string>();
        t.start_char = jt.at("start_char").get<std::size_t>();
        t.end_char = jt.at("end_char").get<std::size_t>();
        s.tokens.push_back(t);
        for (const auto& jw : jt.at("words")) {
          Word w;
          w.id = jw.at("id").get<int>();
          w.form = jw.at("text").get<std::string>();
          w.lemma = optional_field<std::string>(jw, "lemma");
          w.upos = optional_field<std::string>(jw, "upos");
          w.xpos = optional_field<std::string>(jw, "xpos");
          if (const auto f = optional_field<std::string>(jw, "feats")) w.feats = MorphFeatures::parse(*f);
          w.head = optional_field<int>(jw, "head");
          w.deprel = optional_field<std::string>(jw, "deprel");
          s.words.push_back(std::move(w));
        }
      }
      for (const auto& je : js.at("entities")) {
        s.entities.push_back({je.at("type").get<std::string>(), je.at("start_char").get<std::size_t>(),
                              je.at("end_char").get<std::size_t>(), je.at("text").get<std::string>(),
                              je.at("words").at(0).get<int>(), je.at("words").at(1).get<int>()});
      }
      doc.sentences.push_back(std::move(s));
    }
    return doc;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed wire document: ") + e.what());
  }
}

std::string canonical(const json& j) { return j.dump(); }

}  // namespace tessera::wire
