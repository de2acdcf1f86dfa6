#include "tessera/tokenize/tokenizer.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "tessera/error.hpp"
#include "tessera/nn/container.hpp"
#include "tessera/nn/optimizer.hpp"
#include "tessera/text/utf8.hpp"

namespace tessera::tokenize {

namespace {

constexpr const char* kKind = "tokenizer";
// is_space, is_upper, is_digit, is_punct
constexpr std::size_t kNumFeatures = 4;

bool is_sentence_end(CharLabel l) { return l == CharLabel::SentEnd || l == CharLabel::MwtSentEnd; }
bool is_mwt_end(CharLabel l) { return l == CharLabel::MwtTokenEnd || l == CharLabel::MwtSentEnd; }

std::string char_key(char32_t c) { return utf8::encode(c); }

}  // namespace

const char* label_name(CharLabel label) {
  switch (label) {
    case CharLabel::Inside: return "INSIDE";
    case CharLabel::TokenEnd: return "TOKEN_END";
    case CharLabel::SentEnd: return "SENT_END";
    case CharLabel::MwtTokenEnd: return "MWT_TOKEN_END";
    case CharLabel::MwtSentEnd: return "MWT_SENT_END";
  }
  return "?";
}

std::vector<CharLabel> derive_char_labels(const Document& doc) {
  const std::u32string text = utf8::decode(doc.text);
  std::vector<CharLabel> labels(text.size(), CharLabel::Inside);
  for (const auto& s : doc.sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const Token& t = s.tokens[i];
      require(t.start_char < t.end_char && t.end_char <= text.size() &&
                  utf8::encode(std::u32string_view(text).substr(t.start_char, t.end_char - t.start_char)) ==
                      t.surface,
              "token '" + t.surface + "' does not match the text at its offsets");
      const bool last = i + 1 == s.tokens.size();
      const bool mwt = t.is_mwt() || t.expand;
      labels[t.end_char - 1] = last ? (mwt ? CharLabel::MwtSentEnd : CharLabel::SentEnd)
                                    : (mwt ? CharLabel::MwtTokenEnd : CharLabel::TokenEnd);
    }
  }
  return labels;
}

Document segment(const std::string& text, const std::vector<CharLabel>& labels) {
  const std::u32string chars = utf8::decode(text);
  require(labels.size() == chars.size(), "one label per character required");
  Document doc;
  doc.text = text;
  Sentence sentence;
  std::size_t open = std::string::npos;  // start of the open token

  auto close_token = [&](std::size_t end, bool mwt) {
    Token t;
    t.start_char = open;
    t.end_char = end;
    t.surface = utf8::encode(std::u32string_view(chars).substr(open, end - open));
    t.expand = mwt;
    sentence.tokens.push_back(std::move(t));
    open = std::string::npos;
  };
  auto close_sentence = [&] {
    if (sentence.tokens.empty()) return;
    assign_identity_words(sentence);
    doc.sentences.push_back(std::move(sentence));
    sentence = Sentence{};
  };

  for (std::size_t i = 0; i < chars.size(); ++i) {
    if (utf8::is_space(chars[i])) {
      if (open != std::string::npos) close_token(i, false);
      continue;
    }
    if (open == std::string::npos) open = i;
    if (labels[i] != CharLabel::Inside) {
      close_token(i + 1, is_mwt_end(labels[i]));
      if (is_sentence_end(labels[i])) close_sentence();
    }
  }
  if (open != std::string::npos) close_token(chars.size(), false);
  close_sentence();
  return doc;
}

std::vector<std::pair<std::size_t, std::size_t>> paragraphs(const std::u32string& text) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != U'\n') {
      ++i;
      continue;
    }
    // A blank line: newline, optional non-newline spaces, newline.
    std::size_t j = i + 1;
    while (j < text.size() && text[j] != U'\n' && utf8::is_space(text[j])) ++j;
    if (j < text.size() && text[j] == U'\n') {
      if (i > start) out.emplace_back(start, i);
      while (j < text.size() && utf8::is_space(text[j])) ++j;
      start = j;
      i = j;
    } else {
      i = j;
    }
  }
  if (start < text.size()) out.emplace_back(start, text.size());
  return out;
}

nlohmann::json Config::to_json() const {
  return {{"embed_dim", embed_dim}, {"hidden", hidden},   {"layers", layers}, {"dropout", dropout},
          {"epochs", epochs},       {"learning_rate", learning_rate}, {"seed", seed}};
}

Config Config::from_json(const nlohmann::json& j) {
  Config c;
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.layers = j.value("layers", c.layers);
  c.dropout = j.value("dropout", c.dropout);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  return c;
}

Tokenizer::Tokenizer(const std::vector<Document>& corpus, const Config& config) : config_(config) {
  for (const auto& doc : corpus) {
    for (char32_t c : utf8::decode(doc.text)) chars_.add(char_key(c));
    for (const auto& s : doc.sentences)
      for (const auto& t : s.tokens) flags_mwt_ = flags_mwt_ || t.is_mwt() || t.expand;
  }
  nn::Rng rng(config_.seed);
  params_.add("embed", {chars_.size(), config_.embed_dim}, nn::Init::Uniform, rng);
  nn::BiLstm(params_, "enc", config_.embed_dim + kNumFeatures, config_.hidden, config_.layers, rng);
  nn::Linear(params_, "out", 2 * config_.hidden, kNumLabels, rng);
  bind();
}

void Tokenizer::bind() {
  embed_ = &params_.get("embed");
  encoder_ = nn::BiLstm::bind(params_, "enc", config_.layers);
  output_ = nn::Linear::bind(params_, "out");
}

std::vector<nn::Expr> Tokenizer::logits(nn::Graph& g, const std::u32string& chars) const {
  std::vector<nn::Expr> xs;
  xs.reserve(chars.size());
  for (char32_t c : chars) {
    const nn::Expr features = g.input({utf8::is_space(c) ? 1.0 : 0.0, utf8::is_upper(c) ? 1.0 : 0.0,
                                       utf8::is_digit(c) ? 1.0 : 0.0, utf8::is_punct(c) ? 1.0 : 0.0});
    xs.push_back(nn::concat({nn::dropout(g.row(*embed_, chars_.index(char_key(c))), config_.dropout),
                             features}));
  }
  std::vector<nn::Expr> out;
  out.reserve(chars.size());
  for (const nn::Expr& h : encoder_.encode(g, xs, config_.dropout)) {
    out.push_back(output_(g, nn::dropout(h, config_.dropout)));
  }
  return out;
}

nn::Expr Tokenizer::loss(nn::Graph& g, const std::u32string& chars,
                         const std::vector<CharLabel>& gold) const {
  require(chars.size() == gold.size() && !chars.empty(), "one gold label per character required");
  const auto ls = logits(g, chars);
  std::vector<nn::Expr> terms;
  terms.reserve(ls.size());
  for (std::size_t i = 0; i < ls.size(); ++i) {
    terms.push_back(nn::softmax_cross_entropy(ls[i], static_cast<std::size_t>(gold[i])));
  }
  return nn::sum(terms);
}

std::vector<std::vector<double>> Tokenizer::scores(const std::u32string& chars) const {
  if (chars.empty()) return {};
  nn::Graph g;
  std::vector<std::vector<double>> out;
  for (const nn::Expr& l : logits(g, chars)) out.emplace_back(l.value().begin(), l.value().end());
  return out;
}

std::vector<CharLabel> Tokenizer::predict(const std::string& text) const {
  const std::u32string chars = utf8::decode(text);
  std::vector<CharLabel> labels(chars.size(), CharLabel::Inside);
  for (const auto& [begin, end] : paragraphs(chars)) {
    const auto s = scores(chars.substr(begin, end - begin));
    std::size_t last = std::string::npos;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto best = std::max_element(s[i].begin(), s[i].end()) - s[i].begin();
      labels[begin + i] = static_cast<CharLabel>(best);
      if (!utf8::is_space(chars[begin + i])) last = begin + i;
    }
    if (last != std::string::npos && !is_sentence_end(labels[last])) {
      labels[last] = is_mwt_end(labels[last]) ? CharLabel::MwtSentEnd : CharLabel::SentEnd;
    }
  }
  return labels;
}

Document Tokenizer::tokenize(const std::string& text) const { return segment(text, predict(text)); }

Tokenizer Tokenizer::train(const std::vector<Document>& corpus, const Config& config, std::ostream* log) {
  struct Chunk {
    std::u32string chars;
    std::vector<CharLabel> labels;
  };
  std::vector<Chunk> chunks;
  for (const auto& doc : corpus) {
    const std::u32string chars = utf8::decode(doc.text);
    const auto labels = derive_char_labels(doc);
    for (const auto& [begin, end] : paragraphs(chars)) {
      chunks.push_back({chars.substr(begin, end - begin),
                        std::vector<CharLabel>(labels.begin() + static_cast<long>(begin),
                                               labels.begin() + static_cast<long>(end))});
    }
  }
  if (chunks.empty()) throw Error("tokenizer training needs at least one non-empty document");

  Tokenizer model(corpus, config);
  nn::Rng rng(config.seed);
  nn::Optimizer opt(model.params_, {.learning_rate = config.learning_rate});
  std::vector<std::size_t> order(chunks.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i : order) {
      nn::Graph g(true, rng());
      const nn::Expr loss = model.loss(g, chunks[i].chars, chunks[i].labels);
      total += loss.scalar();
      count += chunks[i].chars.size();
      g.backward(loss);
      opt.step();
    }
    if (log) *log << "tokenizer epoch " << epoch + 1 << " loss " << total / static_cast<double>(count) << "\n";
  }
  return model;
}

void Tokenizer::save(const std::string& path) const {
  nn::save_model(path, kKind, {{"config", config_.to_json()}, {"chars", chars_.to_json()}, {"flags_mwt", flags_mwt_}}, params_);
}

Tokenizer Tokenizer::load(const std::string& path) {
  nn::ModelFile file = nn::load_model(path, kKind);
  Tokenizer t;
  t.config_ = Config::from_json(file.meta.at("config"));
  t.chars_ = nn::Vocab::from_json(file.meta.at("chars"));
  t.flags_mwt_ = file.meta.value("flags_mwt", false);
  t.params_ = std::move(file.params);
  t.bind();
  return t;
}

}  // namespace tessera::tokenize
