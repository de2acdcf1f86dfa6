#include "tessera/ner/charlm.hpp"

#include <algorithm>
#include <ostream>

#include "tessera/error.hpp"
#include "tessera/nn/container.hpp"
#include "tessera/nn/optimizer.hpp"
#include "tessera/text/utf8.hpp"
#include "tessera/util/sha256.hpp"

namespace tessera::ner {

using nn::Expr;
using nn::Graph;

namespace {

constexpr const char* kKind = "charlm";

const char* direction_name(Direction d) { return d == Direction::Forward ? "forward" : "backward"; }

Direction direction_from(const std::string& s) {
  if (s == "forward") return Direction::Forward;
  if (s == "backward") return Direction::Backward;
  throw Error("unknown language model direction '" + s + "'");
}

}  // namespace

nlohmann::json CharLmConfig::to_json() const {
  return {{"embed_dim", embed_dim}, {"hidden", hidden},   {"window", window},
          {"epochs", epochs},       {"learning_rate", learning_rate}, {"seed", seed}};
}

CharLmConfig CharLmConfig::from_json(const nlohmann::json& j) {
  CharLmConfig c;
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.window = j.value("window", c.window);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  return c;
}

CharLM::CharLM(std::u32string_view text, Direction direction, const CharLmConfig& config)
    : direction_(direction), config_(config) {
  require(config.window >= 1, "language model window must be positive");
  chars_.add(" ");
  for (char32_t c : text) chars_.add(utf8::encode(c));
  nn::Rng rng(config.seed);
  params_.add("embed", {chars_.size(), config.embed_dim}, nn::Init::Uniform, rng);
  nn::LstmLayer(params_, "lstm", config.embed_dim, config.hidden, rng);
  nn::Linear(params_, "out", config.hidden, chars_.size(), rng);
  bind();
}

void CharLM::bind() {
  embed_ = &params_.get("embed");
  lstm_ = nn::LstmLayer::bind(params_, "lstm");
  output_ = nn::Linear::bind(params_, "out");
}

std::size_t CharLM::symbol(char32_t c) const { return chars_.index(utf8::encode(c)); }

std::u32string CharLM::reading_order(std::u32string_view text) const {
  std::u32string s(text);
  if (direction_ == Direction::Backward) std::reverse(s.begin(), s.end());
  return s;
}

Expr CharLM::window_loss(Graph& g, std::u32string_view stream, const nn::LstmLayer::State& state,
                         nn::LstmLayer::State* final_state) const {
  require(stream.size() >= 2, "a language model window needs at least two characters");
  nn::LstmLayer::State s = state;
  std::vector<Expr> terms;
  for (std::size_t i = 0; i + 1 < stream.size(); ++i) {
    s = lstm_.step(g, g.row(*embed_, symbol(stream[i])), s);
    terms.push_back(nn::softmax_cross_entropy(output_(g, s.h), symbol(stream[i + 1])));
  }
  if (final_state) *final_state = s;
  return nn::scale(nn::sum(terms), 1.0 / static_cast<double>(terms.size()));
}

namespace {

// Detaches a state from its graph as constants in a fresh graph.
nn::LstmLayer::State carry(Graph& g, const std::vector<double>& h, const std::vector<double>& c) {
  return {g.input(h), g.input(c)};
}

}  // namespace

double CharLM::mean_loss(std::u32string_view text) const {
  const std::u32string stream = reading_order(text);
  if (stream.size() < 2) return 0.0;
  std::vector<double> h(config_.hidden, 0.0), c(config_.hidden, 0.0);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t begin = 0; begin + 1 < stream.size(); begin += config_.window) {
    const std::size_t end = std::min(stream.size(), begin + config_.window + 1);
    Graph g;
    nn::LstmLayer::State last;
    const Expr loss = window_loss(g, std::u32string_view(stream).substr(begin, end - begin),
                                  carry(g, h, c), &last);
    total += loss.scalar() * static_cast<double>(end - begin - 1);
    count += end - begin - 1;
    h.assign(last.h.value().begin(), last.h.value().end());
    c.assign(last.c.value().begin(), last.c.value().end());
  }
  return total / static_cast<double>(count);
}

CharLM CharLM::train(std::u32string_view text, Direction direction, const CharLmConfig& config,
                     std::ostream* log) {
  CharLM model(text, direction, config);
  const std::u32string stream = model.reading_order(text);
  if (stream.size() < 2) return model;
  nn::Optimizer opt(model.params_, {.learning_rate = config.learning_rate});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<double> h(config.hidden, 0.0), c(config.hidden, 0.0);
    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t begin = 0; begin + 1 < stream.size(); begin += config.window) {
      const std::size_t end = std::min(stream.size(), begin + config.window + 1);
      Graph g(true);
      nn::LstmLayer::State last;
      const Expr loss = model.window_loss(g, std::u32string_view(stream).substr(begin, end - begin),
                                          carry(g, h, c), &last);
      total += loss.scalar();
      ++windows;
      h.assign(last.h.value().begin(), last.h.value().end());
      c.assign(last.c.value().begin(), last.c.value().end());
      g.backward(loss);
      opt.step();
    }
    if (log) {
      *log << direction_name(direction) << " charlm epoch " << epoch + 1 << " loss "
           << total / static_cast<double>(windows) << "\n";
    }
  }
  return model;
}

std::vector<std::vector<double>> CharLM::states(std::u32string_view stream) const {
  Graph g;
  nn::LstmLayer::State s = lstm_.initial(g);
  std::vector<std::vector<double>> out;
  out.reserve(stream.size());
  for (char32_t c : stream) {
    s = lstm_.step(g, g.row(*embed_, symbol(c)), s);
    out.emplace_back(s.h.value().begin(), s.h.value().end());
  }
  return out;
}

nlohmann::json CharLM::meta() const {
  return {{"direction", direction_name(direction_)}, {"config", config_.to_json()}, {"chars", chars_.to_json()}};
}

void CharLM::export_params(nn::ParameterSet& out, const std::string& prefix) const {
  nn::Rng unused(0);
  for (const nn::Parameter* p : params_.all()) {
    out.add(prefix + p->name, p->value.shape(), nn::Init::Zero, unused).value = p->value;
  }
}

CharLM CharLM::from_parts(const nlohmann::json& meta, const nn::ParameterSet& all, const std::string& prefix) {
  CharLM lm;
  lm.direction_ = direction_from(meta.at("direction").get<std::string>());
  lm.config_ = CharLmConfig::from_json(meta.at("config"));
  lm.chars_ = nn::Vocab::from_json(meta.at("chars"));
  nn::Rng unused(0);
  for (const nn::Parameter* p : all.all()) {
    if (!p->name.starts_with(prefix)) continue;
    lm.params_.add(p->name.substr(prefix.size()), p->value.shape(), nn::Init::Zero, unused).value = p->value;
  }
  lm.bind();
  return lm;
}

std::string CharLM::content_hash() const {
  std::string bytes = meta().dump();
  for (const nn::Parameter* p : params_.all()) {
    bytes += p->name;
    const auto data = p->value.data();
    bytes.append(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(double));
  }
  return util::sha256_hex(bytes);
}

void CharLM::save(const std::string& path) const { nn::save_model(path, kKind, meta(), params_); }

CharLM CharLM::load(const std::string& path) {
  nn::ModelFile file = nn::load_model(path, kKind);
  return from_parts(file.meta, file.params, "");
}

std::pair<std::u32string, std::vector<Span>> sentence_chars(const std::vector<std::string>& words) {
  std::u32string chars = U" ";
  std::vector<Span> spans;
  for (const auto& w : words) {
    const std::u32string cs = utf8::decode(w);
    require(!cs.empty(), "words must be non-empty");
    spans.emplace_back(chars.size(), chars.size() + cs.size());
    chars += cs;
    chars += U' ';
  }
  return {chars, spans};
}

std::vector<std::vector<double>> contextual_embed(const CharLM& forward, const CharLM& backward,
                                                  std::u32string_view chars,
                                                  const std::vector<Span>& spans) {
  require(forward.direction() == Direction::Forward && backward.direction() == Direction::Backward,
          "contextual_embed needs a forward and a backward model");
  const std::size_t n = chars.size();
  for (const auto& [start, end] : spans) {
    require(start >= 1 && start < end && end < n, "word span out of range");
  }
  const auto fwd = forward.states(chars);
  const auto bwd = backward.states(backward.reading_order(chars));
  std::vector<std::vector<double>> out;
  for (const auto& [start, end] : spans) {
    // Reversed position of character start-1 is n - start.
    std::vector<double> v = fwd[end];
    const auto& b = bwd[n - start];
    v.insert(v.end(), b.begin(), b.end());
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace tessera::ner
