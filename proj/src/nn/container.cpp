#include "tessera/nn/container.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>

#include "tessera/error.hpp"

namespace tessera::nn {

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

namespace {

constexpr char kMagic[8] = {'T', 'S', 'R', 'M', 'O', 'D', 'E', 'L'};

template <typename T>
void write_pod(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void save_model(const std::string& path, const std::string& kind, const nlohmann::json& meta,
                const ParameterSet& params) {
  nlohmann::json header;
  header["kind"] = kind;
  header["format_version"] = kModelFormatVersion;
  header["meta"] = meta;
  header["tensors"] = nlohmann::json::array();
  for (const Parameter* p : params.all()) {
    header["tensors"].push_back({{"name", p->name}, {"shape", p->value.shape()}});
  }
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write model file " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kModelFormatVersion);
  write_pod<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Parameter* p : params.all()) {
    const auto data = p->value.data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!out) throw Error("failed writing model file " + path);
}

ModelFile load_model(const std::string& path, const std::string& expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path);
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kMagic)) throw Error(path + ": not a model file");
  const auto version = read_pod<std::uint32_t>(in);
  if (version != static_cast<std::uint32_t>(kModelFormatVersion)) {
    throw Error(path + ": model format version " + std::to_string(version) + ", expected " +
                std::to_string(kModelFormatVersion));
  }
  const auto length = read_pod<std::uint64_t>(in);
  if (!in || length > (1ull << 32)) throw Error(path + ": corrupt header");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw Error(path + ": truncated header");

  ModelFile model;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": bad header: " + e.what());
  }
  model.kind = header.at("kind").get<std::string>();
  if (!expected_kind.empty() && model.kind != expected_kind) {
    throw Error(path + ": holds a '" + model.kind + "' model, expected '" + expected_kind + "'");
  }
  model.meta = header.at("meta");
  Rng unused(0);
  for (const auto& t : header.at("tensors")) {
    Parameter& p = model.params.add(t.at("name").get<std::string>(),
                                    t.at("shape").get<std::vector<std::size_t>>(), Init::Zero, unused);
    auto data = p.value.data();
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw Error(path + ": truncated tensor data for " + p.name);
  }
  return model;
}

}  // namespace tessera::nn
