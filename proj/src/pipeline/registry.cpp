#include "tessera/pipeline/registry.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "httplib.h"
#include "tessera/error.hpp"
#include "tessera/util/sha256.hpp"

namespace tessera::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kArchiveMagic[8] = {'T', 'S', 'R', 'P', 'A', 'C', 'K', '1'};
constexpr const char* kModelSuffix = ".model";

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_bytes(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

std::string fetch_command(const std::string& language) {
  return "tessera models fetch --lang " + language + " --source <archive, directory or URL>";
}

// Files of an unpacked archive, by name.
struct Unpacked {
  Manifest manifest;
  std::map<std::string, std::string> files;
};

Unpacked unpack_archive(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 8) != std::string_view(kArchiveMagic, 8)) {
    throw Error("not a model archive");
  }
  std::uint64_t length = 0;
  std::memcpy(&length, bytes.data() + 8, sizeof length);
  if (length > bytes.size() - 16) throw Error("model archive header is truncated");
  Unpacked u;
  json header;
  try {
    header = json::parse(bytes.substr(16, length));
  } catch (const json::exception& e) {
    throw Error(std::string("model archive header: ") + e.what());
  }
  u.manifest = Manifest::from_json(header.at("manifest"));
  std::size_t offset = 16 + length;
  for (const auto& [name, size_json] : header.at("sizes").items()) {
    const auto size = size_json.get<std::size_t>();
    if (size > bytes.size() - offset) throw Error("model archive is truncated at " + name);
    u.files[name] = std::string(bytes.substr(offset, size));
    offset += size;
  }
  if (offset != bytes.size()) throw Error("model archive has trailing bytes");
  return u;
}

Manifest manifest_for(const std::string& language, const fs::path& dir) {
  Manifest m;
  m.language = language;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const fs::path p = entry.path();
    if (!entry.is_regular_file() || p.extension() != kModelSuffix) continue;
    m.processors[p.stem().string()] = {p.filename().string(), util::sha256_file(p.string())};
  }
  if (m.processors.empty()) throw Error("no *.model files in " + dir.string());
  return m;
}

Unpacked load_directory(const std::string& language, const fs::path& dir) {
  Unpacked u;
  const fs::path manifest_file = dir / "manifest.json";
  if (fs::exists(manifest_file)) {
    try {
      u.manifest = Manifest::from_json(json::parse(read_bytes(manifest_file)));
    } catch (const json::exception& e) {
      throw Error(manifest_file.string() + ": " + e.what());
    }
  } else {
    u.manifest = manifest_for(language, dir);
  }
  for (const auto& [proc, entry] : u.manifest.processors) u.files[entry.file] = read_bytes(dir / entry.file);
  return u;
}

std::string http_get(const std::string& url) {
  const std::string scheme = "http://";
  if (!url.starts_with(scheme)) throw Error("only http:// model URLs are supported: " + url);
  const std::size_t slash = url.find('/', scheme.size());
  const std::string host = url.substr(0, slash);
  const std::string path = slash == std::string::npos ? "/" : url.substr(slash);
  httplib::Client client(host);
  client.set_follow_location(true);
  client.set_connection_timeout(10);
  client.set_read_timeout(300);
  const auto res = client.Get(path);
  if (!res) throw Error("download of " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw Error("download of " + url + " failed with HTTP " + std::to_string(res->status));
  return res->body;
}

std::string random_suffix() {
  std::random_device rd;
  return std::to_string(rd()) + std::to_string(rd());
}

}  // namespace

json Manifest::to_json() const {
  json procs = json::object();
  for (const auto& [name, e] : processors) procs[name] = {{"file", e.file}, {"sha256", e.sha256}};
  return {{"language", language}, {"format_version", format_version}, {"processors", procs}};
}

Manifest Manifest::from_json(const json& j) {
  try {
    Manifest m;
    m.language = j.at("language").get<std::string>();
    m.format_version = j.at("format_version").get<int>();
    for (const auto& [name, e] : j.at("processors").items()) {
      const auto file = e.at("file").get<std::string>();
      if (file.empty() || file.find('/') != std::string::npos || file.find('\\') != std::string::npos ||
          file == "." || file == "..") {
        throw Error("manifest entry '" + name + "' has an invalid file name");
      }
      m.processors[name] = {file, e.at("sha256").get<std::string>()};
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed manifest: ") + e.what());
  }
}

std::string pack_archive(const Manifest& manifest, const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& [proc, entry] : manifest.processors) files[entry.file] = read_bytes(dir / entry.file);
  json sizes = json::object();
  for (const auto& [name, bytes] : files) sizes[name] = bytes.size();
  const std::string header = json{{"manifest", manifest.to_json()}, {"sizes", sizes}}.dump();
  std::string out(kArchiveMagic, 8);
  const std::uint64_t length = header.size();
  out.append(reinterpret_cast<const char*>(&length), sizeof length);
  out += header;
  // json objects iterate in sorted key order, matching std::map.
  for (const auto& [name, bytes] : files) out += bytes;
  return out;
}

Manifest pack_directory(const std::string& language, const fs::path& dir, const fs::path& output) {
  const Manifest m = manifest_for(language, dir);
  write_bytes(output, pack_archive(m, dir));
  return m;
}

Registry::Registry(fs::path root) : root_(std::move(root)) {}

fs::path Registry::default_root() {
  if (const char* env = std::getenv("TESSERA_MODELS"); env && *env) return env;
  return "tessera_models";
}

std::vector<std::string> Registry::languages() const {
  std::vector<std::string> out;
  if (!fs::is_directory(root_)) return out;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.json") &&
        !entry.path().filename().string().starts_with(".")) {
      out.push_back(entry.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<Manifest> Registry::manifest(const std::string& language) const {
  const fs::path file = root_ / language / "manifest.json";
  if (!fs::exists(file)) return std::nullopt;
  try {
    return Manifest::from_json(json::parse(read_bytes(file)));
  } catch (const json::exception& e) {
    throw Error(file.string() + ": " + e.what());
  }
}

fs::path Registry::model_path(const std::string& language, const std::string& processor) const {
  const auto m = manifest(language);
  if (!m) throw ModelUnavailable("no models installed for language '" + language + "' under " + root_.string() + "; run " + fetch_command(language));
  if (m->format_version != kManifestFormatVersion) {
    throw Error("models for '" + language + "' use registry format version " + std::to_string(m->format_version) +
                ", this build reads version " + std::to_string(kManifestFormatVersion) + "; re-fetch them");
  }
  const auto it = m->processors.find(processor);
  if (it == m->processors.end()) {
    throw ModelUnavailable("no " + processor + " model for language '" + language + "'; run " + fetch_command(language));
  }
  const fs::path file = root_ / language / it->second.file;
  if (!fs::exists(file)) throw ModelUnavailable("model file " + file.string() + " is missing; run " + fetch_command(language));
  if (util::sha256_file(file.string()) != it->second.sha256) {
    throw Error("model file " + file.string() + " does not match its manifest hash; run " + fetch_command(language));
  }
  return file;
}

std::vector<std::string> Registry::verify(const std::string& language) const {
  std::vector<std::string> problems;
  std::optional<Manifest> m;
  try {
    m = manifest(language);
  } catch (const Error& e) {
    return {e.what()};
  }
  if (!m) return {"no manifest for '" + language + "'"};
  for (const auto& [proc, entry] : m->processors) {
    try {
      model_path(language, proc);
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
  }
  return problems;
}

Manifest Registry::fetch(const std::string& language, const std::string& source,
                         const std::optional<std::string>& expected_sha256) const {
  Unpacked u;
  if (source.starts_with("http://") || source.starts_with("https://")) {
    const std::string bytes = http_get(source);
    if (expected_sha256 && util::sha256_hex(bytes) != *expected_sha256) throw Error("archive hash mismatch for " + source);
    u = unpack_archive(bytes);
  } else if (fs::is_directory(source)) {
    if (expected_sha256) throw Error("--sha256 applies to archives, not directories");
    u = load_directory(language, source);
  } else {
    const std::string bytes = read_bytes(source);
    if (expected_sha256 && util::sha256_hex(bytes) != *expected_sha256) throw Error("archive hash mismatch for " + source);
    u = unpack_archive(bytes);
  }
  if (u.manifest.language != language) {
    throw Error("archive holds models for '" + u.manifest.language + "', not '" + language + "'");
  }
  if (u.manifest.format_version != kManifestFormatVersion) {
    throw Error("archive uses registry format version " + std::to_string(u.manifest.format_version) +
                ", this build reads version " + std::to_string(kManifestFormatVersion));
  }
  for (const auto& [proc, entry] : u.manifest.processors) {
    const auto it = u.files.find(entry.file);
    if (it == u.files.end()) throw Error("archive lacks " + entry.file);
    if (util::sha256_hex(it->second) != entry.sha256) throw Error("hash mismatch for " + entry.file + "; nothing installed");
  }

  fs::create_directories(root_);
  const fs::path staging = root_ / (".staging-" + language + "-" + random_suffix());
  const fs::path target = root_ / language;
  const fs::path retired = root_ / (".retired-" + language + "-" + random_suffix());
  try {
    fs::create_directories(staging);
    for (const auto& [proc, entry] : u.manifest.processors) write_bytes(staging / entry.file, u.files.at(entry.file));
    write_bytes(staging / "manifest.json", u.manifest.to_json().dump(2));
    if (fs::exists(target)) fs::rename(target, retired);
    try {
      fs::rename(staging, target);
    } catch (...) {
      if (fs::exists(retired)) fs::rename(retired, target);
      throw;
    }
  } catch (const fs::filesystem_error& e) {
    fs::remove_all(staging);
    throw Error(std::string("installing models failed: ") + e.what());
  } catch (...) {
    fs::remove_all(staging);
    throw;
  }
  fs::remove_all(retired);
  return u.manifest;
}

}  // namespace tessera::pipeline
