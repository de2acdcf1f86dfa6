#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tessera/error.hpp"

namespace tessera::pipeline {

/// A requested language or processor has no installed model.
class ModelUnavailable : public Error {
 public:
  using Error::Error;
};

/// Registry layout: <root>/<lang>/manifest.json plus one model file per
/// processor. Manifest:
///   {"language": "fr", "format_version": 1,
///    "processors": {"tokenize": {"file": "tokenize.model", "sha256": "..."}}}
inline constexpr int kManifestFormatVersion = 1;

struct ModelEntry {
  std::string file;
  std::string sha256;
};

struct Manifest {
  std::string language;
  int format_version = kManifestFormatVersion;
  std::map<std::string, ModelEntry> processors;

  nlohmann::json to_json() const;
  /// Throws tessera::Error on a malformed manifest.
  static Manifest from_json(const nlohmann::json& j);
};

/// Archive = "TSRPACK1", u64 header length, JSON header
/// {"manifest": {...}, "sizes": {"file": bytes}}, then the files' bytes in
/// header (sorted file name) order.
std::string pack_archive(const Manifest& manifest, const std::filesystem::path& dir);
/// Writes an archive of `dir`, creating a manifest over every `<processor>.model` file in it.
Manifest pack_directory(const std::string& language, const std::filesystem::path& dir,
                        const std::filesystem::path& output);

class Registry {
 public:
  explicit Registry(std::filesystem::path root);

  /// Root from $TESSERA_MODELS, else ./tessera_models.
  static std::filesystem::path default_root();

  const std::filesystem::path& root() const { return root_; }
  std::vector<std::string> languages() const;
  std::optional<Manifest> manifest(const std::string& language) const;

  /// Path of a verified model file. Throws tessera::Error when the language
  /// or processor is missing (naming the fetch command), when the manifest
  /// format version differs, or when the file hash does not match.
  std::filesystem::path model_path(const std::string& language, const std::string& processor) const;

  /// Problems found for one language (empty when every file verifies).
  std::vector<std::string> verify(const std::string& language) const;

  /// Installs a language from an archive file, a directory of models (with
  /// or without a manifest) or an http:// URL of an archive. Every file is
  /// checked against the manifest hash, and against `expected_sha256` for the
  /// archive bytes when given. Installs by rename, so a failure leaves the
  /// registry as it was.
  Manifest fetch(const std::string& language, const std::string& source,
                 const std::optional<std::string>& expected_sha256 = std::nullopt) const;

 private:
  std::filesystem::path root_;
};

}  // namespace tessera::pipeline
