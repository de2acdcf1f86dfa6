#pragma once

#include <string>

#include "json.hpp"
#include "tessera/nn/tensor.hpp"

namespace tessera::nn {

/// Version written into every model file. Files with another version are
/// refused.
inline constexpr int kModelFormatVersion = 1;

/// A processor model on disk: kind tag, free-form metadata (config,
/// vocabularies, lexicons) and named parameter tensors.
///
/// Layout: "TSRMODEL", u32 format version, u64 header length, JSON header
/// {kind, format_version, meta, tensors: [{name, shape}]}, then the tensors'
/// float64 little-endian data in header order.
struct ModelFile {
  std::string kind;
  nlohmann::json meta;
  ParameterSet params;
};

void save_model(const std::string& path, const std::string& kind, const nlohmann::json& meta,
                const ParameterSet& params);

/// Throws tessera::Error on a missing file, bad magic, version mismatch, or a
/// kind other than `expected_kind` (when non-empty).
ModelFile load_model(const std::string& path, const std::string& expected_kind = "");

}  // namespace tessera::nn
