#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "itts/param_store.hpp"

namespace itts {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  std::string component;  // "agent" | "backend"
  ParamStore params;      // values only; optimiser state is not persisted
  nlohmann::json config;
  std::uint64_t seed = 0;
};

// JSON document with named tensors (shape + flat values), written with
// round-trip precision so that save -> load -> save reproduces the bytes.
std::string checkpoint_to_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_string(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
// Throws std::runtime_error on an unreadable or corrupt file or a version
// mismatch, and when `expected_component` is non-empty and differs.
Checkpoint load_checkpoint(const std::string& path, const std::string& expected_component = "");

// Tensors of `all` whose name starts with `prefix`.
ParamStore select_params(const ParamStore& all, const std::string& prefix);
// Union of two stores with disjoint names.
ParamStore merge_params(const ParamStore& a, const ParamStore& b);

}  // namespace itts
