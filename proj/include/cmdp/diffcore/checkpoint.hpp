#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "cmdp/diffcore/param_vector.hpp"

namespace cmdp {

// Writes `<base>.bin` (little-endian float64 values, no header) and
// `<base>.json` listing {name, shape, offset} per segment. `meta` is stored
// under the sidecar's "meta" key.
void save_checkpoint(const std::filesystem::path& base, const ParamVector& params,
                     const nlohmann::json& meta = nlohmann::json::object());

struct LoadedCheckpoint {
  ParamVector params;
  nlohmann::json meta;
};

// Accepts the base path or either file of the pair.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cmdp
