#pragma once

#include <string>

#include "json.hpp"
#include "erwlab/model.hpp"

namespace erwlab {

/// JSON mirror of ModelSpec. Partition indices are 1-based, infinite bounds are null.
nlohmann::json model_to_json(const ModelSpec& spec);

/// Throws Error{ConfigInvalid} on malformed documents (expression errors propagate).
ModelSpec model_from_json(const nlohmann::json& doc);

ModelSpec load_model_file(const std::string& path);

/// FNV-1a over the canonical dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);

}  // namespace erwlab
