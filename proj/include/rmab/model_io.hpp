#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rmab/model.hpp"

namespace rmab {

/// Parses the model document. Structural problems (missing keys, ragged
/// matrices, non-numeric or non-finite values) throw InvalidModel; semantic
/// invariants are left to validate().
ModelInstance model_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const ModelInstance& model);

ModelInstance load_model(const std::filesystem::path& path);
void save_model(const ModelInstance& model, const std::filesystem::path& path);

}  // namespace rmab
