#pragma once

#include <filesystem>
#include <string>

#include "facnet/model.hpp"

namespace facnet {

/// Strict schema: required input_shape [C,T,F], blocks, head{n_classes};
/// optional per-block kernel/activation/batchnorm/pool/padding_mode/
/// fac_mode/fdy_k and head gru_hidden. Unknown fields anywhere are rejected
/// with std::invalid_argument naming the field.
ModelConfig model_config_from_json(const std::string& text);

std::string model_config_to_json(const ModelConfig& config);

/// Reads and parses the file; throws std::invalid_argument on a missing or
/// malformed file.
ModelConfig load_model_config(const std::filesystem::path& path);

}  // namespace facnet
