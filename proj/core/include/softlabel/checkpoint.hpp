#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "softlabel/model.hpp"

namespace softlabel {

inline constexpr int kCheckpointVersion = 1;

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
};

/// {"format": "softlabel-checkpoint", "version": 1, "config": {...},
///  "tensors": [{"name", "head", "rows", "cols", "values": [...]}, ...]}
/// Tensors appear in ModelParams::for_each_tensor order. Doubles are written in
/// shortest round-trip form, so save/load is bit-exact.
nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace softlabel
