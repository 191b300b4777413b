#pragma once

#include "json.hpp"

#include "surfkern/earth_model.hpp"
#include "surfkern/inversion.hpp"
#include "surfkern/surrogate.hpp"

namespace surfkern {

void to_json(nlohmann::json& j, const MaskPolicy& p);
void from_json(const nlohmann::json& j, MaskPolicy& p);
void to_json(nlohmann::json& j, const TrainingConfig& c);
void from_json(const nlohmann::json& j, TrainingConfig& c);
void to_json(nlohmann::json& j, const PriorConfig& c);
void from_json(const nlohmann::json& j, PriorConfig& c);
void to_json(nlohmann::json& j, const InversionConfig& c);
void from_json(const nlohmann::json& j, InversionConfig& c);

/// Layout: version, layer sizes, per-layer row-major weights and biases,
/// normalizer statistics, training config, loss history, dataset fingerprint.
nlohmann::json checkpoint_to_json(const SurrogateCheckpoint& ckpt);
/// Throws CheckpointFormatError on missing fields, wrong sizes or version.
SurrogateCheckpoint checkpoint_from_json(const nlohmann::json& doc);

}  // namespace surfkern
