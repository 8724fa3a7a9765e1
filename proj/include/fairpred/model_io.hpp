#pragma once

#include <string>

#include "fairpred/debias.hpp"

namespace fairpred {

// Self-describing text format: feature schema (with its hash), outcome,
// normalization constants, and the parameters of both networks as hexfloats.
// Loading rejects files whose stored schema hash does not match the schema
// they carry.
void save_model(const AdversarialModel& model, const std::string& path,
                const std::string& manifest_hash = "-");
AdversarialModel load_model(const std::string& path);

std::string serialize_schema(const FeatureSchema& schema);
std::string schema_hash(const FeatureSchema& schema);

} // namespace fairpred
