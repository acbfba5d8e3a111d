#pragma once

#include <string>

#include <json.hpp>

#include "fuzzvad/nn/graph.hpp"

namespace fuzzvad::nn {

// A checkpoint is a directory holding
//   params.bin     parameter values in registration order, little-endian float32
//   manifest.json  {"format": "fuzzvad-checkpoint", "version": 1,
//                   "parameters": [{"name", "shape", "offset", "count"}...],
//                   "metadata": {...caller data: seed, config...}}

void save_checkpoint(const std::string& dir, const ParameterSet& params, const nlohmann::json& metadata);

struct Checkpoint {
    nlohmann::json metadata;
};

/// Loads values into an already-built parameter set. Names, order and shapes
/// must match the manifest exactly.
Checkpoint load_checkpoint(const std::string& dir, ParameterSet& params);

/// Reads only the manifest's metadata block.
nlohmann::json read_checkpoint_metadata(const std::string& dir);

}  // namespace fuzzvad::nn
