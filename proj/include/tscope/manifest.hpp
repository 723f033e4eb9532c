/*
 * Copyright 2026 The tangentscope Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include "tscope/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace tscope {

enum class Phase { early, late };

const char* to_string(Phase p);
Phase parse_phase(const std::string& s);

// Tensor roles inside a checkpoint's tensor_paths map.
//   act/<layer>   M x D_in activation rows at the probe input
//   grad/<layer>  M x D_out backpropagated gradient rows for the same positions
//   rows/<layer>  M x 2 (token_id, context_id) labelling each row
//   embed         V x D embedding matrix (row = token id unless embed_ids is present)
//   embed_ids     V x 1 token ids for the rows of embed
std::string act_role(const std::string& layer);
std::string grad_role(const std::string& layer);
std::string rows_role(const std::string& layer);
inline const char* embed_role = "embed";
inline const char* embed_ids_role = "embed_ids";

struct CheckpointEntry {
    std::int64_t step = 0;
    Phase phase = Phase::early;
    std::map<std::string, std::filesystem::path> tensor_paths; // resolved against the manifest dir
};

struct AnchorEntry {
    std::int64_t token_id = 0;
    std::string token_text;
    double frequency = 0.0;
    std::vector<std::int64_t> fit_context_ids;
    std::vector<std::int64_t> eval_context_ids;
};

struct RunManifest {
    std::string model_id;
    std::int64_t hidden_dim = 0;
    std::vector<CheckpointEntry> checkpoints;
    std::vector<AnchorEntry> anchors;
    std::filesystem::path directory;

    std::vector<const CheckpointEntry*> in_phase(Phase p) const;
    const std::filesystem::path& tensor(const CheckpointEntry& c, const std::string& role) const;
};

RunManifest load_manifest(const std::filesystem::path& path);
// Parses JSON text; relative tensor paths are resolved against base_dir and checked to exist.
RunManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir);
// Writes tensor paths relative to the manifest's directory when possible.
void save_manifest(const std::filesystem::path& path, const RunManifest& m);

} // namespace tscope
