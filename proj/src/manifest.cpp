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
#include "tscope/manifest.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace tscope {

using nlohmann::json;

const char* to_string(Phase p) { return p == Phase::early ? "early" : "late"; }

Phase parse_phase(const std::string& s) {
    if (s == "early") {
        return Phase::early;
    }
    if (s == "late") {
        return Phase::late;
    }
    throw Error(ErrorCode::manifest_invalid, "phase must be \"early\" or \"late\", got \"" + s + "\"");
}

std::string act_role(const std::string& layer) { return "act/" + layer; }
std::string grad_role(const std::string& layer) { return "grad/" + layer; }
std::string rows_role(const std::string& layer) { return "rows/" + layer; }

std::vector<const CheckpointEntry*> RunManifest::in_phase(Phase p) const {
    std::vector<const CheckpointEntry*> out;
    for (const auto& c : checkpoints) {
        if (c.phase == p) {
            out.push_back(&c);
        }
    }
    return out;
}

const std::filesystem::path& RunManifest::tensor(const CheckpointEntry& c, const std::string& role) const {
    auto it = c.tensor_paths.find(role);
    require(it != c.tensor_paths.end(), ErrorCode::missing_tensor,
            "checkpoint " + std::to_string(c.step) + " has no tensor for role " + role);
    return it->second;
}

namespace {

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
    require(j.contains(key), ErrorCode::manifest_invalid, where + ": missing field \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::manifest_invalid, where + ": field \"" + key + "\" " + e.what());
    }
}

void validate(const RunManifest& m) {
    require(!m.model_id.empty(), ErrorCode::manifest_invalid, "model_id is empty");
    require(m.hidden_dim >= 1, ErrorCode::manifest_invalid, "hidden_dim must be positive");
    require(!m.checkpoints.empty(), ErrorCode::manifest_invalid, "no checkpoints listed");

    std::set<std::int64_t> steps;
    std::int64_t last_early = INT64_MIN;
    std::int64_t first_late = INT64_MAX;
    for (const auto& c : m.checkpoints) {
        require(steps.insert(c.step).second, ErrorCode::manifest_invalid,
                "step " + std::to_string(c.step) + " listed twice");
        if (c.phase == Phase::early) {
            last_early = std::max(last_early, c.step);
        } else {
            first_late = std::min(first_late, c.step);
        }
        for (const auto& [role, p] : c.tensor_paths) {
            require(std::filesystem::exists(p), ErrorCode::missing_tensor,
                    "step " + std::to_string(c.step) + " role " + role + ": " + p.string() + " not found");
        }
    }
    require(last_early < first_late, ErrorCode::manifest_invalid,
            "early and late phases overlap in step order");

    std::set<std::int64_t> tokens;
    for (const auto& a : m.anchors) {
        const std::string who = "anchor " + std::to_string(a.token_id);
        require(tokens.insert(a.token_id).second, ErrorCode::manifest_invalid, who + " listed twice");
        require(a.frequency > 0.0, ErrorCode::nonpositive_frequency, who + " has frequency <= 0");
        require(a.frequency <= 1.0, ErrorCode::manifest_invalid, who + " has frequency > 1");
        std::set<std::int64_t> fit(a.fit_context_ids.begin(), a.fit_context_ids.end());
        for (auto id : a.eval_context_ids) {
            require(!fit.count(id), ErrorCode::context_overlap,
                    who + ": context " + std::to_string(id) + " is in both fit and eval sets");
        }
    }
}

} // namespace

RunManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::manifest_invalid, e.what());
    }
    RunManifest m;
    m.directory = base_dir;
    m.model_id = field<std::string>(j, "model_id", "manifest");
    m.hidden_dim = field<std::int64_t>(j, "hidden_dim", "manifest");
    for (const auto& jc : field<json>(j, "checkpoints", "manifest")) {
        CheckpointEntry c;
        c.step = field<std::int64_t>(jc, "step", "checkpoint");
        const std::string where = "checkpoint " + std::to_string(c.step);
        c.phase = parse_phase(field<std::string>(jc, "phase", where));
        const json paths = field<json>(jc, "tensor_paths", where);
        require(paths.is_object(), ErrorCode::manifest_invalid, where + ": tensor_paths must be an object");
        for (const auto& [role, rel] : paths.items()) {
            require(rel.is_string(), ErrorCode::manifest_invalid, where + ": tensor path for " + role + " is not a string");
            std::filesystem::path p = rel.get<std::string>();
            c.tensor_paths[role] = p.is_absolute() ? p : base_dir / p;
        }
        m.checkpoints.push_back(std::move(c));
    }
    for (const auto& ja : field<json>(j, "anchors", "manifest")) {
        AnchorEntry a;
        a.token_id = field<std::int64_t>(ja, "token_id", "anchor");
        const std::string where = "anchor " + std::to_string(a.token_id);
        a.token_text = field<std::string>(ja, "token_text", where);
        a.frequency = field<double>(ja, "frequency", where);
        a.fit_context_ids = field<std::vector<std::int64_t>>(ja, "fit_context_ids", where);
        a.eval_context_ids = field<std::vector<std::int64_t>>(ja, "eval_context_ids", where);
        m.anchors.push_back(std::move(a));
    }
    validate(m);
    return m;
}

RunManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open manifest " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str(), path.parent_path());
}

void save_manifest(const std::filesystem::path& path, const RunManifest& m) {
    json j;
    j["model_id"] = m.model_id;
    j["hidden_dim"] = m.hidden_dim;
    j["checkpoints"] = json::array();
    const auto dir = path.parent_path();
    for (const auto& c : m.checkpoints) {
        json jc;
        jc["step"] = c.step;
        jc["phase"] = to_string(c.phase);
        jc["tensor_paths"] = json::object();
        for (const auto& [role, p] : c.tensor_paths) {
            auto rel = p.lexically_relative(dir);
            jc["tensor_paths"][role] = (rel.empty() ? p : rel).generic_string();
        }
        j["checkpoints"].push_back(jc);
    }
    j["anchors"] = json::array();
    for (const auto& a : m.anchors) {
        j["anchors"].push_back({{"token_id", a.token_id},
                                {"token_text", a.token_text},
                                {"frequency", a.frequency},
                                {"fit_context_ids", a.fit_context_ids},
                                {"eval_context_ids", a.eval_context_ids}});
    }
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::io, "cannot write manifest " + path.string());
    out << j.dump(2) << '\n';
}

} // namespace tscope
