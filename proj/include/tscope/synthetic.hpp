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

#include "tscope/manifest.hpp"
#include "tscope/trajectory.hpp"
#include "tscope/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tscope {

// Generators for synthetic runs with known ground truth.

// n points uniform on [0,1]^plane_dim, mapped isometrically into R^ambient_dim.
Matrix uniform_plane_cloud(Index n, Index ambient_dim, Index plane_dim, std::uint64_t seed);

struct PlantedRunOptions {
    // tangent: δ depends on the tangent coordinates of x. anti: δ depends on a normal block only.
    enum class Mode { tangent, anti };
    Mode mode = Mode::tangent;
    Index n_anchors = 24;
    Index d_in = 32;
    Index d_out = 16;
    Index tangent_rank = 4;
    Index early_checkpoints = 6;
    Index late_checkpoints = 4;
    // Both must exceed tangent_rank + 1.
    Index fit_contexts = 24;
    Index eval_contexts = 24;
    double tangent_scale = 1.0;
    // Spread along a normal block of the same rank as the tangent.
    double normal_scale = 0.0;
    double noise = 0.05;
    double grad_noise = 0.2;
    Index embed_dim = 16;
    std::string layer = "L0";
    std::uint64_t seed = 0;

    // Anti mode with a normal block wide enough to carry the gradients and gradient noise small
    // enough not to leak onto the high-variance tangent block.
    static PlantedRunOptions anti(std::uint64_t seed) {
        PlantedRunOptions o;
        o.mode = Mode::anti;
        o.normal_scale = 0.2;
        o.grad_noise = 0.01;
        o.seed = seed;
        return o;
    }
};

// Writes AGT1 tensors plus manifest.json under dir and returns the loaded manifest.
RunManifest write_planted_run(const std::filesystem::path& dir, const PlantedRunOptions& options);

// Random walk with iid N(0, step² I) increments.
TrajectorySeries isotropic_walk_series(Index t, Index d, double step, std::uint64_t seed);

// Rows confined near a centre: an AR(1) walk of the given radius inside a fixed drift subspace plus
// isotropic jitter.
TrajectorySeries drift_series(Index t, Index d, Index drift_rank, double radius, double jitter, std::uint64_t seed);

// One series per frequency with isotropic deviation scale ∝ f^{-exponent} and multiplicative
// log-normal noise of the given sigma on that scale.
std::vector<TrajectorySeries> frequency_law_series(const std::vector<double>& freqs, Index t, Index d,
                                                   double exponent, double log_noise, std::uint64_t seed);

} // namespace tscope
