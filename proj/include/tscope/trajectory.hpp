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
#include <vector>

namespace tscope {

struct TrajectorySeries {
    std::int64_t token_id = 0;
    double frequency = 0.0;
    std::vector<std::int64_t> steps;
    Matrix rows; // T x D, one embedding per checkpoint
    Index k_start_index = 0;

    void validate() const;
    // floor(frac * T), clamped so that at least two rows remain.
    static Index default_k_start(Index n_checkpoints, double frac = 0.2);
};

struct TrajectoryStats {
    double mean_dist = 0.0;
    double min_dist = 0.0;
    double max_dist = 0.0;
};

// Distances of rows[k_start..] to their centroid.
TrajectoryStats trajectory_stats(const TrajectorySeries& series);

// Pearson correlation between mean distance and log10(frequency).
double frequency_correlation(const std::vector<double>& mean_dist, const std::vector<double>& freqs);

struct EnrichmentResult {
    double tangent_enrichment = 0.0;
    double normal_enrichment = 0.0;
    Index rank = 0;
    Index n_updates = 0;
    std::vector<double> tangent_per_update;
    std::vector<double> normal_per_update;
    // Mean random-subspace energy per dimension over the analytic ‖Δe‖²/D; NaN unless requested.
    double mc_baseline_ratio = 0.0;
    // Tangent enrichment against the Monte Carlo baseline; NaN unless requested.
    double mc_tangent_enrichment = 0.0;
};

// Tangent basis: top-rank PCA of the post-warmup rows. Updates are consecutive differences of the
// post-warmup rows; zero updates are skipped. n_random = 0 skips the Monte Carlo baseline.
EnrichmentResult update_enrichment(const TrajectorySeries& series, Index rank, Index n_random = 0,
                                   std::uint64_t seed = 0);

} // namespace tscope
