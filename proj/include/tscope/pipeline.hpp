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

#include "tscope/csv.hpp"
#include "tscope/grad_align.hpp"
#include "tscope/manifest.hpp"
#include "tscope/trajectory.hpp"
#include "tscope/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tscope {

struct PipelineConfig {
    Index s_null = 20;
    double alpha = 0.05;
    double ev_target = 0.90;
    Index min_rank = 4;
    Index max_rank = 12;
    Index n_bins = 4;
    Index anchors_per_bin = 6;
    // Used when phase labels are assigned from step values (assign_phases).
    double early_frac = 0.30;
    double late_frac = 0.30;
    Index early_checkpoints = 6;
    Index late_checkpoints = 4;
    std::uint64_t seed = 0;

    void validate() const;
};

// Labels checkpoints in the first early_frac / last late_frac of the step range; others are
// dropped from the returned copy.
RunManifest assign_phases(const RunManifest& m, double early_frac, double late_frac);

// Checkpoints labelled with the phase, ordered by step and subsampled uniformly to at most `limit`.
std::vector<const CheckpointEntry*> select_phase_checkpoints(const RunManifest& m, Phase phase, Index limit);

// Equal-width bins in log10 frequency; up to per_bin anchors from each bin in manifest order.
std::vector<std::vector<const AnchorEntry*>> stratify_anchors(const RunManifest& m, Index n_bins, Index per_bin);

struct SkippedAnchor {
    std::int64_t token_id = 0;
    std::string reason;
};

struct GradPipelineResult {
    Table1Row row;
    std::vector<AnchorSummary> anchors;
    std::vector<Index> tangent_ranks; // rank of Q_T per entry of anchors
    std::vector<SkippedAnchor> skipped;
    std::vector<std::int64_t> steps;
};

GradPipelineResult run_grad_pipeline(const RunManifest& m, const std::string& layer, Phase phase,
                                     const PipelineConfig& config);

struct GeometryPanelOptions {
    // Clouds larger than this are subsampled without replacement before the neighbour estimators.
    Index max_points = 5000;
    Index gmst_repeats = 3;
    Index entropy_k = 10;
    Index sim_topk = 10;
    std::uint64_t seed = 0;
};

struct GeometryRow {
    double id_2nn = 0.0;
    double id_graph = 0.0;
    Index pca70 = 0;
    double r_eff = 0.0;
    double s_m = 0.0;
    double sim_pca = 0.0; // NaN without a previous checkpoint
};

GeometryRow run_geometry_panel(const Matrix& activations, const Matrix* previous, const GeometryPanelOptions& options);
CsvTable geometry_csv(const std::vector<std::int64_t>& steps, const std::string& layer,
                      const std::vector<GeometryRow>& rows);

// Long-format isotropy metrics: rows (step, layer, metric_name, value).
void append_isotropy_metrics(CsvTable& table, std::int64_t step, const std::string& layer, const Matrix& rows,
                             double alpha, const Matrix* previous);
CsvTable isotropy_metrics_table();

struct TrajectoryOptions {
    Index rank = 4;
    double k_start_frac = 0.2;
    Index mc_baseline = 0;
    std::uint64_t seed = 0;
};

struct TrajectoryRow {
    std::int64_t token_id = 0;
    double frequency = 0.0;
    TrajectoryStats stats;
    EnrichmentResult enrichment;
};

struct TrajectoryReport {
    std::vector<TrajectoryRow> rows;
    std::vector<SkippedAnchor> skipped;
    double frequency_correlation = 0.0; // NaN with fewer than three tokens
};

// Builds one series per anchor from the embed tensors of every checkpoint, ordered by step.
std::vector<TrajectorySeries> trajectory_series(const RunManifest& m, double k_start_frac);
TrajectoryReport run_trajectory(const RunManifest& m, const TrajectoryOptions& options);
CsvTable trajectory_csv(const TrajectoryReport& report, bool with_mc);

} // namespace tscope
