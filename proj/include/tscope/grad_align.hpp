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
#include "tscope/isotropy.hpp"
#include "tscope/subspace.hpp"
#include "tscope/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tscope {

struct GradientMatrix {
    Matrix b; // D_out x D_in
    Index n_tokens = 0;
    std::int64_t step = 0;
    std::string layer;
};

// B = Σ_j δ_j (x_j - μ)ᵀ, accumulated row by row through the axpy kernel.
GradientMatrix build_gradient_matrix(const Matrix& deltas, const Matrix& activations, const Vector& mean);

struct EnergyTestResult {
    double e_tangent = 0.0;
    double e_normal_det = 0.0;
    double r_energy = 0.0;        // +inf when ratio_infinite, NaN when both energies vanish
    bool ratio_infinite = false;  // comparator energy is zero at working precision
    double p_energy = 1.0;
    Index s_samples = 0;
    Index exceed_count = 0;       // #{s : E(Q_N^(s)) >= E(Q_T)}
};

// Comparator energies at or below this fraction of ||B||_F^2 are treated as exactly zero.
inline constexpr double zero_energy_fraction = 1e-24;

// Null subspaces use seeds derive_seed(seed, s) for s = 0..S-1.
EnergyTestResult energy_test(const Matrix& b, const OrthonormalBasis& qt, const ActivationCloud& cloud, Index s,
                             std::uint64_t seed);
// Same test with a precomputed comparator.
EnergyTestResult energy_test(const Matrix& b, const OrthonormalBasis& qt, const OrthonormalBasis& comparator,
                             Index s, std::uint64_t seed);

struct IsoRemovalResult {
    double iso_base = 0.0;
    double iso_removed_t = 0.0;
    double iso_removed_n = 0.0;
    double delta_iso_t = 0.0;
    double delta_iso_n = 0.0;
    double pct_t = 0.0; // NaN when iso_base == 0
    double pct_n = 0.0;
    bool base_degenerate = false;
    bool residual_t_degenerate = false; // removal left the zero matrix
    bool residual_n_degenerate = false;
};

// Removal is B(I - QQᵀ); base and residual covariances are both shrunk with alpha.
IsoRemovalResult iso_removal_test(const Matrix& b, const OrthonormalBasis& qt, const OrthonormalBasis& qn,
                                  double alpha);

// One-sided exact sign test: P[Binom(n, 1/2) >= #{d > 0}].
double sign_test(const std::vector<double>& d_values);
double binomial_upper_tail_half(Index n, Index m);

struct AnchorSummary {
    std::int64_t token_id = 0;
    double frequency = 0.0;
    std::vector<std::int64_t> steps;
    std::vector<EnergyTestResult> energy;
    std::vector<IsoRemovalResult> iso;
    double d_a = 0.0;

    void add(std::int64_t step, const EnergyTestResult& e, const IsoRemovalResult& r);
    // Recomputes d_a as the mean over checkpoints of (delta_t - delta_n).
    void finalize();
    double mean_r_energy() const;
    double mean_p_energy() const;
    double mean_pct_t() const;
    double mean_pct_n() const;
};

struct Table1Row {
    std::string layer;
    std::string phase;
    double e_r = 0.0;
    double p_e_null = 0.0;
    double d_iso_t_pct = 0.0;
    double d_iso_n_pct = 0.0;
    double p_sign = 0.0;
    Index n_anchors = 0;
};

// Mean R_energy, min p_energy, mean percentages and the sign test over d_a across anchors.
Table1Row aggregate_anchors(const std::string& layer, const std::string& phase,
                            const std::vector<AnchorSummary>& summaries);

CsvTable table1_csv(const std::vector<Table1Row>& rows);

} // namespace tscope
