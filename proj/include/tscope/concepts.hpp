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
#include <optional>
#include <vector>

namespace tscope {

// X ≈ Z H with Z >= 0. Rows of H are the concept directions.
struct ConceptDecomposition {
    Matrix z;
    Matrix h;
    std::vector<double> objective_trace;
    Index iterations = 0;
    bool converged = false;

    // Importance of each concept: column norms of Z.
    Vector concept_weights() const;
};

struct SemiNmfOptions {
    Index max_iters = 500;
    // Stop when the relative objective improvement drops below tol.
    double tol = 1e-6;
    std::uint64_t seed = 0;
};

ConceptDecomposition seminmf(const Matrix& x, Index k, const SemiNmfOptions& options);
// Runs further multiplicative iterations from an existing state; the trace continues from it.
ConceptDecomposition seminmf_continue(const Matrix& x, ConceptDecomposition state, Index iters, double tol);

struct AlignmentReport {
    double best_match = 0.0;
    double top10 = 0.0;
    double weighted = 0.0;
    // R(i, j) = |cos(a_i, b_j)|
    Matrix correlation_matrix;
};

// Column maxima are taken over the rows of c_a for each row of c_b; weights refer to rows of c_b.
AlignmentReport alignment_metrics(const Matrix& c_a, const Matrix& c_b,
                                  const std::optional<std::vector<double>>& weights = std::nullopt);

struct ConceptWeightAlignment {
    // Largest entry of the cross |cosine| matrix.
    double c_w = 0.0;
    double best_match = 0.0;
};

ConceptWeightAlignment concept_weight_alignment(const Matrix& concepts_act, const Matrix& w_next, Index k,
                                                std::uint64_t seed, const SemiNmfOptions& options = {});

} // namespace tscope
