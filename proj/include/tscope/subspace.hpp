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
#include <vector>

namespace tscope {

class OrthonormalBasis {
public:
    OrthonormalBasis() = default;
    // Validates QᵀQ = I within tol. Full square bases (k == D) are accepted so that complete
    // partitions of the ambient space can be expressed; the fitting and sampling routines
    // below only ever produce k < D.
    explicit OrthonormalBasis(Matrix columns, double tol = 1e-10);

    Index ambient_dim() const { return columns_.rows(); }
    Index rank() const { return columns_.cols(); }
    const Matrix& columns() const { return columns_; }
    Vector column(Index i) const { return columns_.col(i); }
    Matrix projector() const { return columns_ * columns_.transpose(); }

private:
    Matrix columns_;
};

struct ActivationCloud {
    Matrix rows; // centered when centered == true
    Vector mean;
    bool centered = false;

    // Computes the column mean and stores centered rows.
    static ActivationCloud from_rows(const Matrix& raw);
    Index size() const { return rows.rows(); }
    Index dim() const { return rows.cols(); }
    Matrix centered_rows() const;
};

struct PrincipalAxes {
    Vector eigenvalues; // covariance eigenvalues, descending, clipped at zero, length min(M-1, D) or D
    Matrix directions;  // D x eigenvalues.size()
    double total_variance = 0.0;
};

// PCA of already-centered rows; covariance normalised by (M-1). Uses the Gram matrix when M < D.
// Directions whose variance is below 1e-12 of the total are dropped (callers complete them).
PrincipalAxes principal_axes(const Matrix& centered);

struct PcaFit {
    OrthonormalBasis basis;
    Vector eigenvalues;
    double explained = 0.0; // fraction of variance captured by the chosen rank
};

PcaFit fit_pca(const ActivationCloud& cloud, double ev_target, Index min_rank, Index max_rank);
OrthonormalBasis fit_pca_basis(const ActivationCloud& cloud, double ev_target, Index min_rank, Index max_rank);
// Top rank principal directions, completed deterministically if the cloud has fewer.
OrthonormalBasis principal_basis(const ActivationCloud& cloud, Index rank);

OrthonormalBasis sample_normal_subspace(const OrthonormalBasis& qt, Index rank, std::uint64_t seed);
// Haar-random rank-k subspace of R^D.
OrthonormalBasis sample_subspace(Index ambient_dim, Index rank, std::uint64_t seed);
OrthonormalBasis deterministic_normal_comparator(const ActivationCloud& cloud, const OrthonormalBasis& qt,
                                                 Index rank);
// Orthonormal basis of span(q)^perp, D x (D - k).
Matrix complement_basis(const OrthonormalBasis& q);

// ||B Q||_F^2 / rank(Q)
double project_energy(const Matrix& b, const OrthonormalBasis& q);

// sqrt(k - ||AᵀB||_F^2): zero iff the spans coincide (equal ranks).
double subspace_distance(const OrthonormalBasis& a, const OrthonormalBasis& b);

// Flip columns so the largest-magnitude entry of each is positive (first index wins ties).
void apply_sign_convention(Matrix& columns);

struct BasisSidecar {
    Index rank = 0;
    double ev_target = 0.0;
    std::vector<std::int64_t> source_steps;
};

// Writes <path> as a D x k AGT1 tensor and <path>.json with the sidecar record.
void save_basis(const std::filesystem::path& path, const OrthonormalBasis& q, const BasisSidecar& meta);
OrthonormalBasis load_basis(const std::filesystem::path& path, BasisSidecar* meta = nullptr);

} // namespace tscope
