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

inline constexpr Index max_neighbor_points = 20000;

struct PointCloud {
    Matrix points;
    bool distinct = false;

    explicit PointCloud(Matrix pts) : points(std::move(pts)) {}
    // Drops exact duplicate rows (first occurrence kept) and marks the cloud distinct.
    static PointCloud deduplicated(const Matrix& pts);
    Index size() const { return points.rows(); }
};

struct NeighborTable {
    Matrix distance; // N x k, ascending per row, self excluded
    Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> index;
};

// Exact brute-force k nearest neighbours over the SIMD distance kernel.
NeighborTable knn_search(const Matrix& points, Index k);

// N / Σ ln(r2 / r1)
double twonn_id(const PointCloud& cloud);

struct GmstResult {
    double dimension = 0.0; // 1 / (1 - slope)
    double slope = 0.0;     // d ln L / d ln n
    std::vector<Index> sizes;
    std::vector<double> mean_log_length;
};

// Total Euclidean length of the minimum spanning tree. Built on the symmetrised k=10 neighbour
// graph; falls back to the dense O(n^2) tree when that graph is disconnected.
double mst_length(const Matrix& points);
double mst_length_dense(const Matrix& points);

GmstResult gmst_id(const PointCloud& cloud, std::vector<Index> subsample_sizes, Index repeats, std::uint64_t seed);
// Five sizes spaced geometrically from max(20, N/8) to N.
std::vector<Index> default_gmst_sizes(Index n);

struct KnnEntropy {
    double entropy = 0.0;
    double intrinsic_dim = 0.0;
    double total_length = 0.0;
    Index k = 0;
};

// kNN-graph length functional with edge exponent 1. With L the summed k-nearest-neighbour edge
// lengths, N points and intrinsic dimension m (alpha = (m - 1) / m):
//     H = m * ( ln(L / k) - alpha * ln N )
// which is the order-alpha Renyi entropy estimate up to the constant -m ln(beta_{m,k}). Scaling
// the cloud by c adds m ln c. When intrinsic_dim <= 0 it is estimated with TwoNN.
KnnEntropy knn_graph_entropy(const PointCloud& cloud, Index k, double intrinsic_dim = 0.0);

} // namespace tscope
