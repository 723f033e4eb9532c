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
#include "tscope/trajectory.hpp"

#include "tscope/rng.hpp"
#include "tscope/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tscope {

void TrajectorySeries::validate() const {
    const Index t = rows.rows();
    require(static_cast<Index>(steps.size()) == t, ErrorCode::dimension_mismatch, "one step per checkpoint row");
    for (std::size_t i = 1; i < steps.size(); ++i) {
        require(steps[i] > steps[i - 1], ErrorCode::invalid_argument, "steps must be strictly increasing");
    }
    require(k_start_index >= 0 && k_start_index < t, ErrorCode::invalid_argument, "k_start outside the series");
    require(rows.allFinite(), ErrorCode::non_finite, "trajectory rows are not finite");
}

Index TrajectorySeries::default_k_start(Index n_checkpoints, double frac) {
    require(frac >= 0.0 && frac < 1.0, ErrorCode::invalid_argument, "k_start fraction must be in [0, 1)");
    const Index k = static_cast<Index>(std::floor(frac * static_cast<double>(n_checkpoints)));
    return std::clamp<Index>(k, 0, std::max<Index>(0, n_checkpoints - 2));
}

TrajectoryStats trajectory_stats(const TrajectorySeries& series) {
    series.validate();
    const Index n = series.rows.rows() - series.k_start_index;
    require(n >= 2, ErrorCode::insufficient_samples, "fewer than two post-warmup checkpoints");
    const auto block = series.rows.bottomRows(n);
    const Eigen::RowVectorXd centroid = block.colwise().mean();
    TrajectoryStats s;
    s.min_dist = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double d = (block.row(i) - centroid).norm();
        sum += d;
        s.min_dist = std::min(s.min_dist, d);
        s.max_dist = std::max(s.max_dist, d);
    }
    s.mean_dist = sum / static_cast<double>(n);
    return s;
}

double frequency_correlation(const std::vector<double>& mean_dist, const std::vector<double>& freqs) {
    require(mean_dist.size() == freqs.size(), ErrorCode::dimension_mismatch, "one frequency per token");
    require(mean_dist.size() >= 3, ErrorCode::insufficient_samples, "need at least three tokens");
    const std::size_t n = freqs.size();
    std::vector<double> lf(n);
    for (std::size_t i = 0; i < n; ++i) {
        require(freqs[i] > 0.0, ErrorCode::nonpositive_frequency, "frequencies must be positive");
        lf[i] = std::log10(freqs[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += mean_dist[i];
        my += lf[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = mean_dist[i] - mx, dy = lf[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    require(sxx > 0.0 && syy > 0.0, ErrorCode::degenerate, "zero variance in distance or frequency");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

EnrichmentResult update_enrichment(const TrajectorySeries& series, Index rank, Index n_random, std::uint64_t seed) {
    series.validate();
    const Index d = series.rows.cols();
    const Index n = series.rows.rows() - series.k_start_index;
    require(rank >= 1 && rank < d, ErrorCode::invalid_argument, "rank must satisfy 1 <= rank < D");
    require(n >= rank + 2, ErrorCode::insufficient_samples, "need at least rank + 2 post-warmup checkpoints");
    require(n_random >= 0, ErrorCode::invalid_argument, "n_random must be non-negative");
    const Matrix block = series.rows.bottomRows(n);
    require(block.squaredNorm() > 0.0, ErrorCode::degenerate, "all-zero series");

    const OrthonormalBasis q = principal_basis(ActivationCloud::from_rows(block), rank);
    const Matrix normal = complement_basis(q);
    const double dd = static_cast<double>(d);
    const double rk = static_cast<double>(rank);

    std::vector<Vector> updates;
    for (Index t = 0; t + 1 < n; ++t) {
        Vector du = (block.row(t + 1) - block.row(t)).transpose();
        if (du.squaredNorm() > 0.0) {
            updates.push_back(std::move(du));
        }
    }
    require(!updates.empty(), ErrorCode::degenerate, "every update is zero");

    EnrichmentResult res;
    res.rank = rank;
    res.n_updates = static_cast<Index>(updates.size());
    double tan_sum = 0.0, nor_sum = 0.0, tan_energy = 0.0;
    for (const Vector& du : updates) {
        const double total = du.squaredNorm();
        const double e_t = (q.columns().transpose() * du).squaredNorm();
        const double e_n = (normal.transpose() * du).squaredNorm();
        const double baseline = total / dd;
        res.tangent_per_update.push_back((e_t / rk) / baseline);
        res.normal_per_update.push_back((e_n / (dd - rk)) / baseline);
        tan_sum += res.tangent_per_update.back();
        nor_sum += res.normal_per_update.back();
        tan_energy += e_t / rk;
    }
    const double nu = static_cast<double>(updates.size());
    res.tangent_enrichment = tan_sum / nu;
    res.normal_enrichment = nor_sum / nu;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    res.mc_baseline_ratio = nan;
    res.mc_tangent_enrichment = nan;
    if (n_random > 0) {
        double mc = 0.0, analytic = 0.0;
        for (const Vector& du : updates) {
            analytic += du.squaredNorm() / dd;
        }
        for (Index s = 0; s < n_random; ++s) {
            const OrthonormalBasis r = sample_subspace(d, rank, derive_seed(seed, static_cast<std::uint64_t>(s)));
            for (const Vector& du : updates) {
                mc += (r.columns().transpose() * du).squaredNorm() / rk;
            }
        }
        mc /= static_cast<double>(n_random);
        res.mc_baseline_ratio = mc / analytic;
        res.mc_tangent_enrichment = tan_energy / mc;
    }
    return res;
}

} // namespace tscope
