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
#include "tscope/concepts.hpp"

#include "tscope/rng.hpp"
#include "tscope/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace tscope {

namespace {

constexpr double kFloor = 1e-12;

Matrix solve_h(const Matrix& z, const Matrix& x) {
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod{Eigen::MatrixXd(z)};
    return cod.solve(Eigen::MatrixXd(x));
}

double objective(const Matrix& x, const Matrix& z, const Matrix& h) { return (x - z * h).squaredNorm(); }

// Lloyd iterations with k-means++ seeding; returns a cluster label per row.
std::vector<Index> kmeans_labels(const Matrix& pts, Index k, Rng& rng) {
    const Index m = pts.rows();
    Matrix centers(k, pts.cols());
    std::vector<double> d2(static_cast<std::size_t>(m), std::numeric_limits<double>::infinity());
    Index pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m)));
    for (Index c = 0; c < k; ++c) {
        centers.row(c) = pts.row(pick);
        double total = 0.0;
        for (Index i = 0; i < m; ++i) {
            d2[static_cast<std::size_t>(i)] =
                std::min(d2[static_cast<std::size_t>(i)], (pts.row(i) - centers.row(c)).squaredNorm());
            total += d2[static_cast<std::size_t>(i)];
        }
        if (c + 1 == k) {
            break;
        }
        if (total <= 0.0) {
            pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m)));
            continue;
        }
        double target = rng.uniform() * total;
        pick = m - 1;
        for (Index i = 0; i < m; ++i) {
            target -= d2[static_cast<std::size_t>(i)];
            if (target <= 0.0) {
                pick = i;
                break;
            }
        }
    }
    std::vector<Index> label(static_cast<std::size_t>(m), 0);
    for (int it = 0; it < 25; ++it) {
        bool changed = false;
        for (Index i = 0; i < m; ++i) {
            Index best = 0;
            (centers.rowwise() - pts.row(i)).rowwise().squaredNorm().minCoeff(&best);
            if (label[static_cast<std::size_t>(i)] != best) {
                changed = true;
                label[static_cast<std::size_t>(i)] = best;
            }
        }
        if (!changed && it > 0) {
            break;
        }
        Matrix sums = Matrix::Zero(k, pts.cols());
        std::vector<Index> count(static_cast<std::size_t>(k), 0);
        for (Index i = 0; i < m; ++i) {
            sums.row(label[static_cast<std::size_t>(i)]) += pts.row(i);
            ++count[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])];
        }
        for (Index c = 0; c < k; ++c) {
            if (count[static_cast<std::size_t>(c)] > 0) {
                centers.row(c) = sums.row(c) / static_cast<double>(count[static_cast<std::size_t>(c)]);
            }
        }
    }
    return label;
}

Matrix initial_z(const Matrix& x, Index k, std::uint64_t seed) {
    // k-means on the PCA scores, then a softened cluster indicator.
    const ActivationCloud cloud = ActivationCloud::from_rows(x);
    const PrincipalAxes axes = principal_axes(cloud.rows);
    const Index r = std::min<Index>(k, axes.directions.cols());
    Matrix scores = r > 0 ? Matrix(cloud.rows * axes.directions.leftCols(r)) : Matrix(cloud.rows);
    Rng rng(seed);
    const std::vector<Index> label = kmeans_labels(scores, k, rng);
    Matrix z = Matrix::Constant(x.rows(), k, 0.2);
    for (Index i = 0; i < x.rows(); ++i) {
        z(i, label[static_cast<std::size_t>(i)]) += 1.0;
    }
    return z;
}

void update_z(const Matrix& x, Matrix& z, const Matrix& h) {
    const Matrix xh = x * h.transpose();
    const Matrix hh = h * h.transpose();
    const Matrix hh_pos = hh.cwiseMax(0.0);
    const Matrix hh_neg = (-hh).cwiseMax(0.0);
    const Matrix num = xh.cwiseMax(0.0) + z * hh_neg;
    const Matrix den = (-xh).cwiseMax(0.0) + z * hh_pos;
    z = z.cwiseProduct(num.cwiseQuotient(den.cwiseMax(kFloor)).cwiseSqrt());
}

void iterate(const Matrix& x, ConceptDecomposition& d, Index iters, double tol) {
    for (Index it = 0; it < iters; ++it) {
        update_z(x, d.z, d.h);
        d.h = solve_h(d.z, x);
        const double prev = d.objective_trace.back();
        const double cur = objective(x, d.z, d.h);
        d.objective_trace.push_back(cur);
        ++d.iterations;
        if (prev - cur <= tol * std::max(prev, std::numeric_limits<double>::min())) {
            d.converged = true;
            return;
        }
    }
}

Matrix normalized_rows(const Matrix& c, const char* what) {
    Matrix out = c;
    for (Index i = 0; i < c.rows(); ++i) {
        const double n = c.row(i).norm();
        require(n > 0.0 && std::isfinite(n), ErrorCode::degenerate, std::string("zero-norm concept row in ") + what);
        out.row(i) /= n;
    }
    return out;
}

} // namespace

Vector ConceptDecomposition::concept_weights() const { return z.colwise().norm().transpose(); }

ConceptDecomposition seminmf(const Matrix& x, Index k, const SemiNmfOptions& options) {
    require(k >= 1 && k < std::min(x.rows(), x.cols()), ErrorCode::invalid_argument,
            "k must satisfy 1 <= k < min(M, D)");
    require(x.allFinite(), ErrorCode::non_finite, "input matrix has non-finite entries");
    require(options.max_iters >= 0 && options.tol >= 0.0, ErrorCode::invalid_argument, "bad iteration settings");
    ConceptDecomposition d;
    d.z = initial_z(x, k, options.seed);
    d.h = solve_h(d.z, x);
    d.objective_trace.push_back(objective(x, d.z, d.h));
    iterate(x, d, options.max_iters, options.tol);
    return d;
}

ConceptDecomposition seminmf_continue(const Matrix& x, ConceptDecomposition state, Index iters, double tol) {
    require(state.z.rows() == x.rows() && state.h.cols() == x.cols() && state.z.cols() == state.h.rows(),
            ErrorCode::dimension_mismatch, "state does not match the data matrix");
    require((state.z.array() >= 0.0).all(), ErrorCode::invalid_argument, "Z must be non-negative");
    state.converged = false;
    if (state.objective_trace.empty()) {
        state.objective_trace.push_back(objective(x, state.z, state.h));
    }
    iterate(x, state, iters, tol);
    return state;
}

AlignmentReport alignment_metrics(const Matrix& c_a, const Matrix& c_b,
                                  const std::optional<std::vector<double>>& weights) {
    require(c_a.cols() == c_b.cols(), ErrorCode::dimension_mismatch, "concept dimensions differ");
    require(c_a.rows() >= 1 && c_b.rows() >= 1, ErrorCode::invalid_argument, "empty concept set");
    const Matrix a = normalized_rows(c_a, "c_a");
    const Matrix b = normalized_rows(c_b, "c_b");
    AlignmentReport rep;
    rep.correlation_matrix = (a * b.transpose()).cwiseAbs().cwiseMin(1.0);
    const Index kb = b.rows();
    std::vector<double> col_max(static_cast<std::size_t>(kb));
    for (Index j = 0; j < kb; ++j) {
        col_max[static_cast<std::size_t>(j)] = rep.correlation_matrix.col(j).maxCoeff();
    }
    double sum = 0.0;
    for (double v : col_max) {
        sum += v;
    }
    rep.best_match = sum / static_cast<double>(kb);

    std::vector<double> sorted = col_max;
    const std::size_t top = std::min<std::size_t>(10, sorted.size());
    std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(top), sorted.end(),
                      std::greater<>());
    double top_sum = 0.0;
    for (std::size_t i = 0; i < top; ++i) {
        top_sum += sorted[i];
    }
    rep.top10 = top_sum / static_cast<double>(top);

    bool uniform = !weights.has_value();
    if (weights) {
        require(static_cast<Index>(weights->size()) == kb, ErrorCode::dimension_mismatch,
                "one weight per concept of c_b is required");
        double wsum = 0.0;
        for (double w : *weights) {
            require(std::isfinite(w) && w >= 0.0, ErrorCode::invalid_argument, "weights must be non-negative");
            wsum += w;
        }
        require(wsum > 0.0, ErrorCode::invalid_argument, "weights sum to zero");
        uniform = std::all_of(weights->begin(), weights->end(), [&](double w) { return w == weights->front(); });
        if (!uniform) {
            double acc = 0.0;
            for (Index j = 0; j < kb; ++j) {
                acc += (*weights)[static_cast<std::size_t>(j)] / wsum * col_max[static_cast<std::size_t>(j)];
            }
            rep.weighted = acc;
        }
    }
    if (uniform) {
        rep.weighted = rep.best_match;
    }
    return rep;
}

ConceptWeightAlignment concept_weight_alignment(const Matrix& concepts_act, const Matrix& w_next, Index k,
                                                std::uint64_t seed, const SemiNmfOptions& options) {
    require(w_next.cols() == concepts_act.cols(), ErrorCode::dimension_mismatch,
            "weight matrix columns must match the concept dimension");
    SemiNmfOptions opt = options;
    opt.seed = seed;
    const ConceptDecomposition d = seminmf(w_next, k, opt);
    const AlignmentReport rep = alignment_metrics(concepts_act, d.h);
    return {rep.correlation_matrix.maxCoeff(), rep.best_match};
}

} // namespace tscope
