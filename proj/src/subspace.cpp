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
#include "tscope/subspace.hpp"

#include "tscope/rng.hpp"
#include "tscope/tensor_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace tscope {

namespace {

constexpr double variance_floor = 1e-12;

Index argmax_abs(const Eigen::Ref<const Vector>& v) {
    Index best = 0;
    for (Index i = 1; i < v.size(); ++i) {
        if (std::abs(v[i]) > std::abs(v[best])) {
            best = i;
        }
    }
    return best;
}

// Modified Gram-Schmidt of `v` against the columns of `against`, applied twice.
Vector orthogonalize(Vector v, const Matrix& against) {
    for (int pass = 0; pass < 2; ++pass) {
        for (Index j = 0; j < against.cols(); ++j) {
            v -= against.col(j).dot(v) * against.col(j);
        }
    }
    return v;
}

// Appends coordinate axes (in index order) orthogonalized against `fixed` and the columns
// gathered so far until `cols` has `target` columns.
Matrix complete_with_axes(Matrix cols, const Matrix& fixed, Index target) {
    const Index d = fixed.rows() > 0 ? fixed.rows() : cols.rows();
    for (Index axis = 0; axis < d && cols.cols() < target; ++axis) {
        Vector e = Vector::Zero(d);
        e[axis] = 1.0;
        Vector v = orthogonalize(orthogonalize(e, fixed), cols);
        const double n = v.norm();
        if (n > 1e-6) {
            cols.conservativeResize(d, cols.cols() + 1);
            cols.col(cols.cols() - 1) = v / n;
        }
    }
    require(cols.cols() == target, ErrorCode::complement_too_small, "could not complete basis");
    return cols;
}

// Re-orthonormalise `cols` against `fixed` and among themselves (twice) to reach 1e-15 level.
Matrix clean_orthonormal(const Matrix& cols, const Matrix& fixed) {
    Matrix out(cols.rows(), 0);
    for (Index j = 0; j < cols.cols(); ++j) {
        Vector v = orthogonalize(orthogonalize(cols.col(j), fixed), out);
        const double n = v.norm();
        require(n > 1e-8, ErrorCode::degenerate, "basis columns are linearly dependent");
        out.conservativeResize(cols.rows(), out.cols() + 1);
        out.col(out.cols() - 1) = v / n;
    }
    return out;
}

} // namespace

OrthonormalBasis::OrthonormalBasis(Matrix columns, double tol) : columns_(std::move(columns)) {
    require(columns_.cols() >= 1 && columns_.cols() <= columns_.rows(), ErrorCode::invalid_argument,
            "basis rank must be in [1, D]");
    const Matrix gram = columns_.transpose() * columns_;
    const double err = (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    require(err <= tol, ErrorCode::invalid_argument, "columns are not orthonormal (max |QᵀQ - I| = " +
                                                         std::to_string(err) + ")");
}

ActivationCloud ActivationCloud::from_rows(const Matrix& raw) {
    require(raw.rows() >= 2, ErrorCode::invalid_argument, "a cloud needs at least 2 rows");
    require(raw.allFinite(), ErrorCode::non_finite, "cloud contains non-finite values");
    ActivationCloud c;
    c.mean = raw.colwise().mean().transpose();
    c.rows = raw.rowwise() - c.mean.transpose();
    c.centered = true;
    return c;
}

Matrix ActivationCloud::centered_rows() const {
    if (centered) {
        return rows;
    }
    return rows.rowwise() - mean.transpose();
}

void apply_sign_convention(Matrix& columns) {
    for (Index j = 0; j < columns.cols(); ++j) {
        Vector c = columns.col(j);
        if (c[argmax_abs(c)] < 0) {
            columns.col(j) = -c;
        }
    }
}

PrincipalAxes principal_axes(const Matrix& x) {
    const Index m = x.rows();
    const Index d = x.cols();
    require(m >= 2, ErrorCode::invalid_argument, "principal axes need at least 2 rows");
    const double denom = static_cast<double>(m - 1);

    Vector vals;
    Matrix vecs;
    if (d <= m) {
        Eigen::MatrixXd cov = (x.transpose() * x) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        vals = es.eigenvalues();
        vecs = es.eigenvectors();
    } else {
        Eigen::MatrixXd gram = (x * x.transpose()) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        vals = es.eigenvalues();
        vecs.resize(d, m);
        for (Index i = 0; i < m; ++i) {
            const double lam = std::max(vals[i], 0.0);
            if (lam > 0.0) {
                vecs.col(i) = x.transpose() * es.eigenvectors().col(i) / std::sqrt(lam * denom);
            } else {
                vecs.col(i).setZero();
            }
        }
    }

    PrincipalAxes out;
    out.total_variance = x.squaredNorm() / denom;
    const double floor = variance_floor * out.total_variance;
    std::vector<Index> keep;
    for (Index i = 0; i < vals.size(); ++i) {
        if (vals[i] > floor) {
            keep.push_back(i);
        }
    }
    const double tie = 1e-12 * (vals.size() ? std::max(vals.maxCoeff(), 0.0) : 0.0);
    // Descending eigenvalue; ties broken by the coordinate index of each direction's largest entry.
    std::stable_sort(keep.begin(), keep.end(), [&](Index a, Index b) {
        if (std::abs(vals[a] - vals[b]) > tie) {
            return vals[a] > vals[b];
        }
        return argmax_abs(vecs.col(a)) < argmax_abs(vecs.col(b));
    });
    out.eigenvalues.resize(static_cast<Index>(keep.size()));
    out.directions.resize(d, static_cast<Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.eigenvalues[static_cast<Index>(i)] = vals[keep[i]];
        out.directions.col(static_cast<Index>(i)) = vecs.col(keep[i]);
    }
    return out;
}

namespace {

OrthonormalBasis basis_from_axes(const PrincipalAxes& axes, Index rank, Index d) {
    const Index take = std::min(rank, axes.directions.cols());
    Matrix cols = axes.directions.leftCols(take);
    cols = clean_orthonormal(cols, Matrix(d, 0));
    if (cols.cols() < rank) {
        cols = complete_with_axes(cols, Matrix(d, 0), rank);
    }
    apply_sign_convention(cols);
    return OrthonormalBasis(cols);
}

} // namespace

PcaFit fit_pca(const ActivationCloud& cloud, double ev_target, Index min_rank, Index max_rank) {
    const Index d = cloud.dim();
    require(ev_target > 0.0 && ev_target <= 1.0, ErrorCode::invalid_argument, "ev_target must be in (0, 1]");
    require(min_rank >= 1 && min_rank <= max_rank && max_rank < d, ErrorCode::invalid_argument,
            "need 1 <= min_rank <= max_rank < D");
    require(cloud.size() >= max_rank + 1, ErrorCode::invalid_argument,
            "cloud has " + std::to_string(cloud.size()) + " rows, need at least max_rank + 1");

    const PrincipalAxes axes = principal_axes(cloud.centered_rows());
    require(axes.total_variance > 0.0, ErrorCode::degenerate, "cloud has zero total variance");

    Index k = axes.eigenvalues.size();
    double cum = 0.0;
    for (Index i = 0; i < axes.eigenvalues.size(); ++i) {
        cum += axes.eigenvalues[i];
        if (cum / axes.total_variance >= ev_target - 1e-12) {
            k = i + 1;
            break;
        }
    }
    const Index rank = std::clamp(k, min_rank, max_rank);
    PcaFit fit{basis_from_axes(axes, rank, d), axes.eigenvalues, 0.0};
    fit.explained = axes.eigenvalues.head(std::min(rank, axes.eigenvalues.size())).sum() / axes.total_variance;
    return fit;
}

OrthonormalBasis fit_pca_basis(const ActivationCloud& cloud, double ev_target, Index min_rank, Index max_rank) {
    return fit_pca(cloud, ev_target, min_rank, max_rank).basis;
}

OrthonormalBasis principal_basis(const ActivationCloud& cloud, Index rank) {
    require(rank >= 1 && rank < cloud.dim(), ErrorCode::invalid_argument, "need 1 <= rank < D");
    const PrincipalAxes axes = principal_axes(cloud.centered_rows());
    require(axes.total_variance > 0.0, ErrorCode::degenerate, "cloud has zero total variance");
    return basis_from_axes(axes, rank, cloud.dim());
}

Matrix complement_basis(const OrthonormalBasis& q) {
    const Index d = q.ambient_dim();
    const Index k = q.rank();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(q.columns()));
    Eigen::MatrixXd full = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
    return full.rightCols(d - k);
}

OrthonormalBasis sample_normal_subspace(const OrthonormalBasis& qt, Index rank, std::uint64_t seed) {
    const Index d = qt.ambient_dim();
    require(rank >= 1, ErrorCode::invalid_argument, "rank must be positive");
    require(d - qt.rank() >= rank, ErrorCode::complement_too_small,
            "complement has dimension " + std::to_string(d - qt.rank()) + " < " + std::to_string(rank));
    Rng rng(seed);
    Matrix g = rng.gaussian(d, rank);
    const Matrix& q = qt.columns();
    g -= q * (q.transpose() * g);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr{Eigen::MatrixXd(g)};
    Matrix thin = qr.householderQ() * Eigen::MatrixXd::Identity(d, rank);
    // Householder Q carries the sign of R's diagonal; undo it so the law is Haar.
    const Eigen::MatrixXd r = qr.matrixQR().topRows(rank).triangularView<Eigen::Upper>();
    for (Index j = 0; j < rank; ++j) {
        if (r(j, j) < 0) {
            thin.col(j) = -thin.col(j);
        }
    }
    return OrthonormalBasis(clean_orthonormal(thin, q));
}

OrthonormalBasis sample_subspace(Index ambient_dim, Index rank, std::uint64_t seed) {
    require(rank >= 1 && rank <= ambient_dim, ErrorCode::invalid_argument, "need 1 <= rank <= D");
    Rng rng(seed);
    Matrix g = rng.gaussian(ambient_dim, rank);
    return OrthonormalBasis(clean_orthonormal(g, Matrix(ambient_dim, 0)));
}

OrthonormalBasis deterministic_normal_comparator(const ActivationCloud& cloud, const OrthonormalBasis& qt,
                                                 Index rank) {
    const Index d = qt.ambient_dim();
    require(cloud.dim() == d, ErrorCode::dimension_mismatch, "cloud and basis dimensions differ");
    require(rank >= 1, ErrorCode::invalid_argument, "rank must be positive");
    require(d - qt.rank() >= rank, ErrorCode::complement_too_small,
            "complement has dimension " + std::to_string(d - qt.rank()) + " < " + std::to_string(rank));
    const Matrix& q = qt.columns();
    Matrix x = cloud.centered_rows();
    const double total = x.squaredNorm();
    x -= (x * q) * q.transpose();

    Matrix cols(d, 0);
    if (x.squaredNorm() > variance_floor * total && x.rows() >= 2) {
        const PrincipalAxes axes = principal_axes(x);
        const Index take = std::min(rank, axes.directions.cols());
        cols = clean_orthonormal(axes.directions.leftCols(take), q);
    }
    if (cols.cols() < rank) {
        cols = complete_with_axes(cols, q, rank);
    }
    apply_sign_convention(cols);
    return OrthonormalBasis(cols);
}

double project_energy(const Matrix& b, const OrthonormalBasis& q) {
    require(b.cols() == q.ambient_dim(), ErrorCode::dimension_mismatch,
            "B has " + std::to_string(b.cols()) + " columns, basis lives in R^" + std::to_string(q.ambient_dim()));
    return (b * q.columns()).squaredNorm() / static_cast<double>(q.rank());
}

double subspace_distance(const OrthonormalBasis& a, const OrthonormalBasis& b) {
    require(a.ambient_dim() == b.ambient_dim() && a.rank() == b.rank(), ErrorCode::dimension_mismatch,
            "subspace distance needs equal shapes");
    const double overlap = (a.columns().transpose() * b.columns()).squaredNorm();
    return std::sqrt(std::max(0.0, static_cast<double>(a.rank()) - overlap));
}

void save_basis(const std::filesystem::path& path, const OrthonormalBasis& q, const BasisSidecar& meta) {
    write_tensor(path, q.columns(), dtype_f64);
    nlohmann::json j{{"rank", meta.rank}, {"ev_target", meta.ev_target}, {"source_steps", meta.source_steps}};
    std::ofstream out(path.string() + ".json");
    require(static_cast<bool>(out), ErrorCode::io, "cannot write sidecar for " + path.string());
    out << j.dump(2) << '\n';
}

OrthonormalBasis load_basis(const std::filesystem::path& path, BasisSidecar* meta) {
    OrthonormalBasis q(read_tensor(path));
    if (meta) {
        std::ifstream in(path.string() + ".json");
        require(static_cast<bool>(in), ErrorCode::io, "missing sidecar for " + path.string());
        const auto j = nlohmann::json::parse(in);
        meta->rank = j.at("rank").get<Index>();
        meta->ev_target = j.at("ev_target").get<double>();
        meta->source_steps = j.at("source_steps").get<std::vector<std::int64_t>>();
    }
    return q;
}

} // namespace tscope
