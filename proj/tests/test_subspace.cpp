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
#include "test_util.hpp"
#include "tscope/rng.hpp"
#include "tscope/subspace.hpp"

#include <doctest.h>

#include <cmath>

using namespace tscope;
using test::error_code_of;
using test::TempDir;

namespace {

// Rows with the given per-axis standard deviations, rotated by a random orthogonal matrix.
Matrix scaled_cloud(const Vector& sd, Index n, std::uint64_t seed, Matrix* rotation = nullptr) {
    Rng rng(seed);
    Matrix x = rng.gaussian(n, sd.size());
    x = x * sd.asDiagonal();
    const Matrix q = sample_subspace(sd.size(), sd.size() - 1, seed + 1).columns();
    Matrix rot(sd.size(), sd.size());
    rot << q, complement_basis(OrthonormalBasis(q));
    if (rotation) {
        *rotation = rot;
    }
    return x * rot.transpose();
}

} // namespace

TEST_CASE("orthonormal basis validation") {
    Matrix q = Matrix::Identity(4, 2);
    CHECK(OrthonormalBasis(q).rank() == 2);
    q(0, 0) = 1.1;
    CHECK(error_code_of([&] { OrthonormalBasis{q}; }) == ErrorCode::invalid_argument);
    CHECK(OrthonormalBasis(Matrix(Matrix::Identity(3, 3))).rank() == 3);
}

TEST_CASE("fit_pca rank clamping") {
    // exactly 3-dimensional cloud in R^64 is clamped up to min_rank
    Rng rng(1);
    const Matrix basis = sample_subspace(64, 3, 2).columns();
    const Matrix flat3 = rng.gaussian(200, 3) * basis.transpose();
    const PcaFit up = fit_pca(ActivationCloud::from_rows(flat3), 0.9, 4, 12);
    CHECK(up.basis.rank() == 4);
    const Matrix g = up.basis.columns().transpose() * up.basis.columns();
    CHECK((g - Matrix::Identity(4, 4)).norm() < 1e-10);

    // isotropic cloud needs ~58 components, clamped down to max_rank
    const Matrix iso = rng.gaussian(2000, 64);
    CHECK(fit_pca(ActivationCloud::from_rows(iso), 0.9, 4, 12).basis.rank() == 12);
}

TEST_CASE("fit_pca matches cumulative explained variance") {
    Vector var = Vector::Ones(16);
    var(0) = 100.0;
    var(1) = 10.0;
    const Matrix x = scaled_cloud(var.cwiseSqrt(), 20000, 3);
    const auto cloud = ActivationCloud::from_rows(x);
    const PrincipalAxes axes = principal_axes(cloud.rows);
    Index expect = 0;
    double cum = 0.0;
    while (cum < 0.9 * axes.total_variance) {
        cum += axes.eigenvalues(expect++);
    }
    const PcaFit fit = fit_pca(cloud, 0.9, 1, 15);
    CHECK(fit.basis.rank() == expect);
    CHECK(fit.explained >= 0.9);
    // exact spectrum (100, 10, 1 x 14): 111/124 < 0.9, 112/124 >= 0.9 -> 4
    CHECK(expect == 4);
}

TEST_CASE("sampled normal subspaces") {
    const OrthonormalBasis qt = sample_subspace(8, 3, 4);
    const OrthonormalBasis qn = sample_normal_subspace(qt, 3, 17);
    CHECK((qt.columns().transpose() * qn.columns()).cwiseAbs().maxCoeff() < 1e-10);
    const OrthonormalBasis again = sample_normal_subspace(qt, 3, 17);
    CHECK(again.columns() == qn.columns());
}

TEST_CASE("normal subspace energy is uniform over the complement") {
    const Index d = 64, k = 8;
    const OrthonormalBasis qt = sample_subspace(d, k, 5);
    const Matrix comp = complement_basis(qt);
    const Vector x = comp.col(0);
    double acc = 0.0;
    const int trials = 10000;
    for (int s = 0; s < trials; ++s) {
        const OrthonormalBasis qn = sample_normal_subspace(qt, k, derive_seed(9, static_cast<std::uint64_t>(s)));
        acc += (qn.columns().transpose() * x).squaredNorm() / static_cast<double>(k);
    }
    CHECK(acc / trials == doctest::Approx(1.0 / static_cast<double>(d - k)).epsilon(0.03));
}

TEST_CASE("deterministic comparator") {
    const Index d = 12;
    const OrthonormalBasis qt(Matrix(Matrix::Identity(d, 2)));
    Vector sd = Vector::Constant(d, 0.0);
    sd(0) = sd(1) = 10.0;
    sd(5) = 3.0;
    Rng rng(2);
    Matrix x = rng.gaussian(4000, d) * sd.asDiagonal();
    const auto cloud = ActivationCloud::from_rows(x);
    const OrthonormalBasis c1 = deterministic_normal_comparator(cloud, qt, 1);
    CHECK(std::abs(c1.columns()(5, 0)) >= 0.99);

    // tangent variance plus isotropic noise: comparator directions carry the noise level
    Matrix noisy = rng.gaussian(20000, d) * 0.1;
    noisy.leftCols(2) += rng.gaussian(20000, 2) * 10.0;
    const auto nc = ActivationCloud::from_rows(noisy);
    const OrthonormalBasis cn = deterministic_normal_comparator(nc, qt, 2);
    const Matrix proj = nc.rows * cn.columns();
    const double per_dim = proj.squaredNorm() / static_cast<double>(nc.size() - 1) / 2.0;
    CHECK(per_dim == doctest::Approx(0.01).epsilon(0.15));
    CHECK((qt.columns().transpose() * cn.columns()).cwiseAbs().maxCoeff() < 1e-10);

    const OrthonormalBasis full = deterministic_normal_comparator(cloud, qt, d - 2);
    CHECK(full.rank() == d - 2);
    CHECK((full.projector() + qt.projector() - Matrix::Identity(d, d)).norm() < 1e-9);
    CHECK(error_code_of([&] { deterministic_normal_comparator(cloud, qt, d - 1); }) ==
          ErrorCode::complement_too_small);
}

TEST_CASE("projected energy") {
    const Matrix b = Matrix::Identity(4, 4);
    CHECK(project_energy(b, OrthonormalBasis(Matrix(Matrix::Identity(4, 2)))) == doctest::Approx(1.0));

    Matrix b2 = Matrix::Zero(3, 4);
    b2.leftCols(2) = Rng(1).gaussian(3, 2);
    Matrix null = Matrix::Zero(4, 2);
    null(2, 0) = null(3, 1) = 1.0;
    CHECK(project_energy(b2, OrthonormalBasis(null)) == 0.0);

    const Matrix r = Rng(2).gaussian(5, 6);
    Matrix full(6, 6);
    const OrthonormalBasis half = sample_subspace(6, 3, 3);
    full << half.columns(), complement_basis(half);
    double direct = 0.0;
    for (Index i = 0; i < r.rows(); ++i) {
        for (Index j = 0; j < r.cols(); ++j) {
            direct += r(i, j) * r(i, j);
        }
    }
    CHECK(project_energy(r, OrthonormalBasis(full)) == doctest::Approx(direct / 6.0).epsilon(1e-12));
}

TEST_CASE("subspace distance and sign convention") {
    const OrthonormalBasis a = sample_subspace(10, 3, 1);
    Matrix flipped = a.columns();
    flipped.col(1) *= -1.0;
    CHECK(subspace_distance(a, OrthonormalBasis(flipped)) < 1e-7);
    apply_sign_convention(flipped);
    Matrix ref = a.columns();
    apply_sign_convention(ref);
    CHECK((flipped - ref).norm() < 1e-12);
    const OrthonormalBasis b(complement_basis(a).leftCols(3));
    CHECK(subspace_distance(a, b) == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("basis persistence") {
    TempDir dir("basis");
    const OrthonormalBasis q = sample_subspace(9, 4, 6);
    save_basis(dir / "q.agt", q, {4, 0.9, {0, 500, 1000}});
    BasisSidecar meta;
    const OrthonormalBasis back = load_basis(dir / "q.agt", &meta);
    CHECK(back.columns() == q.columns());
    CHECK(meta.rank == 4);
    CHECK(meta.ev_target == 0.9);
    CHECK(meta.source_steps == std::vector<std::int64_t>{0, 500, 1000});
}
