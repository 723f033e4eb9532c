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
#include "tscope/intrinsic_dim.hpp"
#include "tscope/rng.hpp"
#include "tscope/subspace.hpp"
#include "tscope/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace tscope;
using test::error_code_of;

namespace {

Matrix helix(Index n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix x(n, 3);
    for (Index i = 0; i < n; ++i) {
        const double s = 4.0 * std::numbers::pi * rng.uniform();
        x(i, 0) = std::cos(s);
        x(i, 1) = std::sin(s);
        x(i, 2) = 0.3 * s;
    }
    return x;
}

Matrix rotate(const Matrix& x, std::uint64_t seed) {
    const Index d = x.cols();
    const OrthonormalBasis q = sample_subspace(d, d - 1, seed);
    Matrix r(d, d);
    r << q.columns(), complement_basis(q);
    return x * r.transpose();
}

} // namespace

TEST_CASE("knn search matches brute force") {
    const Matrix x = Rng(1).gaussian(60, 5);
    const NeighborTable t = knn_search(x, 4);
    for (Index i = 0; i < x.rows(); ++i) {
        Vector d(x.rows());
        for (Index j = 0; j < x.rows(); ++j) {
            d(j) = j == i ? INFINITY : (x.row(i) - x.row(j)).norm();
        }
        std::sort(d.data(), d.data() + d.size());
        for (Index c = 0; c < 4; ++c) {
            CHECK(t.distance(i, c) == doctest::Approx(d(c)).epsilon(1e-12));
        }
    }
    CHECK(error_code_of([&] { knn_search(x, 60); }) == ErrorCode::invalid_argument);
}

TEST_CASE("twonn on generator truth") {
    Matrix line = uniform_plane_cloud(2000, 8, 1, 3);
    CHECK(twonn_id(PointCloud(line)) == doctest::Approx(1.0).epsilon(0.1));
    const double plane = twonn_id(PointCloud(uniform_plane_cloud(2000, 8, 2, 4)));
    CHECK(plane >= 1.8);
    CHECK(plane <= 2.2);

    Matrix dup = uniform_plane_cloud(50, 3, 2, 5);
    dup.row(7) = dup.row(3);
    CHECK(error_code_of([&] { twonn_id(PointCloud(dup)); }) == ErrorCode::duplicate_points);
    CHECK(PointCloud::deduplicated(dup).size() == 49);
}

TEST_CASE("gmst on generator truth") {
    const PointCloud plane(uniform_plane_cloud(2000, 8, 2, 6));
    const auto r = gmst_id(plane, default_gmst_sizes(plane.size()), 3, 11);
    CHECK(r.dimension >= 1.7);
    CHECK(r.dimension <= 2.4);
    CHECK(gmst_id(plane, default_gmst_sizes(plane.size()), 3, 11).dimension == r.dimension);

    const PointCloud curve(helix(2000, 7));
    const double m = gmst_id(curve, default_gmst_sizes(curve.size()), 3, 12).dimension;
    CHECK(m >= 0.8);
    CHECK(m <= 1.3);
}

TEST_CASE("sparse and dense spanning trees agree") {
    const Matrix x = Rng(3).gaussian(300, 4);
    CHECK(mst_length(x) == doctest::Approx(mst_length_dense(x)).epsilon(1e-12));
    // two far clusters: the 10-NN graph is disconnected
    Matrix two = Rng(4).gaussian(40, 2);
    two.bottomRows(20).array() += 1000.0;
    CHECK(mst_length(two) == doctest::Approx(mst_length_dense(two)).epsilon(1e-12));
}

TEST_CASE("knn entropy transforms") {
    const Matrix a = uniform_plane_cloud(1500, 6, 2, 8);
    const auto base = knn_graph_entropy(PointCloud(a), 10, 2.0);
    Matrix shifted = a;
    shifted.rowwise() += Eigen::RowVectorXd::Constant(6, 3.7);
    CHECK(knn_graph_entropy(PointCloud(shifted), 10, 2.0).entropy == doctest::Approx(base.entropy).epsilon(1e-9));
    const auto doubled = knn_graph_entropy(PointCloud(Matrix(2.0 * a)), 10, 2.0);
    CHECK(doubled.entropy - base.entropy == doctest::Approx(2.0 * std::log(2.0)).epsilon(0.05));
    CHECK(knn_graph_entropy(PointCloud(rotate(a, 2)), 10, 2.0).entropy ==
          doctest::Approx(base.entropy).epsilon(1e-9));

    const Matrix g = Rng(9).gaussian(500, 3);
    CHECK(knn_graph_entropy(PointCloud(Matrix(1e-3 * g)), 10).entropy < knn_graph_entropy(PointCloud(g), 10).entropy);
    CHECK(error_code_of([] { knn_graph_entropy(PointCloud(Matrix(Matrix::Ones(20, 3))), 5, 2.0); }) ==
          ErrorCode::degenerate);
}

TEST_CASE("estimators are rigid-motion invariant") {
    const Matrix a = Rng(10).gaussian(400, 5);
    Matrix moved = rotate(a, 3);
    moved.rowwise() += Eigen::RowVectorXd::Constant(5, -2.0);
    CHECK(twonn_id(PointCloud(moved)) == doctest::Approx(twonn_id(PointCloud(a))).epsilon(1e-9));
    const auto sizes = default_gmst_sizes(400);
    CHECK(gmst_id(PointCloud(moved), sizes, 2, 1).dimension ==
          doctest::Approx(gmst_id(PointCloud(a), sizes, 2, 1).dimension).epsilon(1e-9));
}
