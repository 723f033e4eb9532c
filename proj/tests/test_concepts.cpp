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
#include "tscope/concepts.hpp"
#include "tscope/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace tscope;
using test::error_code_of;

namespace {

Matrix planted_rank1(Index m, Index d, std::uint64_t seed) {
    Rng rng(seed);
    Vector z(m), h(d);
    for (Index i = 0; i < m; ++i) {
        z(i) = 0.1 + rng.uniform();
    }
    for (Index j = 0; j < d; ++j) {
        h(j) = rng.normal();
    }
    return z * h.transpose();
}

bool non_increasing(const std::vector<double>& trace) {
    for (std::size_t i = 1; i < trace.size(); ++i) {
        // Slack at roundoff scale of the starting objective.
        if (trace[i] > trace[i - 1] + 1e-12 * trace.front()) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("semi-nmf recovers a planted rank-1 factorisation") {
    const Matrix x = planted_rank1(40, 25, 1);
    SemiNmfOptions o;
    o.seed = 2;
    const auto d = seminmf(x, 1, o);
    CHECK((d.z.array() >= 0.0).all());
    CHECK((x - d.z * d.h).norm() / x.norm() <= 1e-3);
    CHECK(non_increasing(d.objective_trace));
    CHECK(d.concept_weights().size() == 1);
}

TEST_CASE("semi-nmf objective is monotone") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Matrix x = Rng(seed).gaussian(60, 20);
        SemiNmfOptions o;
        o.max_iters = 200;
        o.tol = 0.0;
        o.seed = seed;
        const auto d = seminmf(x, 5, o);
        CHECK(d.objective_trace.size() == 201);
        CHECK(non_increasing(d.objective_trace));
    }
}

TEST_CASE("semi-nmf fixed point") {
    Matrix x = planted_rank1(30, 12, 4);
    x += 1e-3 * Rng(5).gaussian(30, 12);
    SemiNmfOptions o;
    o.max_iters = 3000;
    o.tol = 0.0;
    const auto d = seminmf(x, 1, o);
    const auto more = seminmf_continue(x, d, 1, 0.0);
    CHECK(std::abs(more.objective_trace.back() - d.objective_trace.back()) <= 1e-10);
}

TEST_CASE("semi-nmf argument checks") {
    const Matrix x = Rng(1).gaussian(5, 4);
    CHECK(error_code_of([&] { seminmf(x, 4, {}); }) == ErrorCode::invalid_argument);
    CHECK(error_code_of([&] { seminmf(x, 0, {}); }) == ErrorCode::invalid_argument);
}

TEST_CASE("alignment metrics") {
    const Matrix a = Rng(2).gaussian(4, 10);
    Matrix perm(4, 10);
    perm << a.row(2), a.row(0), a.row(3), a.row(1);
    CHECK(alignment_metrics(a, perm).best_match == doctest::Approx(1.0));

    Matrix flipped = -a.topRows(2);
    CHECK(alignment_metrics(a.topRows(2), flipped).best_match == doctest::Approx(1.0));

    Matrix left = Matrix::Zero(2, 4), right = Matrix::Zero(2, 4);
    left(0, 0) = left(1, 1) = 1.0;
    right(0, 2) = right(1, 3) = 1.0;
    const auto zero = alignment_metrics(left, right);
    CHECK(zero.best_match == 0.0);
    CHECK(zero.top10 == 0.0);
    CHECK(zero.weighted == 0.0);

    const Matrix b = Rng(3).gaussian(3, 10);
    const auto uniform = alignment_metrics(a, b);
    CHECK(alignment_metrics(a, b, std::vector<double>{1.0, 1.0, 1.0}).weighted ==
          doctest::Approx(uniform.best_match).epsilon(1e-15));
    const auto skew = alignment_metrics(a, b, std::vector<double>{1.0, 0.0, 0.0});
    CHECK(skew.weighted == doctest::Approx(uniform.correlation_matrix.col(0).maxCoeff()));

    Matrix zero_row = b;
    zero_row.row(1).setZero();
    CHECK(error_code_of([&] { alignment_metrics(a, zero_row); }) == ErrorCode::degenerate);
}

TEST_CASE("concept to weight alignment") {
    Rng rng(6);
    const Matrix concepts = rng.gaussian(3, 40);
    // rows are positive multiples of one concept: the single recovered direction is that concept
    Matrix exact(12, 40);
    for (Index i = 0; i < 12; ++i) {
        exact.row(i) = (0.5 + static_cast<double>(i)) * concepts.row(1);
    }
    CHECK(concept_weight_alignment(concepts, exact, 1, 1).c_w == doctest::Approx(1.0).epsilon(1e-9));

    Matrix in_span(30, 40);
    for (Index i = 0; i < 30; ++i) {
        in_span.row(i) = (1.0 + rng.uniform()) * concepts.row(0) + 0.1 * rng.normal() * concepts.row(2);
    }
    CHECK(concept_weight_alignment(concepts, in_span, 1, 2).c_w >= 0.9);
}

TEST_CASE("concept to weight alignment random baseline") {
    SemiNmfOptions o;
    o.max_iters = 50;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        const Matrix concepts = Rng(derive_seed(10, trial)).gaussian(50, 768);
        const Matrix w = Rng(derive_seed(11, trial)).gaussian(100, 768);
        CHECK(concept_weight_alignment(concepts, w, 50, trial, o).c_w <= 0.25);
    }
}
