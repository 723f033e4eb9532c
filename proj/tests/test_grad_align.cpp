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
#include "tscope/grad_align.hpp"
#include "tscope/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace tscope;
using test::error_code_of;

TEST_CASE("gradient matrix accumulation") {
    Matrix delta = Matrix::Zero(1, 3);
    delta(0, 0) = 1.0;
    Matrix x = Matrix::Zero(1, 4);
    x(0, 1) = 1.0;
    const GradientMatrix g = build_gradient_matrix(delta, x, Vector::Zero(4));
    Matrix expect = Matrix::Zero(3, 4);
    expect(0, 1) = 1.0;
    CHECK(g.b == expect);
    CHECK(g.n_tokens == 1);

    Matrix pair(2, 3);
    pair.row(0) << 1.0, -2.0, 0.5;
    pair.row(1) = -pair.row(0);
    Matrix same(2, 4);
    same.row(0) << 0.3, 0.1, -0.7, 2.0;
    same.row(1) = same.row(0);
    CHECK(build_gradient_matrix(pair, same, Vector::Zero(4)).b.cwiseAbs().maxCoeff() == 0.0);

    Rng rng(3);
    const Matrix d = rng.gaussian(50, 6), a = rng.gaussian(50, 9);
    const Vector mu = rng.gaussian(9, 1).col(0);
    Matrix naive = Matrix::Zero(6, 9);
    for (Index j = 0; j < 50; ++j) {
        for (Index p = 0; p < 6; ++p) {
            for (Index q = 0; q < 9; ++q) {
                naive(p, q) += d(j, p) * (a(j, q) - mu(q));
            }
        }
    }
    CHECK((build_gradient_matrix(d, a, mu).b - naive).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(error_code_of([&] { build_gradient_matrix(d, rng.gaussian(49, 9), mu); }) == ErrorCode::dimension_mismatch);
}

TEST_CASE("energy test floor and infinite ratio") {
    const Index d = 16;
    const OrthonormalBasis qt = sample_subspace(d, 4, 1);
    const OrthonormalBasis qn(complement_basis(qt).leftCols(4));
    const Matrix b = Rng(2).gaussian(8, 4) * qt.columns().transpose();
    const EnergyTestResult r = energy_test(b, qt, qn, 20, 7);
    CHECK(r.p_energy == 1.0 / 21.0);
    CHECK(r.exceed_count == 0);
    CHECK(r.ratio_infinite);
    CHECK(std::isinf(r.r_energy));

    Vector g = Vector::LinSpaced(5, 1.0, 5.0);
    const Matrix outer = g * qt.columns().col(0).transpose();
    const EnergyTestResult o = energy_test(outer, qt, qn, 20, 8);
    CHECK(o.ratio_infinite);
    CHECK(o.p_energy == 1.0 / 21.0);
}

TEST_CASE("energy test null calibration") {
    const Index d = 24;
    std::vector<double> p;
    for (int trial = 0; trial < 100; ++trial) {
        const auto seed = static_cast<std::uint64_t>(trial);
        const Matrix b = Rng(derive_seed(1, seed)).gaussian(10, d);
        const OrthonormalBasis qt = sample_subspace(d, 4, derive_seed(2, seed));
        const OrthonormalBasis qn = sample_normal_subspace(qt, 4, derive_seed(3, seed));
        p.push_back(energy_test(b, qt, qn, 20, derive_seed(4, seed)).p_energy);
    }
    std::nth_element(p.begin(), p.begin() + 50, p.end());
    CHECK(p[50] >= 0.3);
}

TEST_CASE("iso removal") {
    // Σ_B = BᵀB / D_out has spectrum (100, 10, 1, 1e-3) with the top two directions spanning Q_T.
    const Index d_out = 4;
    Matrix b = Matrix::Zero(d_out, 4);
    const double lam[4] = {100.0, 10.0, 1.0, 1e-3};
    for (Index i = 0; i < 4; ++i) {
        b(i, i) = std::sqrt(lam[i] * d_out);
    }
    const OrthonormalBasis qt(Matrix(Matrix::Identity(4, 2)));
    Matrix nq = Matrix::Zero(4, 2);
    nq(2, 0) = nq(3, 1) = 1.0;
    const IsoRemovalResult r = iso_removal_test(b, qt, OrthonormalBasis(nq), 0.0);
    CHECK(r.iso_base == doctest::Approx(isoscore_star(Spectrum({100.0, 10.0, 1.0, 1e-3}, 4))).epsilon(1e-10));
    CHECK(r.iso_removed_t == doctest::Approx(isoscore_star(Spectrum({1.0, 1e-3}, 4))).epsilon(1e-9));
    CHECK(r.delta_iso_t < 0.0);

    // Q_T orthogonal to the row space of B: removal changes nothing
    Matrix rows = Matrix::Zero(3, 6);
    rows.leftCols(3) = Rng(5).gaussian(3, 3);
    Matrix off = Matrix::Zero(6, 2);
    off(4, 0) = off(5, 1) = 1.0;
    const IsoRemovalResult same = iso_removal_test(rows, OrthonormalBasis(off), OrthonormalBasis(off), 0.05);
    CHECK(std::abs(same.delta_iso_t) <= 1e-9);

    const Matrix full = Rng(6).gaussian(3, 5);
    Matrix q = Matrix::Zero(5, 5);
    q << sample_subspace(5, 2, 1).columns(), complement_basis(sample_subspace(5, 2, 1));
    const IsoRemovalResult gone = iso_removal_test(full, OrthonormalBasis(q), OrthonormalBasis(q), 0.05);
    CHECK(gone.residual_t_degenerate);
    CHECK(std::isnan(gone.iso_removed_t));
}

TEST_CASE("exact sign test") {
    CHECK(sign_test(std::vector<double>(24, 1.0)) == doctest::Approx(std::ldexp(1.0, -24)).epsilon(1e-12));
    CHECK(std::abs(sign_test(std::vector<double>(24, 1.0)) - std::ldexp(1.0, -24)) <= 1e-12);
    std::vector<double> half(24, -1.0);
    std::fill(half.begin(), half.begin() + 12, 1.0);
    CHECK(sign_test(half) == doctest::Approx(0.5806).epsilon(1e-4));
    CHECK(sign_test({-1.0, -2.0, -0.5}) == 1.0);
    // zero counts against the alternative
    CHECK(sign_test({0.0, 1.0}) == 0.75);
    CHECK(binomial_upper_tail_half(2, 1) == 0.75);
    CHECK(binomial_upper_tail_half(1000, 0) == 1.0);
    CHECK(binomial_upper_tail_half(1000, 1000) == doctest::Approx(std::ldexp(1.0, -1000)));
}

TEST_CASE("anchor aggregation") {
    EnergyTestResult e;
    e.r_energy = 3.0;
    e.p_energy = 0.25;
    IsoRemovalResult iso;
    iso.delta_iso_t = 0.2;
    iso.delta_iso_n = -0.1;
    iso.pct_t = 20.0;
    iso.pct_n = -10.0;
    AnchorSummary one;
    one.add(100, e, iso);
    const Table1Row row = aggregate_anchors("L0", "early", {one});
    CHECK(row.e_r == 3.0);
    CHECK(row.p_e_null == 0.25);
    CHECK(row.d_iso_t_pct == 20.0);
    CHECK(row.d_iso_n_pct == -10.0);
    CHECK(row.p_sign == 0.5);

    AnchorSummary neg = one;
    neg.iso[0].delta_iso_t = -0.3;
    neg.finalize();
    CHECK(one.d_a == doctest::Approx(0.3));
    CHECK(neg.d_a == doctest::Approx(-0.2));
    CHECK(aggregate_anchors("L0", "late", {one, neg}).p_sign == 0.75);

    const std::string csv = table1_csv({row}).str();
    CHECK(csv.rfind("layer,phase,E_r,p_E_null,dIso_T_pct,dIso_N_pct,p_sign\n", 0) == 0);
}
