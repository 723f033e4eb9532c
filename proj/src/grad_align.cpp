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
#include "tscope/grad_align.hpp"

#include "tscope/kernels.hpp"
#include "tscope/rng.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tscope {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr double inf = std::numeric_limits<double>::infinity();

double mean_finite_or_nan(const std::vector<double>& v) {
    double s = 0.0;
    Index n = 0;
    for (double x : v) {
        if (!std::isnan(x)) {
            s += x;
            ++n;
        }
    }
    return n ? s / static_cast<double>(n) : nan;
}

} // namespace

GradientMatrix build_gradient_matrix(const Matrix& deltas, const Matrix& activations, const Vector& mean) {
    require(deltas.rows() == activations.rows(), ErrorCode::dimension_mismatch,
            "delta and activation row counts differ");
    require(mean.size() == activations.cols(), ErrorCode::dimension_mismatch, "mean length != D_in");
    require(deltas.allFinite() && activations.allFinite() && mean.allFinite(), ErrorCode::non_finite,
            "gradient or activation rows contain non-finite values");
    const Index m = deltas.rows();
    const Index d_out = deltas.cols();
    const Index d_in = activations.cols();
    GradientMatrix g;
    g.b = Matrix::Zero(d_out, d_in);
    g.n_tokens = m;
    Vector xc(d_in);
    for (Index j = 0; j < m; ++j) {
        xc = activations.row(j).transpose() - mean;
        for (Index o = 0; o < d_out; ++o) {
            const double w = deltas(j, o);
            if (w != 0.0) {
                kernels::axpy(w, xc.data(), g.b.row(o).data(), static_cast<std::size_t>(d_in));
            }
        }
    }
    return g;
}

EnergyTestResult energy_test(const Matrix& b, const OrthonormalBasis& qt, const OrthonormalBasis& comparator,
                             Index s, std::uint64_t seed) {
    require(s >= 1, ErrorCode::invalid_argument, "need at least one null sample");
    require(comparator.ambient_dim() == qt.ambient_dim(), ErrorCode::dimension_mismatch, "basis dimensions differ");
    EnergyTestResult r;
    r.s_samples = s;
    r.e_tangent = project_energy(b, qt);
    r.e_normal_det = project_energy(b, comparator);
    const double scale = b.squaredNorm();
    if (r.e_normal_det <= zero_energy_fraction * scale) {
        r.ratio_infinite = r.e_tangent > zero_energy_fraction * scale;
        r.r_energy = r.ratio_infinite ? inf : nan;
    } else {
        r.r_energy = r.e_tangent / r.e_normal_det;
    }
    for (Index i = 0; i < s; ++i) {
        const auto qn = sample_normal_subspace(qt, qt.rank(), derive_seed(seed, static_cast<std::uint64_t>(i)));
        if (project_energy(b, qn) >= r.e_tangent) {
            ++r.exceed_count;
        }
    }
    r.p_energy = static_cast<double>(1 + r.exceed_count) / static_cast<double>(s + 1);
    return r;
}

EnergyTestResult energy_test(const Matrix& b, const OrthonormalBasis& qt, const ActivationCloud& cloud, Index s,
                             std::uint64_t seed) {
    return energy_test(b, qt, deterministic_normal_comparator(cloud, qt, qt.rank()), s, seed);
}

namespace {

// IsoScore* of the shrunk covariance, or NaN when the matrix is zero.
double shrunk_iso(const Matrix& b, double alpha, bool& degenerate) {
    degenerate = b.squaredNorm() == 0.0;
    if (degenerate) {
        return nan;
    }
    const Spectrum s = gradient_spectrum(b, alpha);
    degenerate = s.sum() <= 0.0;
    return degenerate ? nan : isoscore_star(s);
}

Matrix remove_subspace(const Matrix& b, const OrthonormalBasis& q) {
    const Matrix& c = q.columns();
    Matrix r = b - (b * c) * c.transpose();
    // Projection leaves O(eps * ||B||) residue when Q covers the row space; clear it.
    if (r.squaredNorm() <= zero_energy_fraction * b.squaredNorm()) {
        r.setZero();
    }
    return r;
}

} // namespace

IsoRemovalResult iso_removal_test(const Matrix& b, const OrthonormalBasis& qt, const OrthonormalBasis& qn,
                                  double alpha) {
    require(qt.ambient_dim() == b.cols() && qn.ambient_dim() == b.cols(), ErrorCode::dimension_mismatch,
            "bases must live in R^{D_in}");
    require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::invalid_argument, "alpha must be in [0, 1]");
    IsoRemovalResult r;
    r.iso_base = shrunk_iso(b, alpha, r.base_degenerate);
    r.iso_removed_t = shrunk_iso(remove_subspace(b, qt), alpha, r.residual_t_degenerate);
    r.iso_removed_n = shrunk_iso(remove_subspace(b, qn), alpha, r.residual_n_degenerate);
    r.delta_iso_t = r.iso_removed_t - r.iso_base;
    r.delta_iso_n = r.iso_removed_n - r.iso_base;
    if (r.base_degenerate || !(r.iso_base > 0.0)) {
        r.base_degenerate = true;
        r.pct_t = nan;
        r.pct_n = nan;
    } else {
        r.pct_t = 100.0 * r.delta_iso_t / r.iso_base;
        r.pct_n = 100.0 * r.delta_iso_n / r.iso_base;
    }
    return r;
}

double binomial_upper_tail_half(Index n, Index m) {
    using boost::multiprecision::cpp_int;
    using boost::multiprecision::cpp_rational;
    require(n >= 0 && m >= 0, ErrorCode::invalid_argument, "counts must be nonnegative");
    if (m <= 0) {
        return 1.0;
    }
    if (m > n) {
        return 0.0;
    }
    cpp_int c = 1; // C(n, 0)
    cpp_int tail = 0;
    for (Index i = 0; i <= n; ++i) {
        if (i >= m) {
            tail += c;
        }
        c = c * (n - i) / (i + 1);
    }
    const cpp_rational p(tail, cpp_int(1) << static_cast<unsigned>(n));
    return p.convert_to<double>();
}

double sign_test(const std::vector<double>& d_values) {
    require(!d_values.empty(), ErrorCode::invalid_argument, "sign test needs at least one value");
    const auto positive = std::count_if(d_values.begin(), d_values.end(), [](double d) { return d > 0.0; });
    return binomial_upper_tail_half(static_cast<Index>(d_values.size()), static_cast<Index>(positive));
}

void AnchorSummary::add(std::int64_t step, const EnergyTestResult& e, const IsoRemovalResult& r) {
    steps.push_back(step);
    energy.push_back(e);
    iso.push_back(r);
    finalize();
}

void AnchorSummary::finalize() {
    std::vector<double> d;
    for (const auto& r : iso) {
        d.push_back(r.delta_iso_t - r.delta_iso_n);
    }
    d_a = mean_finite_or_nan(d);
}

double AnchorSummary::mean_r_energy() const {
    std::vector<double> v;
    for (const auto& e : energy) {
        v.push_back(e.r_energy);
    }
    return mean_finite_or_nan(v);
}

double AnchorSummary::mean_p_energy() const {
    std::vector<double> v;
    for (const auto& e : energy) {
        v.push_back(e.p_energy);
    }
    return mean_finite_or_nan(v);
}

double AnchorSummary::mean_pct_t() const {
    std::vector<double> v;
    for (const auto& r : iso) {
        v.push_back(r.pct_t);
    }
    return mean_finite_or_nan(v);
}

double AnchorSummary::mean_pct_n() const {
    std::vector<double> v;
    for (const auto& r : iso) {
        v.push_back(r.pct_n);
    }
    return mean_finite_or_nan(v);
}

Table1Row aggregate_anchors(const std::string& layer, const std::string& phase,
                            const std::vector<AnchorSummary>& summaries) {
    require(!summaries.empty(), ErrorCode::invalid_argument, "no anchors to aggregate");
    Table1Row row;
    row.layer = layer;
    row.phase = phase;
    row.n_anchors = static_cast<Index>(summaries.size());
    std::vector<double> r;
    std::vector<double> pt;
    std::vector<double> pn;
    std::vector<double> d;
    row.p_e_null = inf;
    for (const auto& s : summaries) {
        r.push_back(s.mean_r_energy());
        pt.push_back(s.mean_pct_t());
        pn.push_back(s.mean_pct_n());
        d.push_back(s.d_a);
        const double p = s.mean_p_energy();
        if (!std::isnan(p)) {
            row.p_e_null = std::min(row.p_e_null, p);
        }
    }
    row.e_r = mean_finite_or_nan(r);
    row.d_iso_t_pct = mean_finite_or_nan(pt);
    row.d_iso_n_pct = mean_finite_or_nan(pn);
    if (std::isinf(row.p_e_null)) {
        row.p_e_null = nan;
    }
    row.p_sign = sign_test(d);
    return row;
}

CsvTable table1_csv(const std::vector<Table1Row>& rows) {
    CsvTable t({"layer", "phase", "E_r", "p_E_null", "dIso_T_pct", "dIso_N_pct", "p_sign"});
    for (const auto& r : rows) {
        t.add_row({r.layer, r.phase, format_number(r.e_r), format_number(r.p_e_null), format_number(r.d_iso_t_pct),
                   format_number(r.d_iso_n_pct), format_number(r.p_sign)});
    }
    return t;
}

} // namespace tscope
