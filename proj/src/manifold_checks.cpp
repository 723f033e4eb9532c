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
#include "tscope/manifold.hpp"
#include "tscope/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tscope {

namespace {

Vector unit_direction(const ManifoldSpec& spec, const Vector& u) {
    require(u.size() == spec.intrinsic_dim(), ErrorCode::dimension_mismatch, "direction has wrong size");
    const double n = u.norm();
    require(n > 0.0 && std::isfinite(n), ErrorCode::invalid_argument, "direction must be non-zero");
    return u / n;
}

double chord_at(const ManifoldSpec& spec, const Vector& u, double r) {
    return decompose_sample(spec, r * u).t_chord;
}

void check_scale_grid(const std::vector<double>& grid) {
    require(grid.size() >= 2, ErrorCode::invalid_argument, "scale grid needs at least two values");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        require(grid[i] > 0.0 && std::isfinite(grid[i]), ErrorCode::invalid_argument, "scales must be positive");
        require(i == 0 || grid[i] > grid[i - 1], ErrorCode::invalid_argument, "scales must be strictly increasing");
    }
}

RadialLaw law_at(const RadialLaw& base, double scale) { return base.scaled(scale / base.support()); }

struct Batch {
    Matrix x;   // ambient x - μ, one row per sample
    Matrix v;   // chart coordinates (tangent part, k columns)
    Matrix n;   // heights (normal part, D - k columns)
};

Batch draw_batch(const ManifoldSpec& spec, const RadialLaw& law, Index count, std::uint64_t seed) {
    const Index k = spec.intrinsic_dim();
    const Index d = spec.ambient_dim();
    Batch b;
    b.v = sample_manifold(spec, law, count, seed);
    b.n.resize(count, d - k);
    b.x.resize(count, d);
    for (Index i = 0; i < count; ++i) {
        const Vector y = b.v.row(i).transpose();
        b.n.row(i) = spec.height(y).transpose();
    }
    b.x.leftCols(k) = b.v;
    b.x.rightCols(d - k) = b.n;
    return b;
}

} // namespace

ChordArcReport chord_arc_check(const ManifoldSpec& spec, const Vector& u_in, const std::vector<double>& r_grid) {
    const Vector u = unit_direction(spec, u_in);
    require(!r_grid.empty(), ErrorCode::invalid_argument, "empty radius grid");
    const double r_max = *std::max_element(r_grid.begin(), r_grid.end());
    require(r_max <= 0.3 * spec.reach(), ErrorCode::invalid_argument, "radius grid exceeds 0.3 reach");
    ChordArcReport rep;
    rep.kappa = spec.kappa(u);
    std::vector<double> abs_res, dev;
    for (double r : r_grid) {
        require(r > 0.0, ErrorCode::invalid_argument, "radii must be positive");
        const double t = chord_at(spec, u, r);
        const double res = t * t - (r * r - rep.kappa * std::pow(r, 4) / 12.0);
        const double inv = r * r - (t * t + rep.kappa * std::pow(t, 4) / 12.0);
        rep.r.push_back(r);
        rep.t.push_back(t);
        rep.residual.push_back(res);
        rep.inverse_residual.push_back(inv);
        rep.max_residual = std::max(rep.max_residual, std::abs(res));
        rep.max_inverse_residual = std::max(rep.max_inverse_residual, std::abs(inv));
        rep.fitted_c = std::max(rep.fitted_c, std::abs(res) / std::pow(r, 5));
        abs_res.push_back(std::abs(res));
        dev.push_back(std::abs(t * t - r * r));
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (rep.r.size() >= 2) {
        rep.residual_slope = log_log_slope(rep.r, abs_res);
        double intercept = 0.0;
        rep.deviation_slope = log_log_slope(rep.r, dev, &intercept);
        rep.deviation_coefficient = std::exp(intercept);
    } else {
        rep.residual_slope = rep.deviation_slope = rep.deviation_coefficient = nan;
    }
    return rep;
}

double compression_ratio(const ManifoldSpec& spec, const Vector& u_in, double r) {
    const Vector u = unit_direction(spec, u_in);
    require(r > 0.0, ErrorCode::invalid_argument, "radius must be positive");
    const double h = 1e-5 * r;
    return (chord_at(spec, u, r + h) - chord_at(spec, u, r - h)) / (2.0 * h);
}

double predicted_compression_ratio(const ManifoldSpec& spec, const Vector& u_in, double r) {
    const Vector u = unit_direction(spec, u_in);
    return 1.0 - spec.kappa(u) * r * r / 8.0;
}

CovarianceScaleReport covariance_scale_check(const ManifoldSpec& spec, const RadialLaw& base_law,
                                             const std::vector<double>& t_scales, Index n_samples,
                                             std::uint64_t seed) {
    check_scale_grid(t_scales);
    require(n_samples >= 2, ErrorCode::invalid_argument, "need at least two samples");
    const Index k = spec.intrinsic_dim();
    const double C = spec.curvature_bound();
    const double nd = static_cast<double>(n_samples);
    CovarianceScaleReport rep;
    for (double s : t_scales) {
        const Batch b = draw_batch(spec, law_at(base_law, s), n_samples, seed);
        const Eigen::MatrixXd tan = b.v.transpose() * b.v / nd;
        const Eigen::MatrixXd nor = b.n.transpose() * b.n / nd;
        const Eigen::VectorXd t2 = b.x.rowwise().squaredNorm();
        const double mean_t2 = t2.mean();
        const double mean_t4 = t2.array().square().mean();
        const Eigen::MatrixXd iso = (mean_t2 / static_cast<double>(k)) * Eigen::MatrixXd::Identity(k, k);
        double max_eig = 0.0;
        if (nor.size() > 0) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(nor, Eigen::EigenvaluesOnly);
            max_eig = std::max(0.0, es.eigenvalues().maxCoeff());
        }
        rep.t_scale.push_back(s);
        rep.mean_t2.push_back(mean_t2);
        rep.tangent_trace.push_back(tan.trace());
        rep.normal_trace.push_back(nor.trace());
        rep.normal_max_eig.push_back(max_eig);
        rep.isotropy_error.push_back((tan - iso).norm() / iso.norm());
        const double bound = C * C * mean_t4 / static_cast<double>(k);
        rep.normal_bound_ratio.push_back(bound > 0.0 ? max_eig / bound : (max_eig == 0.0 ? 0.0 : std::numeric_limits<double>::infinity()));
    }
    rep.tangent_slope = log_log_slope(rep.t_scale, rep.tangent_trace);
    rep.normal_slope = log_log_slope(rep.t_scale, rep.normal_trace);
    return rep;
}

DominanceReport tangent_dominance_experiment(const ManifoldSpec& spec, const RadialLaw& base_law,
                                             const DominanceOptions& opt) {
    check_scale_grid(opt.t_grid);
    const Index k = spec.intrinsic_dim();
    const Index d = spec.ambient_dim();
    require(opt.d_out > k, ErrorCode::invalid_argument, "output dimension must exceed the intrinsic dimension");
    require(opt.batch >= 2 && opt.n_steps >= 0, ErrorCode::invalid_argument, "bad batch size or step count");
    require(opt.descent_scale > 0.0 && opt.step > 0.0, ErrorCode::invalid_argument, "bad descent parameters");

    Rng rng(derive_seed(opt.seed, 0));
    const Matrix t1 = rng.gaussian(opt.d_out, k);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(t1);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(opt.d_out, k);
    Vector z(opt.d_out);
    for (Index i = 0; i < opt.d_out; ++i) {
        z(i) = rng.normal();
    }
    z -= q * (q.transpose() * z);
    const Vector offset = opt.offset * z / z.norm();
    Matrix w = rng.gaussian(opt.d_out, d) / std::sqrt(static_cast<double>(d));

    // Squared loss against y = T1 v / s + b; returns ∇_W = E[g x_cᵀ] and E|g|².
    auto gradient = [&](const Matrix& weights, const Batch& b, double s, double* g2) {
        Matrix target = (b.v * t1.transpose()) / s;
        target.rowwise() += offset.transpose();
        const Matrix g = b.x * weights.transpose() - target;
        if (g2) {
            *g2 = g.rowwise().squaredNorm().mean();
        }
        return Matrix(g.transpose() * b.x / static_cast<double>(b.x.rows()));
    };

    DominanceReport rep;
    rep.t_grid = opt.t_grid;
    for (double s : opt.t_grid) {
        const Batch b = draw_batch(spec, law_at(base_law, s), opt.batch, derive_seed(opt.seed, 1));
        double g2 = 0.0;
        const Matrix grad = gradient(w, b, s, &g2);
        const double tan = grad.leftCols(k).norm();
        require(tan > 0.0, ErrorCode::degenerate, "tangent gradient vanished");
        rep.ratio_norm_to_tan.push_back(grad.rightCols(d - k).norm() / tan);
        rep.g_rms_per_t.push_back(std::sqrt(g2));
    }
    rep.g_rms = rep.g_rms_per_t.front();
    rep.fitted_slope = log_log_slope(rep.t_grid, rep.ratio_norm_to_tan);

    auto record = [&](const Matrix& weights) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(weights, Eigen::ComputeThinV);
        const Eigen::MatrixXd vk = svd.matrixV().leftCols(std::min<Index>(k, svd.matrixV().cols()));
        rep.alignment.push_back(vk.topRows(k).squaredNorm() / static_cast<double>(k));
        rep.energy_fraction.push_back(weights.leftCols(k).squaredNorm() / weights.squaredNorm());
    };
    const RadialLaw descent_law = law_at(base_law, opt.descent_scale);
    const double s = opt.descent_scale;
    record(w);
    double eta = 0.0;
    for (Index step = 0; step < opt.n_steps; ++step) {
        const Batch b = draw_batch(spec, descent_law, opt.batch, derive_seed(opt.seed, 1000 + step));
        if (step == 0) {
            const double lambda_t = b.v.rowwise().squaredNorm().mean() / static_cast<double>(k);
            require(lambda_t > 0.0, ErrorCode::degenerate, "tangent variance vanished");
            eta = opt.step / lambda_t;
        }
        w -= eta * gradient(w, b, s, nullptr);
        record(w);
    }
    const std::size_t m = rep.alignment.size();
    rep.ma5_non_decreasing = m >= 5;
    for (std::size_t i = 0; i + 5 <= m; ++i) {
        double acc = 0.0;
        for (std::size_t j = i; j < i + 5; ++j) {
            acc += rep.alignment[j];
        }
        rep.alignment_ma5.push_back(acc / 5.0);
        if (i > 0 && rep.alignment_ma5[i] < rep.alignment_ma5[i - 1] - 1e-12) {
            rep.ma5_non_decreasing = false;
        }
    }
    return rep;
}

BilinearScalingReport bilinear_score_scaling(const ManifoldSpec& spec, const RadialLaw& base_law,
                                             const std::vector<double>& t_scales, std::uint64_t m_seed,
                                             Index n_samples, std::uint64_t sample_seed) {
    check_scale_grid(t_scales);
    require(n_samples >= 1, ErrorCode::invalid_argument, "need samples");
    const Index k = spec.intrinsic_dim();
    const Index d = spec.ambient_dim();
    Rng rng(m_seed);
    const Matrix m = rng.gaussian(d, d);
    const Matrix m_tt = m.topLeftCorner(k, k);
    // vᵀMn + nᵀMv; equals 2vᵀMn when M is symmetric.
    const Matrix m_tn = m.topRightCorner(k, d - k) + m.bottomLeftCorner(d - k, k).transpose();
    const Matrix m_nn = m.bottomRightCorner(d - k, d - k);
    BilinearScalingReport rep;
    for (double s : t_scales) {
        const Batch b = draw_batch(spec, law_at(base_law, s), n_samples, sample_seed);
        const Matrix vm = b.v * m_tt;
        const Matrix cm = b.v * m_tn;
        const Matrix nm = b.n * m_nn;
        double tt = 0.0, tn = 0.0, nn = 0.0;
        for (Index i = 0; i < n_samples; ++i) {
            tt += std::abs(vm.row(i).dot(b.v.row(i)));
            tn += std::abs(cm.row(i).dot(b.n.row(i)));
            nn += std::abs(nm.row(i).dot(b.n.row(i)));
        }
        const double nd = static_cast<double>(n_samples);
        rep.t_scale.push_back(s);
        rep.tangent_term.push_back(tt / nd);
        rep.cross_term.push_back(tn / nd);
        rep.normal_term.push_back(nn / nd);
    }
    rep.tangent_slope = log_log_slope(rep.t_scale, rep.tangent_term);
    rep.cross_slope = log_log_slope(rep.t_scale, rep.cross_term);
    rep.normal_slope = log_log_slope(rep.t_scale, rep.normal_term);
    return rep;
}

} // namespace tscope
