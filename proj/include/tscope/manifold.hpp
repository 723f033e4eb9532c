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
#include <limits>
#include <string>
#include <vector>

namespace tscope {

// Ambient coordinates are laid out as [tangent (k) | normal (D - k)] with the base point at the
// origin, so the tangent space at the base point is spanned by the first k axes.
class ManifoldSpec {
public:
    enum class Kind { sphere, quadratic_graph };

    // Sphere of radius R in R^{k+1}, centred at -R e_{k+1} so that it touches the origin.
    static ManifoldSpec sphere(double radius, Index k);
    // Graph y -> (y, ½ yᵀA_1 y, ..., ½ yᵀA_c y). Missing normal directions are flat.
    static ManifoldSpec quadratic_graph(std::vector<Eigen::MatrixXd> a, Index k, Index ambient_dim);
    static ManifoldSpec flat(Index k, Index ambient_dim);

    Kind kind() const { return kind_; }
    Index intrinsic_dim() const { return k_; }
    Index ambient_dim() const { return d_; }
    double radius() const { return radius_; }
    // One symmetric k x k matrix per normal direction (D - k of them); zero for flat directions.
    const std::vector<Eigen::MatrixXd>& coefficients() const { return a_; }
    bool is_flat() const;

    // II(u, w) in normal coordinates (length D - k).
    Vector second_form(const Vector& u, const Vector& w) const;
    // κ(u) = ||II(u, u)||² for a unit u.
    double kappa(const Vector& u) const;
    // C = sup over unit u of ||II(u, u)||. Exact for spheres and single-normal graphs and for k <= 2;
    // otherwise an upper bound.
    double curvature_bound() const;
    // Sphere: R. Graph: the lower bound 1/C (infinite when flat).
    double reach() const;
    // Ricci curvature ℛ(u) at the base point. Spheres of any k and 2-D graphs only.
    double ricci(const Vector& u) const;
    // Largest geodesic radius accepted by decompose_sample.
    double chart_radius() const;

    // Chart y in R^k to the ambient point (y, h(y)). Sphere charts need |y| < R.
    Vector embed(const Vector& y) const;
    // Normal part h(y) of the chart embedding.
    Vector height(const Vector& y) const;
    // sqrt(det G(y)) of the induced metric in the chart.
    double area_density(const Vector& y) const;

    // Geodesic normal coordinates w = r u to chart coordinates.
    Vector exp_chart(const Vector& w) const;
    // Inverse of exp_chart.
    Vector log_chart(const Vector& y) const;

    std::string describe() const;

private:
    Kind kind_ = Kind::quadratic_graph;
    Index k_ = 0;
    Index d_ = 0;
    double radius_ = 0.0;
    std::vector<Eigen::MatrixXd> a_;
    double bound_ = 0.0;
    // Graphs whose coefficients are all multiples of e eᵀ are developable (a parabolic cylinder of
    // curvature ruled_curvature_ along e) and get closed-form exp/log maps.
    double ruled_curvature_ = 0.0;
    Vector ruled_axis_;
};

class RadialLaw {
public:
    enum class Kind { uniform, truncated_exponential, power };

    static RadialLaw uniform(double support);
    static RadialLaw truncated_exponential(double sigma, double support);
    // g(t) ∝ t^{-p}, p > 0. Integrability depends on the intrinsic dimension and is checked by
    // moment_ratio and the samplers.
    static RadialLaw power(double exponent, double support);

    Kind kind() const { return kind_; }
    double support() const { return support_; }
    double parameter() const { return param_; }
    // Unnormalised g(t) for t in (0, T]; 0 outside.
    double unnormalized(double t) const;
    // g(t) normalised to unit mass on [0, T]. Throws non_integrable for p >= 1.
    double density(double t) const;
    // Same shape with support and scale multiplied by c.
    RadialLaw scaled(double c) const;

    std::string describe() const;

private:
    Kind kind_ = Kind::uniform;
    double support_ = 1.0;
    double param_ = 0.0;
};

// ∫ g t^{k+1} / ∫ g t^{k-1} on [0, T] by adaptive quadrature, relative error 1e-9.
double moment_ratio(const RadialLaw& law, Index k);

struct SampleDecomposition {
    Vector x;
    Vector v;
    Vector n;
    double t_chord = 0.0;
    double r_geodesic = 0.0;
    Vector u;
};

// coords are geodesic normal coordinates r u at the base point.
SampleDecomposition decompose_sample(const ManifoldSpec& spec, const Vector& coords);

// Draws n chart points distributed as g(t(x)) dvol(x) restricted to t <= T. Rows are chart
// coordinates; embed() gives the ambient point.
Matrix sample_manifold(const ManifoldSpec& spec, const RadialLaw& law, Index n, std::uint64_t seed);

struct ChordArcReport {
    std::vector<double> r;
    std::vector<double> t;
    // t² - (r² - κ r⁴ / 12)
    std::vector<double> residual;
    // r² - (t² + κ t⁴ / 12)
    std::vector<double> inverse_residual;
    double kappa = 0.0;
    double max_residual = 0.0;
    double max_inverse_residual = 0.0;
    // max |residual| / r⁵
    double fitted_c = 0.0;
    // log-log slope of |residual| against r; NaN when the residual vanishes.
    double residual_slope = 0.0;
    // |t² - r²| ≈ coefficient · r^slope
    double deviation_slope = 0.0;
    double deviation_coefficient = 0.0;
};
ChordArcReport chord_arc_check(const ManifoldSpec& spec, const Vector& u, const std::vector<double>& r_grid);

// dt/dr by central difference with step 1e-5 r.
double compression_ratio(const ManifoldSpec& spec, const Vector& u, double r);
double predicted_compression_ratio(const ManifoldSpec& spec, const Vector& u, double r);

struct DirectionalBiasOptions {
    double shell_t = 0.3;
    // Absolute width; <= 0 selects 0.02 t.
    double shell_width = 0.0;
    Index n_samples = 100000;
    std::uint64_t seed = 0;
    // Bins over the half circle [0, π); bin 0 is centred on e1, bin n_bins/2 on e2.
    Index n_bins = 16;
};

struct DirectionalBiasReport {
    double shell_t = 0.0;
    double shell_width = 0.0;
    Index hits = 0;
    Index proposals = 0;
    std::vector<double> bin_counts;
    // ln(count(e1 bin) / count(e2 bin))
    double observed_log_ratio = 0.0;
    double standard_error = 0.0;
    // Pointwise formula value at e1 versus e2.
    double predicted_log_ratio = 0.0;
    // Formula averaged over the two bins.
    double predicted_binned_log_ratio = 0.0;
    // Max over bins of |observed - predicted| log density relative to the bin mean.
    double max_abs_deviation = 0.0;
    double chi2 = 0.0;
    double chi2_p_uniform = 0.0;
};
DirectionalBiasReport directional_bias_estimate(const ManifoldSpec& spec, const RadialLaw& law,
                                                const DirectionalBiasOptions& options);

// Directional non-uniformity of the marginal over t: ln(count(e1 bin) / count(e2 bin)) with the
// standard error, for a 2-D spec sampled under law.
struct MarginalBiasReport {
    double log_ratio = 0.0;
    double standard_error = 0.0;
    double eta = 0.0;
    Index samples = 0;
};
MarginalBiasReport marginal_directional_bias(const ManifoldSpec& spec, const RadialLaw& law, Index n_samples,
                                             std::uint64_t seed, Index n_bins = 16);

struct CovarianceScaleReport {
    std::vector<double> t_scale;
    std::vector<double> mean_t2;
    std::vector<double> tangent_trace;
    std::vector<double> normal_trace;
    std::vector<double> normal_max_eig;
    // ||E[vvᵀ] - (E[t²]/k) I||_F / ||(E[t²]/k) I||_F
    std::vector<double> isotropy_error;
    // λmax(E[nnᵀ]) / ((1/k) C² E[t⁴]); the bound holds when <= 1.
    std::vector<double> normal_bound_ratio;
    double tangent_slope = 0.0;
    double normal_slope = 0.0;
};
// For each scale s the law is base_law.scaled(s / base_law.support()).
CovarianceScaleReport covariance_scale_check(const ManifoldSpec& spec, const RadialLaw& base_law,
                                             const std::vector<double>& t_scales, Index n_samples,
                                             std::uint64_t seed);

struct DominanceOptions {
    std::vector<double> t_grid{0.02, 0.05, 0.1, 0.2};
    Index d_out = 4;
    Index batch = 20000;
    Index n_steps = 200;
    // Scale of the concentrated law used for the descent run.
    double descent_scale = 0.05;
    // Step size in units of 1 / λ_T, λ_T = E|v|² / k at descent_scale.
    double step = 0.01;
    // Magnitude of the constant target offset.
    double offset = 0.1;
    std::uint64_t seed = 0;
};

struct DominanceReport {
    std::vector<double> t_grid;
    std::vector<double> ratio_norm_to_tan;
    std::vector<double> g_rms_per_t;
    double fitted_slope = 0.0;
    // G_rms at the smallest scale, informational.
    double g_rms = 0.0;
    // ||P_T V_k||_F² / k for the top-k right singular vectors of W, per step (n_steps + 1 entries).
    std::vector<double> alignment;
    std::vector<double> alignment_ma5;
    // ||W P_T||_F² / ||W||_F² per step.
    std::vector<double> energy_fraction;
    bool ma5_non_decreasing = false;
};
DominanceReport tangent_dominance_experiment(const ManifoldSpec& spec, const RadialLaw& base_law,
                                             const DominanceOptions& options);

struct BilinearScalingReport {
    std::vector<double> t_scale;
    std::vector<double> tangent_term;
    std::vector<double> cross_term;
    std::vector<double> normal_term;
    double tangent_slope = 0.0;
    double cross_slope = 0.0;
    double normal_slope = 0.0;
};
BilinearScalingReport bilinear_score_scaling(const ManifoldSpec& spec, const RadialLaw& base_law,
                                             const std::vector<double>& t_scales, std::uint64_t m_seed,
                                             Index n_samples, std::uint64_t sample_seed);

// Least-squares slope of ln y against ln x.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y, double* intercept = nullptr);

} // namespace tscope
