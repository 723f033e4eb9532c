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
#include "tscope/parallel.hpp"
#include "tscope/rng.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tscope {

namespace {

constexpr Index kBatch = 4096;

// Chart radius proposal with density ∝ ρ^{k-1} g(ρ) on [0, T].
class RadialProposal {
public:
    RadialProposal(const RadialLaw& law, Index k) : law_(law), k_(static_cast<double>(k)) {
        if (law.kind() == RadialLaw::Kind::power) {
            require(law.parameter() < k_, ErrorCode::non_integrable,
                    "power exponent must be below the intrinsic dimension");
        }
        if (law.kind() == RadialLaw::Kind::truncated_exponential) {
            mass_ = boost::math::gamma_p(k_, law.support() / law.parameter());
        }
    }

    double draw(Rng& rng) const {
        const double T = law_.support();
        const double u = rng.uniform();
        switch (law_.kind()) {
        case RadialLaw::Kind::uniform:
            return T * std::pow(u, 1.0 / k_);
        case RadialLaw::Kind::power:
            return T * std::pow(u, 1.0 / (k_ - law_.parameter()));
        case RadialLaw::Kind::truncated_exponential: {
            const double q = std::max(u * mass_, std::numeric_limits<double>::min());
            return std::min(T, law_.parameter() * boost::math::gamma_p_inv(k_, q));
        }
        }
        return 0.0;
    }

    // g(t) / g(ρ) for t >= ρ; at most 1 because g is non-increasing.
    double ratio(double t, double rho) const {
        switch (law_.kind()) {
        case RadialLaw::Kind::uniform:
            return 1.0;
        case RadialLaw::Kind::power:
            return rho == 0.0 ? 1.0 : std::pow(rho / t, law_.parameter());
        case RadialLaw::Kind::truncated_exponential:
            return std::exp(-(t - rho) / law_.parameter());
        }
        return 0.0;
    }

private:
    RadialLaw law_;
    double k_;
    double mass_ = 1.0;
};

// Upper bound of sqrt(det G) over chart points with |y| <= rho_max.
double area_bound(const ManifoldSpec& spec, double rho_max) {
    if (spec.kind() == ManifoldSpec::Kind::sphere) {
        const double R = spec.radius();
        require(rho_max < R, ErrorCode::chart_out_of_range, "support reaches the sphere equator");
        return R / std::sqrt(R * R - rho_max * rho_max);
    }
    double s = 0.0;
    Index active = 0;
    for (const auto& m : spec.coefficients()) {
        if (m.norm() > 0.0) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
            const double op = es.eigenvalues().cwiseAbs().maxCoeff();
            s += op * op;
            ++active;
        }
    }
    if (active == 0) {
        return 1.0;
    }
    const double m = static_cast<double>(std::min(active, spec.intrinsic_dim()));
    return std::pow(1.0 + s * rho_max * rho_max / m, 0.5 * m) * (1.0 + 1e-12);
}

Index batch_count(Index n) { return (n + kBatch - 1) / kBatch; }

// Folded direction angle in [0, π) to a bin whose centre for bin 0 is the e1 axis.
Index direction_bin(const Vector& w, Index n_bins) {
    double phi = std::atan2(w(1), w(0));
    const double pi = std::numbers::pi;
    if (phi < 0.0) {
        phi += pi;
    }
    if (phi >= pi) {
        phi -= pi;
    }
    const double width = pi / static_cast<double>(n_bins);
    double shifted = phi + 0.5 * width;
    if (shifted >= pi) {
        shifted -= pi;
    }
    return std::min<Index>(n_bins - 1, static_cast<Index>(shifted / width));
}

void check_bins(Index n_bins) {
    require(n_bins >= 4 && n_bins % 2 == 0, ErrorCode::invalid_argument, "bin count must be even and >= 4");
}

} // namespace

Matrix sample_manifold(const ManifoldSpec& spec, const RadialLaw& law, Index n, std::uint64_t seed) {
    require(n >= 0, ErrorCode::invalid_argument, "sample count must be non-negative");
    const Index k = spec.intrinsic_dim();
    const double T = law.support();
    const RadialProposal proposal(law, k);
    const double bound = area_bound(spec, T);
    Matrix out(n, k);
    const Index batches = batch_count(n);
    parallel_for(static_cast<std::size_t>(batches), [&](std::size_t b) {
        const Index start = static_cast<Index>(b) * kBatch;
        const Index count = std::min(kBatch, n - start);
        Rng rng(derive_seed(seed, b));
        const Index cap = 1000 * count + 100000;
        Index filled = 0;
        for (Index tries = 0; filled < count; ++tries) {
            require(tries < cap, ErrorCode::insufficient_samples, "rejection sampler acceptance is too low");
            const double rho = proposal.draw(rng);
            const Vector y = rho * rng.unit_vector(k);
            const double t = spec.embed(y).norm();
            if (t > T) {
                continue;
            }
            const double accept = proposal.ratio(t, rho) * spec.area_density(y) / bound;
            if (rng.uniform() < accept) {
                out.row(start + filled) = y.transpose();
                ++filled;
            }
        }
    });
    return out;
}

DirectionalBiasReport directional_bias_estimate(const ManifoldSpec& spec, const RadialLaw& law,
                                                const DirectionalBiasOptions& options) {
    require(spec.intrinsic_dim() == 2, ErrorCode::unsupported, "directional bias needs a 2-D manifold");
    require(options.shell_t > 0.0, ErrorCode::invalid_argument, "shell radius must be positive");
    require(options.n_samples > 0, ErrorCode::invalid_argument, "sample count must be positive");
    check_bins(options.n_bins);
    const double t0 = options.shell_t;
    const double width = options.shell_width > 0.0 ? options.shell_width : 0.02 * t0;
    const double t1 = t0 + width;
    require(t1 <= law.support(), ErrorCode::invalid_argument, "shell lies outside the law's support");
    const double C = spec.curvature_bound();

    double rho_min = 0.0;
    if (spec.kind() == ManifoldSpec::Kind::sphere) {
        const double R = spec.radius();
        require(t0 < 2.0 * R, ErrorCode::chart_out_of_range, "shell exceeds the sphere diameter");
        rho_min = R * std::sin(2.0 * std::asin(t0 / (2.0 * R)));
    } else if (C == 0.0) {
        rho_min = t0;
    } else {
        rho_min = std::sqrt(2.0 * (std::sqrt(1.0 + C * C * t0 * t0) - 1.0)) / C;
    }
    rho_min *= 0.999;
    const double rho_max = t1;
    const double bound = area_bound(spec, rho_max);
    const double g0 = law.unnormalized(t0);
    const double pi = std::numbers::pi;

    const Index batches = batch_count(options.n_samples);
    std::vector<std::vector<Index>> bins(static_cast<std::size_t>(batches));
    std::vector<Index> proposals(static_cast<std::size_t>(batches), 0);
    parallel_for(static_cast<std::size_t>(batches), [&](std::size_t b) {
        const Index start = static_cast<Index>(b) * kBatch;
        const Index quota = std::min(kBatch, options.n_samples - start);
        Rng rng(derive_seed(options.seed, b));
        const Index cap = 200 * quota + 10000;
        auto& mine = bins[b];
        mine.reserve(static_cast<std::size_t>(quota));
        Index tries = 0;
        while (static_cast<Index>(mine.size()) < quota && tries < cap) {
            ++tries;
            const double rho =
                std::sqrt(rho_min * rho_min + rng.uniform() * (rho_max * rho_max - rho_min * rho_min));
            const double ang = 2.0 * pi * rng.uniform();
            Vector y(2);
            y << rho * std::cos(ang), rho * std::sin(ang);
            const double t = spec.embed(y).norm();
            if (t < t0 || t > t1) {
                continue;
            }
            const double accept = spec.area_density(y) / bound * law.unnormalized(t) / g0;
            if (rng.uniform() < accept) {
                mine.push_back(direction_bin(spec.log_chart(y), options.n_bins));
            }
        }
        proposals[b] = tries;
    });

    DirectionalBiasReport rep;
    rep.shell_t = t0;
    rep.shell_width = width;
    rep.bin_counts.assign(static_cast<std::size_t>(options.n_bins), 0.0);
    for (std::size_t b = 0; b < bins.size(); ++b) {
        rep.proposals += proposals[b];
        for (Index bin : bins[b]) {
            rep.bin_counts[static_cast<std::size_t>(bin)] += 1.0;
        }
        rep.hits += static_cast<Index>(bins[b].size());
    }
    require(rep.hits >= 1000, ErrorCode::insufficient_samples, "fewer than 1000 shell hits");

    const Index half = options.n_bins / 2;
    const double c1 = rep.bin_counts[0];
    const double c2 = rep.bin_counts[static_cast<std::size_t>(half)];
    require(c1 > 0.0 && c2 > 0.0, ErrorCode::insufficient_samples, "empty reference bin");
    rep.observed_log_ratio = std::log(c1 / c2);
    rep.standard_error = std::sqrt(1.0 / c1 + 1.0 / c2);

    const double kd = 2.0;
    auto log_density = [&](double phi) {
        Vector u(2);
        u << std::cos(phi), std::sin(phi);
        return (spec.ricci(u) / 6.0 + (kd + 2.0) / 24.0 * spec.kappa(u)) * t0 * t0;
    };
    rep.predicted_log_ratio = log_density(0.0) - log_density(0.5 * pi);

    const double bw = pi / static_cast<double>(options.n_bins);
    std::vector<double> predicted(static_cast<std::size_t>(options.n_bins));
    for (Index b = 0; b < options.n_bins; ++b) {
        const int sub = 64;
        double acc = 0.0;
        for (int i = 0; i < sub; ++i) {
            const double phi = (static_cast<double>(b) - 0.5 + (i + 0.5) / sub) * bw;
            acc += std::exp(log_density(phi));
        }
        predicted[static_cast<std::size_t>(b)] = std::log(acc / sub);
    }
    rep.predicted_binned_log_ratio = predicted[0] - predicted[static_cast<std::size_t>(half)];

    double obs_mean = 0.0, pred_mean = 0.0;
    bool all_positive = true;
    for (std::size_t b = 0; b < predicted.size(); ++b) {
        all_positive = all_positive && rep.bin_counts[b] > 0.0;
        obs_mean += rep.bin_counts[b] > 0.0 ? std::log(rep.bin_counts[b]) : 0.0;
        pred_mean += predicted[b];
    }
    obs_mean /= static_cast<double>(predicted.size());
    pred_mean /= static_cast<double>(predicted.size());
    rep.max_abs_deviation = all_positive ? 0.0 : std::numeric_limits<double>::infinity();
    if (all_positive) {
        for (std::size_t b = 0; b < predicted.size(); ++b) {
            const double dev = (std::log(rep.bin_counts[b]) - obs_mean) - (predicted[b] - pred_mean);
            rep.max_abs_deviation = std::max(rep.max_abs_deviation, std::abs(dev));
        }
    }

    const double expected = static_cast<double>(rep.hits) / static_cast<double>(options.n_bins);
    for (double c : rep.bin_counts) {
        rep.chi2 += (c - expected) * (c - expected) / expected;
    }
    rep.chi2_p_uniform = boost::math::gamma_q(0.5 * static_cast<double>(options.n_bins - 1), 0.5 * rep.chi2);
    return rep;
}

MarginalBiasReport marginal_directional_bias(const ManifoldSpec& spec, const RadialLaw& law, Index n_samples,
                                             std::uint64_t seed, Index n_bins) {
    require(spec.intrinsic_dim() == 2, ErrorCode::unsupported, "directional bias needs a 2-D manifold");
    check_bins(n_bins);
    const Matrix y = sample_manifold(spec, law, n_samples, seed);
    std::vector<Index> bin_of(static_cast<std::size_t>(n_samples));
    parallel_for(static_cast<std::size_t>(batch_count(n_samples)), [&](std::size_t b) {
        const Index start = static_cast<Index>(b) * kBatch;
        const Index stop = std::min(n_samples, start + kBatch);
        for (Index i = start; i < stop; ++i) {
            bin_of[static_cast<std::size_t>(i)] = direction_bin(spec.log_chart(y.row(i).transpose()), n_bins);
        }
    });
    double c1 = 0.0, c2 = 0.0;
    for (Index b : bin_of) {
        c1 += b == 0 ? 1.0 : 0.0;
        c2 += b == n_bins / 2 ? 1.0 : 0.0;
    }
    require(c1 > 0.0 && c2 > 0.0, ErrorCode::insufficient_samples, "empty reference bin");
    MarginalBiasReport rep;
    rep.log_ratio = std::log(c1 / c2);
    rep.standard_error = std::sqrt(1.0 / c1 + 1.0 / c2);
    rep.eta = moment_ratio(law, spec.intrinsic_dim());
    rep.samples = n_samples;
    return rep;
}

} // namespace tscope
