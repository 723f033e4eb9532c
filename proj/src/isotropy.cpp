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
#include "tscope/isotropy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace tscope {

Spectrum::Spectrum(std::vector<double> eigenvalues, Index ambient_dim)
    : values_(std::move(eigenvalues)), ambient_dim_(ambient_dim) {
    require(ambient_dim_ >= 1, ErrorCode::invalid_argument, "ambient dimension must be positive");
    require(static_cast<Index>(values_.size()) <= ambient_dim_, ErrorCode::invalid_argument,
            "more eigenvalues than the ambient dimension");
    double top = 0.0;
    for (double& v : values_) {
        require(std::isfinite(v), ErrorCode::non_finite, "non-finite eigenvalue");
        require(v >= -1e-12, ErrorCode::invalid_argument, "negative eigenvalue " + std::to_string(v));
        v = std::max(v, 0.0);
        top = std::max(top, v);
    }
    for (double& v : values_) {
        if (v < 1e-12 * top) {
            v = 0.0;
        }
    }
    std::sort(values_.begin(), values_.end(), std::greater<>());
}

Index Spectrum::positive_count() const {
    return std::count_if(values_.begin(), values_.end(), [](double v) { return v > 0.0; });
}

double Spectrum::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

Covariance Covariance::of_gradient(const Matrix& b) {
    require(b.rows() >= 1, ErrorCode::invalid_argument, "empty gradient matrix");
    Covariance c;
    c.matrix = (b.transpose() * b) / static_cast<double>(b.rows());
    return c;
}

namespace {

double participation_ratio(const std::vector<double>& v) {
    const double top = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
    require(top > 0.0, ErrorCode::degenerate, "all-zero spectrum");
    double l1 = 0.0;
    double l2 = 0.0;
    for (double x : v) {
        const double y = x / top;
        l1 += y;
        l2 += y * y;
    }
    return l1 * l1 / l2;
}

double closed_form(double ratio, double d) { return std::clamp((ratio - 1.0) / (d - 1.0), 0.0, 1.0); }

} // namespace

double isoscore_star(const Spectrum& s) {
    require(s.ambient_dim() >= 2, ErrorCode::invalid_argument, "IsoScore* needs d >= 2");
    return closed_form(participation_ratio(s.eigenvalues()), static_cast<double>(s.ambient_dim()));
}

IsoScoreConventions isoscore_star_conventions(const Spectrum& s) {
    IsoScoreConventions out;
    out.ambient_d = isoscore_star(s);
    const Index support = s.positive_count();
    out.support_d = support >= 2 ? closed_form(participation_ratio(s.eigenvalues()), static_cast<double>(support))
                                 : std::numeric_limits<double>::quiet_NaN();
    return out;
}

Covariance shrink_covariance(const Covariance& c, double alpha) {
    require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::invalid_argument, "alpha must be in [0, 1]");
    require(c.matrix.rows() == c.matrix.cols() && c.matrix.rows() >= 1, ErrorCode::dimension_mismatch,
            "covariance must be square");
    const auto d = c.matrix.rows();
    const double level = c.matrix.trace() / static_cast<double>(d);
    Covariance out;
    out.matrix = (1.0 - alpha) * c.matrix;
    out.matrix.diagonal().array() += alpha * level;
    out.shrinkage_alpha = alpha;
    return out;
}

Spectrum spectrum_of(const Covariance& c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.matrix, Eigen::EigenvaluesOnly);
    const Vector& ev = es.eigenvalues();
    return Spectrum(std::vector<double>(ev.data(), ev.data() + ev.size()), c.matrix.rows());
}

Spectrum shrink_spectrum(const Spectrum& s, double alpha) {
    require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::invalid_argument, "alpha must be in [0, 1]");
    const Index d = s.ambient_dim();
    const double level = s.sum() / static_cast<double>(d);
    std::vector<double> out(static_cast<std::size_t>(d), alpha * level);
    for (std::size_t i = 0; i < s.eigenvalues().size(); ++i) {
        out[i] = (1.0 - alpha) * s.eigenvalues()[i] + alpha * level;
    }
    return Spectrum(std::move(out), d);
}

Spectrum gradient_spectrum(const Matrix& b, double alpha) {
    const Index d_out = b.rows();
    const Index d_in = b.cols();
    require(d_out >= 1 && d_in >= 1, ErrorCode::invalid_argument, "empty gradient matrix");
    Eigen::MatrixXd gram = d_out < d_in ? Eigen::MatrixXd(b * b.transpose()) : Eigen::MatrixXd(b.transpose() * b);
    gram /= static_cast<double>(d_out);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    const Vector& ev = es.eigenvalues();
    return shrink_spectrum(Spectrum(std::vector<double>(ev.data(), ev.data() + ev.size()), d_in), alpha);
}

double effective_rank(const Spectrum& s) {
    const double total = s.sum();
    require(total > 0.0, ErrorCode::degenerate, "all-zero spectrum");
    double h = 0.0;
    for (double v : s.eigenvalues()) {
        if (v > 0.0) {
            const double p = v / total;
            h -= p * std::log(p);
        }
    }
    return std::exp(h);
}

Index pca70(const Spectrum& s, double fraction, Index cap) {
    require(fraction > 0.0 && fraction < 1.0, ErrorCode::invalid_argument, "fraction must be in (0, 1)");
    const double total = s.sum();
    require(total > 0.0, ErrorCode::degenerate, "all-zero spectrum");
    double cum = 0.0;
    Index k = 0;
    for (double v : s.eigenvalues()) {
        cum += v;
        ++k;
        if (cum / total >= fraction - 1e-12) {
            break;
        }
    }
    return k > cap ? cap + 1 : k;
}

double eigvec_similarity(const OrthonormalBasis& prev, const OrthonormalBasis& next, Index topk) {
    require(prev.ambient_dim() == next.ambient_dim(), ErrorCode::dimension_mismatch, "ambient dimensions differ");
    require(topk >= 1 && topk <= prev.rank() && topk <= next.rank(), ErrorCode::invalid_argument,
            "topk exceeds a basis rank");
    double s = 0.0;
    for (Index i = 0; i < topk; ++i) {
        s += std::abs(prev.columns().col(i).dot(next.columns().col(i)));
    }
    return std::min(1.0, s / static_cast<double>(topk));
}

} // namespace tscope
