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

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace tscope {

namespace {

constexpr Index kMaxGraphDim = 8;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxGraphDim, 1>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxGraphDim, kMaxGraphDim>;

double sup_second_form(const std::vector<Eigen::MatrixXd>& a, Index k) {
    std::vector<const Eigen::MatrixXd*> active;
    for (const auto& m : a) {
        if (m.norm() > 0.0) {
            active.push_back(&m);
        }
    }
    if (active.empty()) {
        return 0.0;
    }
    if (active.size() == 1) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*active.front(), Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    }
    auto norm_at = [&](const Eigen::VectorXd& u) {
        double s = 0.0;
        for (const auto* m : active) {
            const double q = u.dot(*m * u);
            s += q * q;
        }
        return std::sqrt(s);
    };
    if (k == 1) {
        return norm_at(Eigen::VectorXd::Ones(1));
    }
    if (k == 2) {
        // Scan the half circle, then refine the best cell by golden-section search.
        const int n = 4096;
        const double pi = std::numbers::pi;
        auto at = [&](double th) {
            Eigen::VectorXd u(2);
            u << std::cos(th), std::sin(th);
            return norm_at(u);
        };
        int best = 0;
        double best_val = -1.0;
        for (int i = 0; i < n; ++i) {
            const double val = at(pi * i / n);
            if (val > best_val) {
                best_val = val;
                best = i;
            }
        }
        double lo = pi * (best - 1) / n;
        double hi = pi * (best + 1) / n;
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        for (int it = 0; it < 60; ++it) {
            const double m1 = hi - g * (hi - lo);
            const double m2 = lo + g * (hi - lo);
            if (at(m1) < at(m2)) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        return std::max(best_val, at(0.5 * (lo + hi)));
    }
    double s = 0.0;
    for (const auto* m : active) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*m, Eigen::EigenvaluesOnly);
        const double op = es.eigenvalues().cwiseAbs().maxCoeff();
        s += op * op;
    }
    return std::sqrt(s);
}

using StateVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxGraphDim * (kMaxGraphDim + 1), 1>;

// Dormand-Prince 5(4) over [0, length] with mixed absolute/relative error control on the first
// `controlled` components.
template <class Rhs>
StateVec dopri5(StateVec state, double length, double h, double tol, Index controlled, const Rhs& rhs) {
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;
    double s = 0.0;
    StateVec k1 = rhs(state), k2, k3, k4, k5, k6, k7, next, err;
    int guard = 0;
    while (s < length) {
        require(++guard < 1000000, ErrorCode::degenerate, "geodesic integration did not converge");
        h = std::min(h, length - s);
        k2 = rhs(state + h * a21 * k1);
        k3 = rhs(state + h * (a31 * k1 + a32 * k2));
        k4 = rhs(state + h * (a41 * k1 + a42 * k2 + a43 * k3));
        k5 = rhs(state + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        k6 = rhs(state + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        next = state + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        k7 = rhs(next);
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double en = 0.0;
        for (Index i = 0; i < controlled; ++i) {
            const double sc = tol + tol * std::max(std::abs(state(i)), std::abs(next(i)));
            en = std::max(en, std::abs(err(i)) / sc);
        }
        if (en <= 1.0) {
            s += h;
            state = next;
            k1 = k7;
        }
        h *= en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
    }
    return state;
}

// Geodesic equation of a quadratic graph in its chart: ÿ = -G⁻¹ Σ_j (A_j y)(ẏᵀA_j ẏ),
// G = I + Σ_j (A_j y)(A_j y)ᵀ. Shooting runs over τ in [0, 1] with ẏ(0) = w, so y(1) = exp(w).
class GraphGeodesic {
public:
    GraphGeodesic(const std::vector<Eigen::MatrixXd>& a, Index k, double bound) : k_(k), bound_(bound) {
        for (const auto& m : a) {
            if (m.norm() > 0.0) {
                a_.push_back(m);
            }
        }
    }

    SmallVec endpoint(const SmallVec& w, double tol) const {
        StateVec state = StateVec::Zero(2 * k_);
        state.tail(k_) = w;
        state = dopri5(state, 1.0, first_step(w), tol, 2 * k_, [this](const StateVec& x) { return rhs(x); });
        return state.head(k_);
    }

    // Also integrates the variational equations for d y(1) / d w.
    SmallVec endpoint(const SmallVec& w, double tol, SmallMat& jac) const {
        const Index kk = k_ * k_;
        StateVec state = StateVec::Zero(2 * k_ + 2 * kk);
        state.segment(k_, k_) = w;
        for (Index c = 0; c < k_; ++c) {
            state(2 * k_ + kk + c * k_ + c) = 1.0;
        }
        state = dopri5(state, 1.0, first_step(w), tol, 2 * k_, [this](const StateVec& x) { return rhs_variational(x); });
        jac = Eigen::Map<const SmallMat>(state.data() + 2 * k_, k_, k_);
        return state.head(k_);
    }

private:
    double first_step(const SmallVec& w) const { return std::min(1.0, 0.05 / std::max(1e-300, bound_ * w.norm())); }

    StateVec rhs(const StateVec& state) const {
        const auto y = state.head(k_);
        const auto p = state.segment(k_, k_);
        SmallMat g = SmallMat::Identity(k_, k_);
        SmallVec force = SmallVec::Zero(k_);
        for (const auto& m : a_) {
            const SmallVec ay = m * y;
            g.noalias() += ay * ay.transpose();
            force += ay * p.dot(m * p);
        }
        StateVec out(2 * k_);
        out.head(k_) = p;
        out.tail(k_) = -g.llt().solve(force);
        return out;
    }

    // dF = -G⁻¹ (dG F + df) for F = -G⁻¹ f, applied to each column of (Y, P).
    StateVec rhs_variational(const StateVec& state) const {
        const Index kk = k_ * k_;
        const auto y = state.head(k_);
        const auto p = state.segment(k_, k_);
        const std::size_t nm = a_.size();
        SmallMat g = SmallMat::Identity(k_, k_);
        SmallVec force = SmallVec::Zero(k_);
        std::vector<SmallVec> ay(nm), ap(nm);
        std::vector<double> q(nm);
        for (std::size_t j = 0; j < nm; ++j) {
            ay[j] = a_[j] * y;
            ap[j] = a_[j] * p;
            q[j] = p.dot(ap[j]);
            g.noalias() += ay[j] * ay[j].transpose();
            force += ay[j] * q[j];
        }
        const Eigen::LLT<SmallMat> llt(g);
        const SmallVec accel = -llt.solve(force);
        StateVec out(2 * k_ + 2 * kk);
        out.head(k_) = p;
        out.segment(k_, k_) = accel;
        out.segment(2 * k_, kk) = state.segment(2 * k_ + kk, kk);
        for (Index c = 0; c < k_; ++c) {
            const auto dy = state.segment(2 * k_ + c * k_, k_);
            const auto dp = state.segment(2 * k_ + kk + c * k_, k_);
            SmallVec acc = SmallVec::Zero(k_);
            for (std::size_t j = 0; j < nm; ++j) {
                const SmallVec ady = a_[j] * dy;
                acc += ady * (ay[j].dot(accel) + q[j]) + ay[j] * (ady.dot(accel) + 2.0 * ap[j].dot(dp));
            }
            out.segment(2 * k_ + kk + c * k_, k_) = -llt.solve(acc);
        }
        return out;
    }

    Index k_;
    double bound_;
    std::vector<Eigen::MatrixXd> a_;
};

// Arc length of the parabola z = ½ c y² from 0 to y, and its inverse.
double parabola_arc(double c, double y) {
    const double cy = c * y;
    return 0.5 * (y * std::sqrt(1.0 + cy * cy) + std::asinh(cy) / c);
}

double parabola_arc_inverse(double c, double s) {
    double y = s;
    for (int it = 0; it < 60; ++it) {
        const double step = (parabola_arc(c, y) - s) / std::sqrt(1.0 + c * c * y * y);
        y -= step;
        if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(y))) {
            break;
        }
    }
    return y;
}

constexpr double kOdeTol = 1e-13;
constexpr double kShootTol = 1e-11;

} // namespace

ManifoldSpec ManifoldSpec::sphere(double radius, Index k) {
    require(std::isfinite(radius) && radius > 0.0, ErrorCode::invalid_argument, "sphere radius must be positive");
    require(k >= 1, ErrorCode::invalid_argument, "intrinsic dimension must be >= 1");
    ManifoldSpec s;
    s.kind_ = Kind::sphere;
    s.k_ = k;
    s.d_ = k + 1;
    s.radius_ = radius;
    s.a_.assign(1, -Eigen::MatrixXd::Identity(k, k) / radius);
    s.bound_ = 1.0 / radius;
    return s;
}

ManifoldSpec ManifoldSpec::quadratic_graph(std::vector<Eigen::MatrixXd> a, Index k, Index ambient_dim) {
    require(k >= 1, ErrorCode::invalid_argument, "intrinsic dimension must be >= 1");
    require(ambient_dim > k, ErrorCode::invalid_argument, "ambient dimension must exceed intrinsic dimension");
    require(static_cast<Index>(a.size()) <= ambient_dim - k, ErrorCode::dimension_mismatch,
            "more coefficient matrices than normal directions");
    for (auto& m : a) {
        require(m.rows() == k && m.cols() == k, ErrorCode::dimension_mismatch, "coefficient matrix must be k x k");
        require(m.allFinite(), ErrorCode::non_finite, "coefficient matrix has non-finite entries");
        require((m - m.transpose()).norm() <= 1e-12 * std::max(1.0, m.norm()), ErrorCode::invalid_argument,
                "coefficient matrix must be symmetric");
        m = 0.5 * (m + m.transpose());
    }
    a.resize(static_cast<std::size_t>(ambient_dim - k), Eigen::MatrixXd::Zero(k, k));
    ManifoldSpec s;
    s.kind_ = Kind::quadratic_graph;
    s.k_ = k;
    s.d_ = ambient_dim;
    s.a_ = std::move(a);
    s.bound_ = sup_second_form(s.a_, k);
    require(std::isfinite(s.bound_), ErrorCode::invalid_argument, "second fundamental form bound is not finite");
    if (s.bound_ > 0.0) {
        Eigen::MatrixXd stacked(k, k * static_cast<Index>(s.a_.size()));
        double scale = 0.0;
        for (std::size_t j = 0; j < s.a_.size(); ++j) {
            stacked.middleCols(static_cast<Index>(j) * k, k) = s.a_[j];
            scale = std::max(scale, s.a_[j].norm());
        }
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinU);
        const Vector e = svd.matrixU().col(0);
        double c2 = 0.0;
        bool ruled = true;
        for (const auto& m : s.a_) {
            const double aj = e.dot(m * e);
            ruled = ruled && (m - aj * e * e.transpose()).norm() <= 1e-13 * scale;
            c2 += aj * aj;
        }
        if (ruled) {
            s.ruled_curvature_ = std::sqrt(c2);
            s.ruled_axis_ = e;
        }
    }
    return s;
}

ManifoldSpec ManifoldSpec::flat(Index k, Index ambient_dim) { return quadratic_graph({}, k, ambient_dim); }

bool ManifoldSpec::is_flat() const { return bound_ == 0.0; }

Vector ManifoldSpec::second_form(const Vector& u, const Vector& w) const {
    require(u.size() == k_ && w.size() == k_, ErrorCode::dimension_mismatch, "tangent vector has wrong size");
    Vector out(d_ - k_);
    for (Index j = 0; j < d_ - k_; ++j) {
        out(j) = u.dot(a_[static_cast<std::size_t>(j)] * w);
    }
    return out;
}

double ManifoldSpec::kappa(const Vector& u) const { return second_form(u, u).squaredNorm(); }

double ManifoldSpec::curvature_bound() const { return bound_; }

double ManifoldSpec::reach() const {
    if (kind_ == Kind::sphere) {
        return radius_;
    }
    return bound_ == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / bound_;
}

double ManifoldSpec::ricci(const Vector& u) const {
    require(u.size() == k_, ErrorCode::dimension_mismatch, "tangent vector has wrong size");
    const double uu = u.squaredNorm();
    if (kind_ == Kind::sphere) {
        return static_cast<double>(k_ - 1) / (radius_ * radius_) * uu;
    }
    if (k_ == 1) {
        return 0.0;
    }
    require(k_ == 2, ErrorCode::unsupported, "Ricci curvature is only analytic for spheres and 2-D graphs");
    double gauss = 0.0;
    for (const auto& m : a_) {
        gauss += m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    }
    return gauss * uu;
}

double ManifoldSpec::chart_radius() const {
    // Graph charts are global; the geodesic radius is limited only for spheres.
    return kind_ == Kind::sphere ? 0.5 * radius_ : std::numeric_limits<double>::infinity();
}

Vector ManifoldSpec::height(const Vector& y) const {
    require(y.size() == k_, ErrorCode::dimension_mismatch, "chart point has wrong size");
    Vector h(d_ - k_);
    if (kind_ == Kind::sphere) {
        const double yy = y.squaredNorm();
        require(yy < radius_ * radius_, ErrorCode::chart_out_of_range, "chart point outside the sphere chart");
        h(0) = -yy / (radius_ + std::sqrt(radius_ * radius_ - yy));
        return h;
    }
    for (Index j = 0; j < d_ - k_; ++j) {
        h(j) = 0.5 * y.dot(a_[static_cast<std::size_t>(j)] * y);
    }
    return h;
}

Vector ManifoldSpec::embed(const Vector& y) const {
    Vector x(d_);
    x.head(k_) = y;
    x.tail(d_ - k_) = height(y);
    return x;
}

double ManifoldSpec::area_density(const Vector& y) const {
    require(y.size() == k_, ErrorCode::dimension_mismatch, "chart point has wrong size");
    if (kind_ == Kind::sphere) {
        const double yy = y.squaredNorm();
        require(yy < radius_ * radius_, ErrorCode::chart_out_of_range, "chart point outside the sphere chart");
        return radius_ / std::sqrt(radius_ * radius_ - yy);
    }
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(k_, k_);
    for (const auto& m : a_) {
        const Eigen::VectorXd ay = m * y;
        g.noalias() += ay * ay.transpose();
    }
    return std::sqrt(g.determinant());
}

Vector ManifoldSpec::exp_chart(const Vector& w) const {
    require(w.size() == k_, ErrorCode::dimension_mismatch, "normal coordinates have wrong size");
    const double r = w.norm();
    if (r == 0.0) {
        return Vector::Zero(k_);
    }
    if (kind_ == Kind::sphere) {
        require(r < 0.5 * std::numbers::pi * radius_, ErrorCode::chart_out_of_range,
                "geodesic radius leaves the sphere chart");
        return radius_ * std::sin(r / radius_) * (w / r);
    }
    if (is_flat()) {
        return w;
    }
    if (ruled_curvature_ > 0.0) {
        const double along = ruled_axis_.dot(w);
        return w + (parabola_arc_inverse(ruled_curvature_, along) - along) * ruled_axis_;
    }
    require(k_ <= kMaxGraphDim, ErrorCode::unsupported, "graph geodesics support k <= 8");
    const GraphGeodesic geo(a_, k_, bound_);
    return Vector(geo.endpoint(SmallVec(w), kOdeTol));
}

Vector ManifoldSpec::log_chart(const Vector& y) const {
    require(y.size() == k_, ErrorCode::dimension_mismatch, "chart point has wrong size");
    const double rho = y.norm();
    if (rho == 0.0) {
        return Vector::Zero(k_);
    }
    if (kind_ == Kind::sphere) {
        require(rho < radius_, ErrorCode::chart_out_of_range, "chart point outside the sphere chart");
        return radius_ * std::asin(rho / radius_) * (y / rho);
    }
    if (is_flat()) {
        return y;
    }
    if (ruled_curvature_ > 0.0) {
        const double along = ruled_axis_.dot(y);
        return y + (parabola_arc(ruled_curvature_, along) - along) * ruled_axis_;
    }
    require(k_ <= kMaxGraphDim, ErrorCode::unsupported, "graph geodesics support k <= 8");
    const GraphGeodesic geo(a_, k_, bound_);
    // Newton shooting from the third-order inverse expansion w ≈ y + (1/6) Σ_j (A_j y)(yᵀA_j y).
    SmallVec w = y;
    for (const auto& m : a_) {
        const Vector ay = m * y;
        w += ay * (y.dot(ay) / 6.0);
    }
    // The Jacobian from the variational equations at the first guess is kept for all iterations.
    SmallMat jac(k_, k_);
    SmallVec f = geo.endpoint(w, kShootTol, jac) - y;
    const Eigen::PartialPivLU<SmallMat> lu(jac);
    const double target = 1e-12 * std::max(1.0, rho);
    for (int it = 0; it < 50 && f.norm() > target; ++it) {
        w -= lu.solve(f);
        f = geo.endpoint(w, kShootTol) - y;
    }
    require(f.norm() <= 1e-9 * std::max(1.0, rho), ErrorCode::degenerate, "log map shooting did not converge");
    return Vector(w);
}

std::string ManifoldSpec::describe() const {
    std::ostringstream os;
    if (kind_ == Kind::sphere) {
        os << "sphere(R=" << radius_ << ", k=" << k_ << ")";
    } else {
        os << "quadratic_graph(k=" << k_ << ", D=" << d_ << ", C=" << bound_ << ")";
    }
    return os.str();
}

RadialLaw RadialLaw::uniform(double support) {
    require(std::isfinite(support) && support > 0.0, ErrorCode::invalid_argument, "support must be positive");
    RadialLaw l;
    l.kind_ = Kind::uniform;
    l.support_ = support;
    return l;
}

RadialLaw RadialLaw::truncated_exponential(double sigma, double support) {
    require(std::isfinite(support) && support > 0.0, ErrorCode::invalid_argument, "support must be positive");
    require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::invalid_argument, "scale must be positive");
    RadialLaw l;
    l.kind_ = Kind::truncated_exponential;
    l.support_ = support;
    l.param_ = sigma;
    return l;
}

RadialLaw RadialLaw::power(double exponent, double support) {
    require(std::isfinite(support) && support > 0.0, ErrorCode::invalid_argument, "support must be positive");
    require(std::isfinite(exponent) && exponent > 0.0, ErrorCode::invalid_argument,
            "power exponent must be positive for a decreasing density");
    RadialLaw l;
    l.kind_ = Kind::power;
    l.support_ = support;
    l.param_ = exponent;
    return l;
}

double RadialLaw::unnormalized(double t) const {
    if (!(t >= 0.0) || t > support_) {
        return 0.0;
    }
    switch (kind_) {
    case Kind::uniform:
        return 1.0;
    case Kind::truncated_exponential:
        return std::exp(-t / param_);
    case Kind::power:
        return t == 0.0 ? std::numeric_limits<double>::infinity() : std::pow(t, -param_);
    }
    return 0.0;
}

double RadialLaw::density(double t) const {
    double mass = 0.0;
    switch (kind_) {
    case Kind::uniform:
        mass = support_;
        break;
    case Kind::truncated_exponential:
        mass = -param_ * std::expm1(-support_ / param_);
        break;
    case Kind::power:
        require(param_ < 1.0, ErrorCode::non_integrable, "t^-p is not integrable on [0, T] for p >= 1");
        mass = std::pow(support_, 1.0 - param_) / (1.0 - param_);
        break;
    }
    return unnormalized(t) / mass;
}

RadialLaw RadialLaw::scaled(double c) const {
    require(std::isfinite(c) && c > 0.0, ErrorCode::invalid_argument, "scale factor must be positive");
    RadialLaw l = *this;
    l.support_ *= c;
    if (kind_ == Kind::truncated_exponential) {
        l.param_ *= c;
    }
    return l;
}

std::string RadialLaw::describe() const {
    std::ostringstream os;
    switch (kind_) {
    case Kind::uniform:
        os << "uniform(T=" << support_ << ")";
        break;
    case Kind::truncated_exponential:
        os << "truncated_exponential(sigma=" << param_ << ", T=" << support_ << ")";
        break;
    case Kind::power:
        os << "power(p=" << param_ << ", T=" << support_ << ")";
        break;
    }
    return os.str();
}

double moment_ratio(const RadialLaw& law, Index k) {
    require(k >= 1, ErrorCode::invalid_argument, "k must be >= 1");
    const double T = law.support();
    const double kd = static_cast<double>(k);
    if (law.kind() == RadialLaw::Kind::power) {
        require(law.parameter() < kd, ErrorCode::non_integrable,
                "g t^{k-1} is not integrable at 0 when the power exponent is >= k");
    }
    // Integrate in s = t / T so that both moments are O(1) whatever the support.
    auto moment = [&](double power) {
        auto f = [&](double s) {
            if (s <= 0.0) {
                return 0.0;
            }
            const double t = s * T;
            const double g = law.kind() == RadialLaw::Kind::truncated_exponential
                                 ? std::exp(-(t / law.parameter()))
                                 : law.unnormalized(t);
            return g * std::pow(s, power);
        };
        boost::math::quadrature::tanh_sinh<double> ts;
        if (law.kind() == RadialLaw::Kind::truncated_exponential) {
            const double cut = std::min(1.0, 40.0 * law.parameter() / T);
            double value = ts.integrate(f, 0.0, cut, 1e-12);
            if (cut < 1.0) {
                value += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, cut, 1.0, 15, 1e-12);
            }
            return value;
        }
        return ts.integrate(f, 0.0, 1.0, 1e-12);
    };
    const double num = moment(kd + 1.0);
    const double den = moment(kd - 1.0);
    require(den > 0.0 && std::isfinite(num) && std::isfinite(den), ErrorCode::non_integrable,
            "moments are not finite");
    return num / den * T * T;
}

SampleDecomposition decompose_sample(const ManifoldSpec& spec, const Vector& coords) {
    const Index k = spec.intrinsic_dim();
    require(coords.size() == k, ErrorCode::dimension_mismatch, "intrinsic coordinates have wrong size");
    require(coords.allFinite(), ErrorCode::non_finite, "intrinsic coordinates are not finite");
    const double r = coords.norm();
    require(r < spec.chart_radius(), ErrorCode::chart_out_of_range, "coordinates outside chart validity");
    SampleDecomposition out;
    const Vector y = spec.exp_chart(coords);
    const Index d = spec.ambient_dim();
    out.x = spec.embed(y);
    out.v = Vector::Zero(d);
    out.v.head(k) = y;
    out.n = Vector::Zero(d);
    out.n.tail(d - k) = out.x.tail(d - k);
    out.t_chord = out.x.norm();
    out.r_geodesic = r;
    if (r > 0.0) {
        out.u = coords / r;
    } else {
        out.u = Vector::Unit(k, 0);
    }
    return out;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y, double* intercept) {
    require(x.size() == y.size() && x.size() >= 2, ErrorCode::invalid_argument, "need at least two points");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    double sx = 0.0, sy = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            if (intercept) {
                *intercept = nan;
            }
            return nan;
        }
        sx += std::log(x[i]);
        sy += std::log(y[i]);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(y[i]) - my);
    }
    require(sxx > 0.0, ErrorCode::invalid_argument, "x values must not all coincide");
    const double slope = sxy / sxx;
    if (intercept) {
        *intercept = my - slope * mx;
    }
    return slope;
}

} // namespace tscope
