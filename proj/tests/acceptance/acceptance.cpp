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
// Acceptance runner: one PASS/FAIL line per criterion with the measured values.
//
//   acceptance [--only NAME]
//
// Exit status is 0 only when every selected criterion passes.

#include "tscope/concepts.hpp"
#include "tscope/grad_align.hpp"
#include "tscope/intrinsic_dim.hpp"
#include "tscope/isotropy.hpp"
#include "tscope/manifold.hpp"
#include "tscope/pipeline.hpp"
#include "tscope/rng.hpp"
#include "tscope/synthetic.hpp"
#include "tscope/trajectory.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

using namespace tscope;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    // Records one measured quantity and folds its verdict into the outcome.
    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (detail.tellp() > 0) {
            detail << "; ";
        }
        detail << what << (ok ? "" : " [miss]");
    }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) {
        out(i++) = x;
    }
    return out;
}

ManifoldSpec graph_diag(std::initializer_list<double> d, Index ambient) {
    const Vector a = vec(d);
    return ManifoldSpec::quadratic_graph({Eigen::MatrixXd(a.asDiagonal())}, a.size(), ambient);
}

std::filesystem::path scratch(const std::string& tag) {
    const auto p = std::filesystem::temp_directory_path() / ("tscope_accept_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    return p;
}

void isoscore_worked_example(Outcome& o) {
    const double iso = isoscore_star(Spectrum({100.0, 10.0, 1.0, 1e-3}, 4));
    o.check(std::abs(iso - 0.0733) <= 1e-3, "IsoScore*(100,10,1,1e-3)=" + num(iso) + " (0.0733+-0.001)");
    const double flat = isoscore_star(Spectrum({3.0, 3.0, 3.0, 3.0}, 4));
    o.check(flat == 1.0, "equal eigenvalues=" + num(flat));
    const double one = isoscore_star(Spectrum({5.0}, 4));
    o.check(one == 0.0, "rank one=" + num(one));
}

void monte_carlo_floor(Outcome& o) {
    const Index d_in = 64, d_out = 32, rank = 8;
    Rng rng(17);
    const OrthonormalBasis qt = sample_subspace(d_in, rank, 18);
    Matrix rows = rng.gaussian(400, rank) * qt.columns().transpose() * 3.0;
    rows += 0.1 * rng.gaussian(400, d_in);
    const auto cloud = ActivationCloud::from_rows(rows);
    const Matrix b = rng.gaussian(d_out, rank) * qt.columns().transpose();
    const EnergyTestResult r = energy_test(b, qt, cloud, 20, 19);
    o.check(r.p_energy == 1.0 / 21.0, "p_energy=" + num(r.p_energy) + " (==1/21)");
}

void exact_sign_test(Outcome& o) {
    const double p = sign_test(std::vector<double>(24, 1.0));
    o.check(std::abs(p - std::ldexp(1.0, -24)) <= 1e-12, "p=" + num(p) + " (2^-24=" + num(std::ldexp(1.0, -24)) + ")");
}

void chord_arc(Outcome& o) {
    const auto sph = ManifoldSpec::sphere(1.0, 2);
    const Vector u = vec({1.0, 0.0});
    const auto at = chord_arc_check(sph, u, {0.1});
    o.check(std::abs(at.residual[0]) <= 5e-9, "|residual(r=0.1)|=" + num(std::abs(at.residual[0])) + " (<=5e-9)");
    const auto grid = chord_arc_check(sph, u, {0.05, 0.075, 0.1, 0.15, 0.2, 0.3});
    o.check(std::abs(grid.residual_slope - 5.0) <= 0.5,
            "residual slope over [0.05,0.3]=" + num(grid.residual_slope) + " (5+-0.5)");
}

void compression_ratio_check(Outcome& o) {
    const auto sph = ManifoldSpec::sphere(1.0, 2);
    const double r = 0.2;
    const double m = compression_ratio(sph, vec({1.0, 0.0}), r);
    o.check(std::abs(m - std::cos(0.1)) <= 1e-5, "dt/dr=" + num(m) + " vs cos(0.1)=" + num(std::cos(0.1)));
    const double pred = 1.0 - r * r / 8.0;
    o.check(std::abs(m - pred) <= 1e-5, "|dt/dr-(1-r^2/8)|=" + num(std::abs(m - pred)) + " (<=1e-5)");
}

void directional_bias(Outcome& o) {
    DirectionalBiasOptions opt;
    opt.shell_t = 0.3;
    opt.n_samples = 100000;
    opt.seed = 7;
    const auto g = directional_bias_estimate(graph_diag({4.0, 0.0}, 3), RadialLaw::uniform(1.0), opt);
    const double target = 0.36;
    o.check(std::abs(g.observed_log_ratio - target) <= 3.0 * g.standard_error,
            "observed log-ratio=" + num(g.observed_log_ratio) + " se=" + num(g.standard_error) + " (0.36+-3se; formula " +
                num(g.predicted_log_ratio) + ")");
    const auto s = directional_bias_estimate(ManifoldSpec::sphere(1.0, 2), RadialLaw::uniform(1.0), opt);
    o.check(s.chi2_p_uniform > 0.01, "sphere chi2 p=" + num(s.chi2_p_uniform) + " (>0.01)");
}

void attenuation(Outcome& o) {
    const auto cyl = graph_diag({4.0, 0.0}, 3);
    std::vector<double> lr;
    std::string values;
    for (double sigma : {0.3, 0.1, 0.03}) {
        const auto m = marginal_directional_bias(cyl, RadialLaw::truncated_exponential(sigma, 0.5), 1000000, 3);
        lr.push_back(m.log_ratio);
        values += (values.empty() ? "" : ",") + num(m.log_ratio);
    }
    o.check(lr[0] > lr[1] && lr[1] > lr[2], "marginal log-ratio at sigma 0.3,0.1,0.03 = " + values + " (decreasing)");
    const double eta = moment_ratio(RadialLaw::uniform(1.0), 2);
    o.check(std::abs(eta - 0.5) <= 1e-9, "eta(uniform,[0,1],k=2)=" + num(eta));
}

void scale_separation(Outcome& o) {
    const auto rep = covariance_scale_check(graph_diag({1.0, 1.0}, 3), RadialLaw::uniform(1.0),
                                            {0.02, 0.05, 0.1, 0.2}, 10000, 5);
    o.check(std::abs(rep.tangent_slope - 2.0) <= 0.1, "tangent-trace slope=" + num(rep.tangent_slope) + " (2+-0.1)");
    o.check(std::abs(rep.normal_slope - 4.0) <= 0.2, "normal-trace slope=" + num(rep.normal_slope) + " (4+-0.2)");
}

void tangent_dominance(Outcome& o) {
    DominanceOptions opt;
    opt.seed = 5;
    const auto dom = tangent_dominance_experiment(graph_diag({1.0, 1.0}, 8), RadialLaw::uniform(1.0), opt);
    o.check(dom.fitted_slope >= 0.85 && dom.fitted_slope <= 1.15,
            "gradient-ratio slope=" + num(dom.fitted_slope) + " ([0.85,1.15])");
    const auto bil = bilinear_score_scaling(graph_diag({2.0, 2.0}, 3), RadialLaw::uniform(1.0), {0.05, 0.1, 0.2, 0.4},
                                            9, 50000, 2);
    o.check(std::abs(bil.tangent_slope - 2.0) <= 0.2, "attention slopes=" + num(bil.tangent_slope));
    o.check(std::abs(bil.cross_slope - 3.0) <= 0.2, num(bil.cross_slope));
    o.check(std::abs(bil.normal_slope - 4.0) <= 0.2, num(bil.normal_slope) + " ((2,3,4)+-0.2)");
}

void planted_pipeline(Outcome& o) {
    const auto dir = scratch("planted");
    PlantedRunOptions tangent;
    tangent.seed = 11;
    const RunManifest tm = write_planted_run(dir / "tangent", tangent);
    const RunManifest am = write_planted_run(dir / "anti", PlantedRunOptions::anti(11));
    PipelineConfig config;
    config.seed = 3;
    for (Phase phase : {Phase::early, Phase::late}) {
        const std::string tag = to_string(phase);
        const auto r = run_grad_pipeline(tm, "L0", phase, config);
        bool all_floor = r.skipped.empty() && r.row.p_e_null == 1.0 / 21.0;
        for (const auto& a : r.anchors) {
            for (const auto& e : a.energy) {
                all_floor = all_floor && e.p_energy == 1.0 / 21.0;
            }
        }
        o.check(all_floor && r.anchors.size() == 24,
                tag + ": anchors=" + std::to_string(r.anchors.size()) + " p_E_null=" + num(r.row.p_e_null));
        o.check(r.row.d_iso_t_pct > 0.0 && 0.0 > r.row.d_iso_n_pct,
                "dIso_T_pct=" + num(r.row.d_iso_t_pct) + " dIso_N_pct=" + num(r.row.d_iso_n_pct));
        o.check(r.row.p_sign <= 1e-6, "p_sign=" + num(r.row.p_sign));
        const auto anti = run_grad_pipeline(am, "L0", phase, config);
        o.check(anti.row.e_r < 1.0, "anti E_r=" + num(anti.row.e_r));
    }
    std::filesystem::remove_all(dir);
}

void estimator_ground_truth(Outcome& o) {
    const PointCloud plane(uniform_plane_cloud(2000, 10, 2, 23));
    const double two = twonn_id(plane);
    o.check(two >= 1.8 && two <= 2.2, "TwoNN=" + num(two) + " ([1.8,2.2])");
    const double gm = gmst_id(plane, default_gmst_sizes(plane.size()), 3, 24).dimension;
    o.check(gm >= 1.7 && gm <= 2.4, "GMST=" + num(gm) + " ([1.7,2.4])");
    bool eff_ok = true;
    for (Index d : {1, 2, 7, 64, 500}) {
        const double r = effective_rank(Spectrum(std::vector<double>(static_cast<std::size_t>(d), 0.3), d));
        eff_ok = eff_ok && std::abs(r - static_cast<double>(d)) <= 1e-9 * static_cast<double>(d);
    }
    o.check(eff_ok, "effective rank on flat spectra == d");
    const Index p = pca70(Spectrum(std::vector<double>(200, 1.0), 200), 0.7, 100);
    o.check(p == 101, "PCA70 flat-200=" + std::to_string(p));
}

void enrichment(Outcome& o) {
    const Index d = 128, rank = 8;
    const auto walk = isotropic_walk_series(501, d, 0.1, 31);
    const EnrichmentResult iso = update_enrichment(walk, rank);
    double worst = 0.0;
    for (std::size_t i = 0; i < iso.tangent_per_update.size(); ++i) {
        const double lhs = rank * iso.tangent_per_update[i] + (d - rank) * iso.normal_per_update[i];
        worst = std::max(worst, std::abs(lhs - static_cast<double>(d)));
    }
    o.check(worst <= 1e-6 && iso.n_updates == 500, "max identity error=" + num(worst) + " over " +
                                                       std::to_string(iso.n_updates) + " updates");
    o.check(std::abs(iso.tangent_enrichment - 1.0) <= 0.1 && std::abs(iso.normal_enrichment - 1.0) <= 0.1,
            "isotropic updates tangent=" + num(iso.tangent_enrichment) + " normal=" + num(iso.normal_enrichment) +
                " (1+-0.1)");
    const auto frequent = drift_series(100, 64, 4, 0.05, 0.002, 11);
    const auto rare = isotropic_walk_series(100, 64, 0.2, 12);
    const double ef = update_enrichment(frequent, 4).tangent_enrichment;
    const double er = update_enrichment(rare, 4).tangent_enrichment;
    o.check(ef > er, "frequent tangent=" + num(ef) + " > rare tangent=" + num(er));
}

void seminmf_check(Outcome& o) {
    bool monotone = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SemiNmfOptions opt;
        opt.max_iters = 300;
        opt.tol = 0.0;
        opt.seed = seed;
        const auto d = seminmf(Rng(seed).gaussian(80, 30), 6, opt);
        for (std::size_t i = 1; i < d.objective_trace.size(); ++i) {
            monotone = monotone && d.objective_trace[i] <= d.objective_trace[i - 1] + 1e-12 * d.objective_trace.front();
        }
    }
    Rng rng(40);
    Vector z(60), h(25);
    for (Index i = 0; i < z.size(); ++i) {
        z(i) = 0.1 + rng.uniform();
    }
    for (Index j = 0; j < h.size(); ++j) {
        h(j) = rng.normal();
    }
    const Matrix x = z * h.transpose();
    SemiNmfOptions opt;
    opt.seed = 41;
    const auto d = seminmf(x, 1, opt);
    for (std::size_t i = 1; i < d.objective_trace.size(); ++i) {
        monotone = monotone && d.objective_trace[i] <= d.objective_trace[i - 1] + 1e-12 * d.objective_trace.front();
    }
    o.check(monotone, "objective monotone on 6 runs");
    const double rel = (x - d.z * d.h).norm() / x.norm();
    o.check(rel <= 1e-3, "planted rank-1 relative error=" + num(rel) + " (<=1e-3)");
}

struct Criterion {
    std::string name;
    double budget_seconds;
    std::function<void(Outcome&)> run;
};

} // namespace

int main(int argc, char** argv) {
    std::string only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            only = argv[++i];
        } else {
            std::cerr << "usage: acceptance [--only NAME]\n";
            return 2;
        }
    }
    const std::vector<Criterion> criteria{
        {"isoscore_worked_example", 1e-3, isoscore_worked_example},
        {"monte_carlo_floor", 1.0, monte_carlo_floor},
        {"exact_sign_test", 1e-3, exact_sign_test},
        {"chord_arc", 1.0, chord_arc},
        {"compression_ratio", 1.0, compression_ratio_check},
        {"directional_bias", 60.0, directional_bias},
        {"attenuation", 60.0, attenuation},
        {"scale_separation", 30.0, scale_separation},
        {"tangent_dominance", 60.0, tangent_dominance},
        {"planted_pipeline", 300.0, planted_pipeline},
        {"estimator_ground_truth", 30.0, estimator_ground_truth},
        {"enrichment", 30.0, enrichment},
        {"seminmf", 30.0, seminmf_check},
    };
    bool all = true, matched = false;
    for (const auto& c : criteria) {
        if (!only.empty() && c.name != only) {
            continue;
        }
        matched = true;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.check(false, std::string("error: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.check(secs < c.budget_seconds, "runtime " + num(secs) + "s (<" + num(c.budget_seconds) + "s)");
        std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail.str() << std::endl;
        all = all && o.pass;
    }
    if (!matched) {
        std::cerr << "unknown criterion '" << only << "'\n";
        return 2;
    }
    return all ? 0 : 1;
}
