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
// tscope command line front door.
//
// Exit codes: 0 when every requested check passes, 1 when a check fails, 2 on usage or data
// errors.

#include "tscope/concepts.hpp"
#include "tscope/csv.hpp"
#include "tscope/intrinsic_dim.hpp"
#include "tscope/manifest.hpp"
#include "tscope/manifold.hpp"
#include "tscope/parallel.hpp"
#include "tscope/pipeline.hpp"
#include "tscope/rng.hpp"
#include "tscope/synthetic.hpp"
#include "tscope/tensor_io.hpp"

#include <CLI11.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tscope;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string out_dir;
};

// Writes to <out-dir>/<name> when an output directory is set, otherwise to stdout.
void emit(const Globals& g, const std::string& name, const CsvTable& table) {
    if (g.out_dir.empty()) {
        table.write(std::cout);
        return;
    }
    fs::create_directories(g.out_dir);
    table.write(fs::path(g.out_dir) / name);
    std::cerr << "wrote " << (fs::path(g.out_dir) / name).string() << "\n";
}

// ---- manifold-verify -------------------------------------------------------------------------

// "sphere:R=1,k=2", "graph:diag=4/0[,D=3]" or "flat:k=2,D=3".
ManifoldSpec parse_spec(const std::string& text) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    std::map<std::string, std::string> kv;
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            require(eq != std::string::npos, ErrorCode::invalid_argument, "spec entry without '=': " + item);
            kv[item.substr(0, eq)] = item.substr(eq + 1);
        }
    }
    auto num = [&](const std::string& key, double fallback) {
        const auto it = kv.find(key);
        return it == kv.end() ? fallback : std::stod(it->second);
    };
    if (kind == "sphere") {
        return ManifoldSpec::sphere(num("R", 1.0), static_cast<Index>(num("k", 2)));
    }
    if (kind == "flat") {
        const auto k = static_cast<Index>(num("k", 2));
        return ManifoldSpec::flat(k, static_cast<Index>(num("D", static_cast<double>(k + 1))));
    }
    if (kind == "graph") {
        require(kv.count("diag") == 1, ErrorCode::invalid_argument, "graph spec needs diag=a1/a2/...");
        std::vector<double> diag;
        std::stringstream ss(kv["diag"]);
        std::string v;
        while (std::getline(ss, v, '/')) {
            diag.push_back(std::stod(v));
        }
        const auto k = static_cast<Index>(diag.size());
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
        for (Index i = 0; i < k; ++i) {
            a(i, i) = diag[static_cast<std::size_t>(i)];
        }
        return ManifoldSpec::quadratic_graph({a}, k, static_cast<Index>(num("D", static_cast<double>(k + 1))));
    }
    throw Error(ErrorCode::invalid_argument, "unknown manifold kind '" + kind + "'");
}

struct CheckLog {
    CsvTable verdicts{{"check", "quantity", "value", "tolerance", "pass"}};
    CsvTable raw{{"check", "x_name", "x", "y_name", "y"}};
    bool all_pass = true;

    void verdict(const std::string& check, const std::string& quantity, double value, const std::string& tol,
                 bool pass) {
        verdicts.add_row({check, quantity, format_number(value), tol, pass ? "PASS" : "FAIL"});
        all_pass = all_pass && pass;
    }
    void point(const std::string& check, const std::string& xn, double x, const std::string& yn, double y) {
        raw.add_row({check, xn, format_number(x), yn, format_number(y)});
    }
};

Vector first_axis(Index k) {
    Vector u = Vector::Zero(k);
    u(0) = 1.0;
    return u;
}

void check_chord_arc(const ManifoldSpec& spec, CheckLog& log) {
    const double s = std::min(1.0, spec.reach());
    const std::vector<double> grid{0.05 * s, 0.1 * s, 0.2 * s, 0.3 * s};
    const auto rep = chord_arc_check(spec, first_axis(spec.intrinsic_dim()), grid);
    for (std::size_t i = 0; i < rep.r.size(); ++i) {
        log.point("chord-arc", "r", rep.r[i], "residual", rep.residual[i]);
    }
    // The expansion leaves an O(r^5) remainder; symmetric manifolds can do better.
    const bool ok = std::isnan(rep.residual_slope) || rep.residual_slope >= 4.5;
    log.verdict("chord-arc", "residual_slope", rep.residual_slope, ">=4.5", ok);
    log.verdict("chord-arc", "max_residual", rep.max_residual, "<=1e-3*r_max^4",
                rep.max_residual <= 1e-3 * std::pow(grid.back(), 4));
}

void check_bias(const ManifoldSpec& spec, Index samples, std::uint64_t seed, CheckLog& log) {
    DirectionalBiasOptions o;
    o.seed = seed;
    o.n_samples = samples;
    o.shell_t = 0.3 * std::min(1.0, spec.reach());
    const auto rep = directional_bias_estimate(spec, RadialLaw::uniform(std::min(1.0, 0.9 * spec.chart_radius())), o);
    for (std::size_t b = 0; b < rep.bin_counts.size(); ++b) {
        log.point("bias", "bin", static_cast<double>(b), "count", rep.bin_counts[b]);
    }
    const bool constant_curvature = spec.kind() == ManifoldSpec::Kind::sphere || spec.is_flat();
    if (constant_curvature) {
        log.verdict("bias", "chi2_p_uniform", rep.chi2_p_uniform, ">0.01", rep.chi2_p_uniform > 0.01);
    } else {
        const double dev = std::abs(rep.observed_log_ratio - rep.predicted_binned_log_ratio);
        log.verdict("bias", "observed_log_ratio", rep.observed_log_ratio,
                    format_number(rep.predicted_binned_log_ratio) + "+-3se", dev <= 3.0 * rep.standard_error);
    }
}

void check_moments(const ManifoldSpec& spec, CheckLog& log) {
    const Index k = spec.intrinsic_dim();
    const double kd = static_cast<double>(k);
    const double t = 1.0;
    struct Case {
        std::string name;
        RadialLaw law;
        double exact;
    };
    const double sigma = 0.2;
    std::vector<Case> cases{
        {"uniform", RadialLaw::uniform(t), kd * t * t / (kd + 2.0)},
        {"exponential", RadialLaw::truncated_exponential(sigma, t),
         sigma * sigma * kd * (kd + 1.0) * boost::math::gamma_p(kd + 2.0, t / sigma) /
             boost::math::gamma_p(kd, t / sigma)},
    };
    if (k > 1) {
        const double p = 0.5;
        cases.push_back({"power", RadialLaw::power(p, t), (kd - p) * t * t / (kd + 2.0 - p)});
    }
    for (const auto& c : cases) {
        const double got = moment_ratio(c.law, k);
        const double rel = std::abs(got - c.exact) / c.exact;
        log.point("moments", c.name, c.exact, "eta", got);
        log.verdict("moments", "rel_error_" + c.name, rel, "<=1e-8", rel <= 1e-8);
    }
}

void check_covariance(const ManifoldSpec& spec, Index samples, std::uint64_t seed, CheckLog& log) {
    const double s = std::min(1.0, spec.reach());
    const std::vector<double> grid{0.02 * s, 0.05 * s, 0.1 * s, 0.2 * s};
    const auto rep = covariance_scale_check(spec, RadialLaw::uniform(1.0), grid, samples, seed);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        log.point("covariance", "t", rep.t_scale[i], "tangent_trace", rep.tangent_trace[i]);
        log.point("covariance", "t", rep.t_scale[i], "normal_trace", rep.normal_trace[i]);
    }
    log.verdict("covariance", "tangent_slope", rep.tangent_slope, "2+-0.1", std::abs(rep.tangent_slope - 2.0) <= 0.1);
    log.verdict("covariance", "normal_slope", rep.normal_slope, "4+-0.2", std::abs(rep.normal_slope - 4.0) <= 0.2);
    double worst = 0.0;
    for (double r : rep.normal_bound_ratio) {
        worst = std::max(worst, r);
    }
    log.verdict("covariance", "normal_bound_ratio", worst, "<=1", worst <= 1.0);
}

void check_dominance(const ManifoldSpec& spec, std::uint64_t seed, CheckLog& log) {
    DominanceOptions o;
    o.seed = seed;
    const auto rep = tangent_dominance_experiment(spec, RadialLaw::uniform(1.0), o);
    for (std::size_t i = 0; i < rep.t_grid.size(); ++i) {
        log.point("dominance", "t", rep.t_grid[i], "normal_to_tangent", rep.ratio_norm_to_tan[i]);
    }
    log.verdict("dominance", "ratio_slope", rep.fitted_slope, "[0.85,1.15]",
                rep.fitted_slope >= 0.85 && rep.fitted_slope <= 1.15);
}

void check_attention(const ManifoldSpec& spec, Index samples, std::uint64_t seed, CheckLog& log) {
    const std::vector<double> grid{0.05, 0.1, 0.2, 0.4};
    const auto rep = bilinear_score_scaling(spec, RadialLaw::uniform(1.0), grid, derive_seed(seed, 1), samples, seed);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        log.point("attention", "t", rep.t_scale[i], "tangent", rep.tangent_term[i]);
        log.point("attention", "t", rep.t_scale[i], "cross", rep.cross_term[i]);
        log.point("attention", "t", rep.t_scale[i], "normal", rep.normal_term[i]);
    }
    log.verdict("attention", "tangent_slope", rep.tangent_slope, "2+-0.2", std::abs(rep.tangent_slope - 2.0) <= 0.2);
    log.verdict("attention", "cross_slope", rep.cross_slope, "3+-0.2", std::abs(rep.cross_slope - 3.0) <= 0.2);
    log.verdict("attention", "normal_slope", rep.normal_slope, "4+-0.2", std::abs(rep.normal_slope - 4.0) <= 0.2);
}

int run_manifold_verify(const Globals& g, const std::string& check, const std::string& spec_text, Index samples) {
    const ManifoldSpec spec = parse_spec(spec_text);
    std::cerr << "manifold " << spec.describe() << "\n";
    CheckLog log;
    const bool all = check == "all";
    if (all || check == "chord-arc") {
        check_chord_arc(spec, log);
    }
    if (all || check == "bias") {
        if (spec.intrinsic_dim() == 2) {
            check_bias(spec, samples, g.seed, log);
        } else if (!all) {
            throw Error(ErrorCode::unsupported, "bias check needs k = 2");
        }
    }
    if (all || check == "moments") {
        check_moments(spec, log);
    }
    if (all || check == "covariance") {
        check_covariance(spec, samples, g.seed, log);
    }
    if (all || check == "dominance") {
        check_dominance(spec, g.seed, log);
    }
    if (all || check == "attention") {
        check_attention(spec, samples, g.seed, log);
    }
    if (g.out_dir.empty()) {
        log.verdicts.write(std::cout);
        std::cout << "\n";
        log.raw.write(std::cout);
    } else {
        emit(g, "verify.csv", log.verdicts);
        emit(g, "verify_raw.csv", log.raw);
        log.verdicts.write(std::cout);
    }
    return log.all_pass ? 0 : 1;
}

// ---- manifest-driven pipelines -----------------------------------------------------------------

RunManifest load_with_phases(const std::string& path, bool from_steps, const PipelineConfig& c) {
    RunManifest m = load_manifest(path);
    return from_steps ? assign_phases(m, c.early_frac, c.late_frac) : m;
}

void report_skips(const std::vector<SkippedAnchor>& skipped) {
    for (const auto& s : skipped) {
        std::cerr << "skipped anchor " << s.token_id << ": " << s.reason << "\n";
    }
}

std::vector<Phase> phases_of(const std::string& phase) {
    if (phase == "both") {
        return {Phase::early, Phase::late};
    }
    return {parse_phase(phase)};
}

int run_grad_test(const Globals& g, const std::string& manifest, const std::string& layer, const std::string& phase,
                  PipelineConfig config, bool from_steps) {
    config.seed = g.seed;
    config.validate();
    const RunManifest m = load_with_phases(manifest, from_steps, config);
    std::vector<Table1Row> rows;
    for (Phase p : phases_of(phase)) {
        const auto result = run_grad_pipeline(m, layer, p, config);
        report_skips(result.skipped);
        rows.push_back(result.row);
    }
    emit(g, "table1.csv", table1_csv(rows));
    return 0;
}

std::vector<const CheckpointEntry*> ordered_checkpoints(const RunManifest& m) {
    std::vector<const CheckpointEntry*> out;
    for (const auto& c : m.checkpoints) {
        out.push_back(&c);
    }
    std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->step < b->step; });
    return out;
}

int run_iso(const Globals& g, const std::string& manifest, const std::string& tensor, const std::string& layer,
            double alpha) {
    CsvTable table = isotropy_metrics_table();
    if (!tensor.empty()) {
        append_isotropy_metrics(table, 0, layer, read_tensor(tensor), alpha, nullptr);
    } else {
        const RunManifest m = load_manifest(manifest);
        Matrix prev;
        bool have_prev = false;
        for (const auto* c : ordered_checkpoints(m)) {
            Matrix act = read_tensor(m.tensor(*c, act_role(layer)));
            append_isotropy_metrics(table, c->step, layer, act, alpha, have_prev ? &prev : nullptr);
            prev = std::move(act);
            have_prev = true;
        }
    }
    emit(g, "isotropy.csv", table);
    return 0;
}

int run_report(const Globals& g, const std::string& manifest, const std::string& layer, Index max_points) {
    const RunManifest m = load_manifest(manifest);
    GeometryPanelOptions o;
    o.seed = g.seed;
    o.max_points = max_points;
    std::vector<std::int64_t> steps;
    std::vector<GeometryRow> rows;
    Matrix prev;
    for (const auto* c : ordered_checkpoints(m)) {
        Matrix act = read_tensor(m.tensor(*c, act_role(layer)));
        rows.push_back(run_geometry_panel(act, steps.empty() ? nullptr : &prev, o));
        steps.push_back(c->step);
        prev = std::move(act);
    }
    emit(g, "geometry.csv", geometry_csv(steps, layer, rows));
    return 0;
}

int run_id(const Globals& g, const std::string& tensor, const std::string& method, Index k, Index repeats) {
    const PointCloud cloud = PointCloud::deduplicated(read_tensor(tensor));
    CsvTable table({"method", "estimate", "n_points", "params"});
    const std::string n = std::to_string(cloud.size());
    const bool all = method == "all";
    bool known = all;
    if (all || method == "twonn") {
        known = true;
        table.add_row({"twonn", format_number(twonn_id(cloud)), n, "mle"});
    }
    if (all || method == "gmst") {
        known = true;
        const auto r = gmst_id(cloud, default_gmst_sizes(cloud.size()), repeats, g.seed);
        table.add_row({"gmst", format_number(r.dimension), n,
                       "repeats=" + std::to_string(repeats) + ";slope=" + format_number(r.slope)});
    }
    if (all || method == "entropy") {
        known = true;
        const auto r = knn_graph_entropy(cloud, k);
        table.add_row({"knn_entropy", format_number(r.entropy), n,
                       "k=" + std::to_string(k) + ";m=" + format_number(r.intrinsic_dim)});
    }
    require(known, ErrorCode::invalid_argument, "unknown id method '" + method + "'");
    emit(g, "id.csv", table);
    return 0;
}

int run_seminmf(const Globals& g, const std::string& tensor, Index k, Index iters, double tol) {
    const Matrix x = read_tensor(tensor);
    SemiNmfOptions o;
    o.max_iters = iters;
    o.tol = tol;
    o.seed = g.seed;
    const auto dec = seminmf(x, k, o);
    const fs::path dir = g.out_dir.empty() ? fs::path(".") : fs::path(g.out_dir);
    fs::create_directories(dir);
    write_tensor(dir / "Z.agt", dec.z);
    write_tensor(dir / "H.agt", dec.h);
    CsvTable trace({"iteration", "objective"});
    for (std::size_t i = 0; i < dec.objective_trace.size(); ++i) {
        trace.add_row({std::to_string(i), format_number(dec.objective_trace[i])});
    }
    trace.write(dir / "seminmf_trace.csv");
    std::cout << "iterations " << dec.iterations << " converged " << (dec.converged ? "yes" : "no")
              << " objective " << format_number(dec.objective_trace.back()) << "\n";
    return 0;
}

int run_traj(const Globals& g, const std::string& manifest, TrajectoryOptions o) {
    o.seed = g.seed;
    const RunManifest m = load_manifest(manifest);
    const auto report = run_trajectory(m, o);
    report_skips(report.skipped);
    std::cerr << "frequency correlation " << format_number(report.frequency_correlation) << "\n";
    emit(g, "trajectory.csv", trajectory_csv(report, o.mc_baseline > 0));
    return 0;
}

int run_synth(const Globals& g, const std::string& mode) {
    require(!g.out_dir.empty(), ErrorCode::invalid_argument, "synth needs --out-dir");
    PlantedRunOptions o;
    if (mode == "anti") {
        o = PlantedRunOptions::anti(g.seed);
    } else {
        require(mode == "tangent", ErrorCode::invalid_argument, "mode must be tangent or anti");
        o.seed = g.seed;
    }
    write_planted_run(g.out_dir, o);
    std::cerr << "wrote " << (fs::path(g.out_dir) / "manifest.json").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tscope: tangent-space geometry of training runs"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Base seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)");
    app.add_option("--out-dir", g.out_dir, "Directory for output files (default: stdout)");

    std::string check = "all", spec_text = "sphere:R=1,k=2";
    Index samples = 100000;
    auto* verify = app.add_subcommand("manifold-verify", "Synthetic-manifold checks");
    verify->add_option("--check", check)
        ->check(CLI::IsMember({"chord-arc", "bias", "moments", "covariance", "dominance", "attention", "all"}))
        ->capture_default_str();
    verify->add_option("--spec", spec_text, "sphere:R=1,k=2 | graph:diag=4/0[,D=3] | flat:k=2,D=3")
        ->capture_default_str();
    verify->add_option("--samples", samples)->capture_default_str();

    std::string manifest, layer = "L0", phase = "both";
    PipelineConfig config;
    bool from_steps = false;
    auto* grad = app.add_subcommand("grad-test", "Energy and isotropy-removal tests");
    grad->add_option("manifest", manifest)->required();
    grad->add_option("--layer", layer)->capture_default_str();
    grad->add_option("--phase", phase)->check(CLI::IsMember({"early", "late", "both"}))->capture_default_str();
    grad->add_option("--s", config.s_null)->capture_default_str();
    grad->add_option("--alpha", config.alpha)->capture_default_str();
    grad->add_option("--ev-target", config.ev_target)->capture_default_str();
    grad->add_option("--min-rank", config.min_rank)->capture_default_str();
    grad->add_option("--max-rank", config.max_rank)->capture_default_str();
    grad->add_option("--n-bins", config.n_bins)->capture_default_str();
    grad->add_option("--anchors-per-bin", config.anchors_per_bin)->capture_default_str();
    grad->add_flag("--phases-from-steps", from_steps, "Relabel phases from the first/last step fractions");
    grad->add_option("--early-frac", config.early_frac)->capture_default_str();
    grad->add_option("--late-frac", config.late_frac)->capture_default_str();

    std::string tensor;
    double iso_alpha = 0.05;
    auto* iso = app.add_subcommand("iso", "Isotropy metrics per checkpoint");
    auto* iso_src = iso->add_option("--manifest", manifest);
    iso->add_option("--tensor", tensor)->excludes(iso_src);
    iso->add_option("--layer", layer)->capture_default_str();
    iso->add_option("--alpha", iso_alpha)->capture_default_str();

    std::string method = "all";
    Index id_k = 10, repeats = 3;
    auto* id = app.add_subcommand("id", "Intrinsic-dimension estimates for one tensor");
    id->alias("id-estimate");
    id->add_option("tensor", tensor)->required();
    id->add_option("--method", method)->check(CLI::IsMember({"twonn", "gmst", "entropy", "all"}))->capture_default_str();
    id->add_option("--k", id_k, "Neighbours for the entropy estimator")->capture_default_str();
    id->add_option("--repeats", repeats, "GMST repeats per subsample size")->capture_default_str();

    Index concepts = 600, iters = 500;
    double tol = 1e-6;
    auto* nmf = app.add_subcommand("seminmf", "Semi-NMF concept decomposition");
    nmf->add_option("tensor", tensor)->required();
    nmf->add_option("--k", concepts)->capture_default_str();
    nmf->add_option("--iters", iters)->capture_default_str();
    nmf->add_option("--tol", tol)->capture_default_str();

    TrajectoryOptions traj_opts;
    auto* traj = app.add_subcommand("traj", "Embedding trajectories");
    traj->add_option("manifest", manifest)->required();
    traj->add_option("--rank", traj_opts.rank)->capture_default_str();
    traj->add_option("--k-start-frac", traj_opts.k_start_frac)->capture_default_str();
    traj->add_option("--mc-baseline", traj_opts.mc_baseline, "Random subspaces for the Monte Carlo baseline")
        ->capture_default_str();

    Index max_points = 5000;
    auto* report = app.add_subcommand("report", "Geometry panel per checkpoint");
    report->add_option("manifest", manifest)->required();
    report->add_option("--layer", layer)->capture_default_str();
    report->add_option("--max-points", max_points)->capture_default_str();

    std::string mode = "tangent";
    auto* synth = app.add_subcommand("synth", "Write a planted synthetic run");
    synth->add_option("--mode", mode)->check(CLI::IsMember({"tangent", "anti"}))->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    set_worker_threads(g.threads);
    try {
        if (verify->parsed()) {
            return run_manifold_verify(g, check, spec_text, samples);
        }
        if (grad->parsed()) {
            return run_grad_test(g, manifest, layer, phase, config, from_steps);
        }
        if (iso->parsed()) {
            require(!manifest.empty() || !tensor.empty(), ErrorCode::invalid_argument, "iso needs --manifest or --tensor");
            return run_iso(g, manifest, tensor, layer, iso_alpha);
        }
        if (id->parsed()) {
            return run_id(g, tensor, method, id_k, repeats);
        }
        if (nmf->parsed()) {
            return run_seminmf(g, tensor, concepts, iters, tol);
        }
        if (traj->parsed()) {
            return run_traj(g, manifest, traj_opts);
        }
        if (report->parsed()) {
            return run_report(g, manifest, layer, max_points);
        }
        if (synth->parsed()) {
            return run_synth(g, mode);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
