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
#include "tscope/pipeline.hpp"

#include "tscope/intrinsic_dim.hpp"
#include "tscope/isotropy.hpp"
#include "tscope/parallel.hpp"
#include "tscope/rng.hpp"
#include "tscope/subspace.hpp"
#include "tscope/tensor_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_set>

namespace tscope {

namespace {

const double nan = std::numeric_limits<double>::quiet_NaN();

struct LayerData {
    Matrix act;
    Matrix grad;
    Matrix labels;
};

LayerData load_layer(const RunManifest& m, const CheckpointEntry& c, const std::string& layer) {
    LayerData d;
    d.act = read_tensor(m.tensor(c, act_role(layer)));
    d.grad = read_tensor(m.tensor(c, grad_role(layer)));
    d.labels = read_tensor(m.tensor(c, rows_role(layer)));
    require(d.act.rows() == d.grad.rows() && d.act.rows() == d.labels.rows(), ErrorCode::dimension_mismatch,
            "activation, gradient and label row counts differ at step " + std::to_string(c.step));
    require(d.labels.cols() == 2, ErrorCode::dimension_mismatch, "label tensor must be M x 2");
    return d;
}

std::vector<Index> select_rows(const Matrix& labels, std::int64_t token, const std::vector<std::int64_t>& contexts) {
    const std::unordered_set<std::int64_t> wanted(contexts.begin(), contexts.end());
    std::vector<Index> out;
    for (Index i = 0; i < labels.rows(); ++i) {
        if (static_cast<std::int64_t>(labels(i, 0)) == token &&
            wanted.count(static_cast<std::int64_t>(labels(i, 1))) > 0) {
            out.push_back(i);
        }
    }
    return out;
}

Matrix gather(const Matrix& src, const std::vector<Index>& idx) {
    Matrix out(static_cast<Index>(idx.size()), src.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.row(static_cast<Index>(i)) = src.row(idx[i]);
    }
    return out;
}

Spectrum covariance_spectrum(const Matrix& rows) {
    const ActivationCloud cloud = ActivationCloud::from_rows(rows);
    const PrincipalAxes axes = principal_axes(cloud.rows);
    return Spectrum(std::vector<double>(axes.eigenvalues.data(), axes.eigenvalues.data() + axes.eigenvalues.size()),
                    rows.cols());
}

double sim_pca(const Matrix& previous, const Matrix& current, Index topk) {
    require(previous.cols() == current.cols(), ErrorCode::dimension_mismatch, "checkpoint dimensions differ");
    const Index k = std::min({topk, current.cols() - 1, previous.rows() - 1, current.rows() - 1});
    require(k >= 1, ErrorCode::insufficient_samples, "cloud too small for eigenvector similarity");
    const OrthonormalBasis a = principal_basis(ActivationCloud::from_rows(previous), k);
    const OrthonormalBasis b = principal_basis(ActivationCloud::from_rows(current), k);
    return eigvec_similarity(a, b, k);
}

} // namespace

void PipelineConfig::validate() const {
    require(s_null >= 1, ErrorCode::invalid_argument, "s_null must be >= 1");
    require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::invalid_argument, "alpha must be in [0, 1]");
    require(ev_target > 0.0 && ev_target <= 1.0, ErrorCode::invalid_argument, "ev_target must be in (0, 1]");
    require(min_rank >= 1 && min_rank <= max_rank, ErrorCode::invalid_argument, "ranks must satisfy 1 <= min <= max");
    require(n_bins >= 1 && anchors_per_bin >= 1, ErrorCode::invalid_argument, "bins and anchors per bin must be >= 1");
    require(early_frac > 0.0 && early_frac <= 0.5 && late_frac > 0.0 && late_frac <= 0.5,
            ErrorCode::invalid_argument, "phase fractions must be in (0, 0.5]");
    require(early_checkpoints >= 1 && late_checkpoints >= 1, ErrorCode::invalid_argument,
            "checkpoint limits must be >= 1");
}

RunManifest assign_phases(const RunManifest& m, double early_frac, double late_frac) {
    require(!m.checkpoints.empty(), ErrorCode::manifest_invalid, "manifest has no checkpoints");
    require(early_frac > 0.0 && early_frac <= 0.5 && late_frac > 0.0 && late_frac <= 0.5,
            ErrorCode::invalid_argument, "phase fractions must be in (0, 0.5]");
    auto [lo_it, hi_it] = std::minmax_element(m.checkpoints.begin(), m.checkpoints.end(),
                                              [](const auto& a, const auto& b) { return a.step < b.step; });
    const double lo = static_cast<double>(lo_it->step);
    const double span = static_cast<double>(hi_it->step) - lo;
    RunManifest out = m;
    out.checkpoints.clear();
    for (const auto& c : m.checkpoints) {
        const double pos = span > 0.0 ? (static_cast<double>(c.step) - lo) / span : 0.0;
        CheckpointEntry e = c;
        if (pos <= early_frac) {
            e.phase = Phase::early;
        } else if (pos >= 1.0 - late_frac) {
            e.phase = Phase::late;
        } else {
            continue;
        }
        out.checkpoints.push_back(std::move(e));
    }
    return out;
}

std::vector<const CheckpointEntry*> select_phase_checkpoints(const RunManifest& m, Phase phase, Index limit) {
    require(limit >= 1, ErrorCode::invalid_argument, "checkpoint limit must be >= 1");
    std::vector<const CheckpointEntry*> all = m.in_phase(phase);
    std::sort(all.begin(), all.end(), [](const auto* a, const auto* b) { return a->step < b->step; });
    const Index n = static_cast<Index>(all.size());
    if (n <= limit) {
        return all;
    }
    std::vector<const CheckpointEntry*> out;
    for (Index i = 0; i < limit; ++i) {
        const Index j = limit == 1 ? 0
                                   : static_cast<Index>(std::llround(static_cast<double>(i) * static_cast<double>(n - 1) /
                                                                     static_cast<double>(limit - 1)));
        out.push_back(all[static_cast<std::size_t>(j)]);
    }
    return out;
}

std::vector<std::vector<const AnchorEntry*>> stratify_anchors(const RunManifest& m, Index n_bins, Index per_bin) {
    require(n_bins >= 1 && per_bin >= 1, ErrorCode::invalid_argument, "bins and anchors per bin must be >= 1");
    std::vector<std::vector<const AnchorEntry*>> bins(static_cast<std::size_t>(n_bins));
    if (m.anchors.empty()) {
        return bins;
    }
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& a : m.anchors) {
        require(a.frequency > 0.0, ErrorCode::nonpositive_frequency, "anchor frequency must be positive");
        lo = std::min(lo, std::log10(a.frequency));
        hi = std::max(hi, std::log10(a.frequency));
    }
    const double width = (hi - lo) / static_cast<double>(n_bins);
    for (const auto& a : m.anchors) {
        Index b = 0;
        if (width > 0.0) {
            b = std::min<Index>(n_bins - 1, static_cast<Index>((std::log10(a.frequency) - lo) / width));
        }
        auto& bin = bins[static_cast<std::size_t>(b)];
        if (static_cast<Index>(bin.size()) < per_bin) {
            bin.push_back(&a);
        }
    }
    return bins;
}

GradPipelineResult run_grad_pipeline(const RunManifest& m, const std::string& layer, Phase phase,
                                     const PipelineConfig& config) {
    config.validate();
    const auto early = select_phase_checkpoints(m, Phase::early, config.early_checkpoints);
    const auto evaluated =
        select_phase_checkpoints(m, phase, phase == Phase::early ? config.early_checkpoints : config.late_checkpoints);
    require(!early.empty(), ErrorCode::manifest_invalid, "no early checkpoints to fit the tangent basis");
    require(!evaluated.empty(), ErrorCode::manifest_invalid, std::string("no checkpoints in phase ") + to_string(phase));

    std::map<std::int64_t, LayerData> data;
    for (const auto* c : early) {
        data.emplace(c->step, load_layer(m, *c, layer));
    }
    for (const auto* c : evaluated) {
        if (!data.count(c->step)) {
            data.emplace(c->step, load_layer(m, *c, layer));
        }
    }

    std::vector<const AnchorEntry*> anchors;
    for (const auto& bin : stratify_anchors(m, config.n_bins, config.anchors_per_bin)) {
        anchors.insert(anchors.end(), bin.begin(), bin.end());
    }
    require(!anchors.empty(), ErrorCode::manifest_invalid, "manifest has no anchors");

    struct Outcome {
        std::optional<AnchorSummary> summary;
        Index rank = 0;
        std::string error;
    };
    std::vector<Outcome> outcomes(anchors.size());
    parallel_for(anchors.size(), [&](std::size_t ai) {
        const AnchorEntry& a = *anchors[ai];
        Outcome& out = outcomes[ai];
        try {
            require(!a.eval_context_ids.empty(), ErrorCode::invalid_argument, "anchor has no eval contexts");
            std::vector<Matrix> parts;
            Index total = 0;
            for (const auto* c : early) {
                const LayerData& d = data.at(c->step);
                const auto idx = select_rows(d.labels, a.token_id, a.fit_context_ids);
                parts.push_back(gather(d.act, idx));
                total += static_cast<Index>(idx.size());
            }
            require(total >= 2, ErrorCode::insufficient_samples, "fewer than two fit activations");
            Matrix pooled(total, parts.front().cols());
            Index at = 0;
            for (const auto& p : parts) {
                pooled.middleRows(at, p.rows()) = p;
                at += p.rows();
            }
            const ActivationCloud cloud = ActivationCloud::from_rows(pooled);
            const Index cap = std::min({config.max_rank, cloud.dim() - 1, cloud.size() - 1});
            const Index lo = std::min(config.min_rank, cap);
            const OrthonormalBasis qt = fit_pca_basis(cloud, config.ev_target, lo, cap);
            const OrthonormalBasis qn = deterministic_normal_comparator(cloud, qt, qt.rank());

            AnchorSummary s;
            s.token_id = a.token_id;
            s.frequency = a.frequency;
            const std::uint64_t anchor_seed = derive_seed(config.seed, static_cast<std::uint64_t>(a.token_id));
            for (const auto* c : evaluated) {
                const LayerData& d = data.at(c->step);
                const auto idx = select_rows(d.labels, a.token_id, a.eval_context_ids);
                if (idx.empty()) {
                    continue;
                }
                const GradientMatrix g = build_gradient_matrix(gather(d.grad, idx), gather(d.act, idx), cloud.mean);
                const EnergyTestResult e =
                    energy_test(g.b, qt, qn, config.s_null, derive_seed(anchor_seed, static_cast<std::uint64_t>(c->step)));
                const IsoRemovalResult r = iso_removal_test(g.b, qt, qn, config.alpha);
                s.add(c->step, e, r);
            }
            require(!s.steps.empty(), ErrorCode::insufficient_samples, "no eval rows in any checkpoint");
            s.finalize();
            out.summary = std::move(s);
            out.rank = qt.rank();
        } catch (const Error& e) {
            out.error = e.what();
        }
    });

    GradPipelineResult res;
    for (const auto* c : evaluated) {
        res.steps.push_back(c->step);
    }
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        if (outcomes[i].summary) {
            res.anchors.push_back(std::move(*outcomes[i].summary));
            res.tangent_ranks.push_back(outcomes[i].rank);
        } else {
            res.skipped.push_back({anchors[i]->token_id, outcomes[i].error});
        }
    }
    require(!res.anchors.empty(), ErrorCode::insufficient_samples, "every anchor was skipped");
    res.row = aggregate_anchors(layer, to_string(phase), res.anchors);
    return res;
}

GeometryRow run_geometry_panel(const Matrix& activations, const Matrix* previous, const GeometryPanelOptions& options) {
    require(activations.rows() >= 3, ErrorCode::insufficient_samples, "cloud too small for the geometry panel");
    require(options.max_points >= 3, ErrorCode::invalid_argument, "max_points must be >= 3");
    GeometryRow row;
    PointCloud cloud = PointCloud::deduplicated(activations);
    require(cloud.size() >= 3, ErrorCode::insufficient_samples, "fewer than three distinct points");
    if (cloud.size() > options.max_points) {
        Rng rng(options.seed);
        std::vector<Index> idx(static_cast<std::size_t>(cloud.size()));
        std::iota(idx.begin(), idx.end(), Index{0});
        for (Index i = 0; i < options.max_points; ++i) {
            const Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(cloud.size() - i)));
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
        idx.resize(static_cast<std::size_t>(options.max_points));
        std::sort(idx.begin(), idx.end());
        PointCloud sub(gather(cloud.points, idx));
        sub.distinct = true;
        cloud = std::move(sub);
    }
    row.id_2nn = twonn_id(cloud);
    row.id_graph = gmst_id(cloud, default_gmst_sizes(cloud.size()), options.gmst_repeats, options.seed).dimension;
    row.s_m = knn_graph_entropy(cloud, std::min<Index>(options.entropy_k, cloud.size() - 1)).entropy;
    const Spectrum s = covariance_spectrum(activations);
    row.pca70 = pca70(s);
    row.r_eff = effective_rank(s);
    row.sim_pca = previous ? sim_pca(*previous, activations, options.sim_topk) : nan;
    return row;
}

CsvTable geometry_csv(const std::vector<std::int64_t>& steps, const std::string& layer,
                      const std::vector<GeometryRow>& rows) {
    require(steps.size() == rows.size(), ErrorCode::dimension_mismatch, "one step per geometry row");
    CsvTable t({"step", "layer", "ID_2nn", "ID_Graph", "PCA70", "r_eff", "S_M", "Sim_PCA"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        t.add_row({std::to_string(steps[i]), layer, format_number(r.id_2nn), format_number(r.id_graph),
                   std::to_string(r.pca70), format_number(r.r_eff), format_number(r.s_m), format_number(r.sim_pca)});
    }
    return t;
}

CsvTable isotropy_metrics_table() { return CsvTable({"step", "layer", "metric_name", "value"}); }

void append_isotropy_metrics(CsvTable& table, std::int64_t step, const std::string& layer, const Matrix& rows,
                             double alpha, const Matrix* previous) {
    const Spectrum s = covariance_spectrum(rows);
    const IsoScoreConventions iso = isoscore_star_conventions(shrink_spectrum(s, alpha));
    const std::string st = std::to_string(step);
    table.add_row({st, layer, "isoscore_star", format_number(iso.ambient_d)});
    table.add_row({st, layer, "isoscore_star_support_d", format_number(iso.support_d)});
    table.add_row({st, layer, "effective_rank", format_number(effective_rank(s))});
    table.add_row({st, layer, "pca70", std::to_string(pca70(s))});
    if (previous) {
        table.add_row({st, layer, "sim_pca", format_number(sim_pca(*previous, rows, 10))});
    }
}

std::vector<TrajectorySeries> trajectory_series(const RunManifest& m, double k_start_frac) {
    std::vector<const CheckpointEntry*> ckpts;
    for (const auto& c : m.checkpoints) {
        ckpts.push_back(&c);
    }
    std::sort(ckpts.begin(), ckpts.end(), [](const auto* a, const auto* b) { return a->step < b->step; });
    require(!ckpts.empty(), ErrorCode::manifest_invalid, "manifest has no checkpoints");
    std::vector<Matrix> embeds;
    std::vector<std::map<std::int64_t, Index>> lookup;
    for (const auto* c : ckpts) {
        embeds.push_back(read_tensor(m.tensor(*c, embed_role)));
        std::map<std::int64_t, Index> ids;
        if (c->tensor_paths.count(embed_ids_role)) {
            const Matrix id = read_tensor(m.tensor(*c, embed_ids_role));
            require(id.rows() == embeds.back().rows(), ErrorCode::dimension_mismatch, "embed_ids length mismatch");
            for (Index i = 0; i < id.rows(); ++i) {
                ids.emplace(static_cast<std::int64_t>(id(i, 0)), i);
            }
        }
        lookup.push_back(std::move(ids));
        require(embeds.back().cols() == embeds.front().cols(), ErrorCode::dimension_mismatch,
                "embedding width changes across checkpoints");
    }
    std::vector<TrajectorySeries> out;
    const Index t = static_cast<Index>(ckpts.size());
    for (const auto& a : m.anchors) {
        TrajectorySeries s;
        s.token_id = a.token_id;
        s.frequency = a.frequency;
        s.rows.resize(t, embeds.front().cols());
        bool found = true;
        for (Index i = 0; i < t; ++i) {
            const auto& ids = lookup[static_cast<std::size_t>(i)];
            Index row = -1;
            if (!ids.empty()) {
                auto it = ids.find(a.token_id);
                row = it == ids.end() ? -1 : it->second;
            } else if (a.token_id >= 0 && a.token_id < embeds[static_cast<std::size_t>(i)].rows()) {
                row = static_cast<Index>(a.token_id);
            }
            if (row < 0) {
                found = false;
                break;
            }
            s.rows.row(i) = embeds[static_cast<std::size_t>(i)].row(row);
            s.steps.push_back(ckpts[static_cast<std::size_t>(i)]->step);
        }
        if (!found) {
            s.steps.clear();
            s.rows.resize(0, embeds.front().cols());
        }
        s.k_start_index = TrajectorySeries::default_k_start(std::max<Index>(t, 1), k_start_frac);
        out.push_back(std::move(s));
    }
    return out;
}

TrajectoryReport run_trajectory(const RunManifest& m, const TrajectoryOptions& options) {
    const std::vector<TrajectorySeries> series = trajectory_series(m, options.k_start_frac);
    std::vector<std::optional<TrajectoryRow>> rows(series.size());
    std::vector<std::string> errors(series.size());
    parallel_for(series.size(), [&](std::size_t i) {
        const TrajectorySeries& s = series[i];
        try {
            require(s.rows.rows() > 0, ErrorCode::missing_tensor, "token missing from an embedding tensor");
            TrajectoryRow r;
            r.token_id = s.token_id;
            r.frequency = s.frequency;
            r.stats = trajectory_stats(s);
            r.enrichment = update_enrichment(s, options.rank, options.mc_baseline,
                                             derive_seed(options.seed, static_cast<std::uint64_t>(s.token_id)));
            rows[i] = r;
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });
    TrajectoryReport rep;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (rows[i]) {
            rep.rows.push_back(*rows[i]);
        } else {
            rep.skipped.push_back({series[i].token_id, errors[i]});
        }
    }
    rep.frequency_correlation = nan;
    if (rep.rows.size() >= 3) {
        std::vector<double> d, f;
        for (const auto& r : rep.rows) {
            d.push_back(r.stats.mean_dist);
            f.push_back(r.frequency);
        }
        try {
            rep.frequency_correlation = frequency_correlation(d, f);
        } catch (const Error&) {
            rep.frequency_correlation = nan;
        }
    }
    return rep;
}

CsvTable trajectory_csv(const TrajectoryReport& report, bool with_mc) {
    std::vector<std::string> header{"token_id",          "freq",   "mean_dist", "min_dist", "max_dist",
                                    "tangent_enrichment", "normal_enrichment"};
    if (with_mc) {
        header.push_back("mc_baseline_ratio");
        header.push_back("mc_tangent_enrichment");
    }
    CsvTable t(header);
    for (const auto& r : report.rows) {
        std::vector<std::string> cells{std::to_string(r.token_id),
                                       format_number(r.frequency),
                                       format_number(r.stats.mean_dist),
                                       format_number(r.stats.min_dist),
                                       format_number(r.stats.max_dist),
                                       format_number(r.enrichment.tangent_enrichment),
                                       format_number(r.enrichment.normal_enrichment)};
        if (with_mc) {
            cells.push_back(format_number(r.enrichment.mc_baseline_ratio));
            cells.push_back(format_number(r.enrichment.mc_tangent_enrichment));
        }
        t.add_row(std::move(cells));
    }
    return t;
}

} // namespace tscope
