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
#include "tscope/synthetic.hpp"

#include "tscope/rng.hpp"
#include "tscope/subspace.hpp"
#include "tscope/tensor_io.hpp"

#include <cmath>

namespace tscope {

namespace fs = std::filesystem;

namespace {

// Centres the columns of draws and, when given, removes their component along the columns of
// `against`.
Matrix balanced_block(Matrix draws, const Matrix* against) {
    draws.rowwise() -= draws.colwise().mean();
    if (against) {
        const Eigen::MatrixXd a = *against;
        const Eigen::MatrixXd coef = a.colPivHouseholderQr().solve(Eigen::MatrixXd(draws));
        draws -= a * coef;
    }
    return draws;
}

} // namespace

Matrix uniform_plane_cloud(Index n, Index ambient_dim, Index plane_dim, std::uint64_t seed) {
    require(n >= 1 && plane_dim >= 1 && plane_dim <= ambient_dim, ErrorCode::invalid_argument,
            "need n >= 1 and 1 <= plane_dim <= ambient_dim");
    Rng rng(seed);
    Matrix coords(n, plane_dim);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < plane_dim; ++j) {
            coords(i, j) = rng.uniform();
        }
    }
    const OrthonormalBasis frame = sample_subspace(ambient_dim, plane_dim, derive_seed(seed, 1));
    return coords * frame.columns().transpose();
}

RunManifest write_planted_run(const fs::path& dir, const PlantedRunOptions& o) {
    require(o.n_anchors >= 1 && o.tangent_rank >= 1 && 2 * o.tangent_rank < o.d_in, ErrorCode::invalid_argument,
            "need 2 * tangent_rank < d_in");
    require(o.fit_contexts > o.tangent_rank + 1 && o.eval_contexts > o.tangent_rank + 1 && o.d_out >= 1 && o.embed_dim >= 1,
            ErrorCode::invalid_argument, "bad planted run sizes");
    fs::create_directories(dir);
    const Index r = o.tangent_rank;

    struct AnchorModel {
        Vector mu;
        Matrix u; // tangent block
        Matrix v; // normal block with extra spread
        Matrix m; // d_out x r gradient map
        Vector embed_base;
    };
    std::vector<AnchorModel> models;
    RunManifest man;
    man.model_id = o.mode == PlantedRunOptions::Mode::tangent ? "planted-tangent" : "planted-anti";
    man.hidden_dim = o.d_in;
    for (Index a = 0; a < o.n_anchors; ++a) {
        Rng rng(derive_seed(o.seed, static_cast<std::uint64_t>(1000 + a)));
        AnchorModel am;
        am.mu = rng.gaussian(o.d_in, 1).col(0);
        const OrthonormalBasis frame =
            sample_subspace(o.d_in, 2 * r, derive_seed(o.seed, static_cast<std::uint64_t>(2000 + a)));
        am.u = frame.columns().leftCols(r);
        am.v = frame.columns().rightCols(r);
        am.m = rng.gaussian(o.d_out, r);
        am.embed_base = rng.gaussian(o.embed_dim, 1).col(0);
        models.push_back(std::move(am));

        AnchorEntry e;
        e.token_id = 100 + a;
        e.token_text = "tok" + std::to_string(a);
        // Log-frequencies evenly spaced across four decades.
        e.frequency = std::pow(10.0, -2.0 - (static_cast<double>(a) + 0.5) * 4.0 / static_cast<double>(o.n_anchors));
        for (Index c = 0; c < o.fit_contexts; ++c) {
            e.fit_context_ids.push_back(1000 * a + c);
        }
        for (Index c = 0; c < o.eval_contexts; ++c) {
            e.eval_context_ids.push_back(1000 * a + 500 + c);
        }
        man.anchors.push_back(std::move(e));
    }

    std::vector<std::int64_t> steps;
    for (Index i = 0; i < o.early_checkpoints; ++i) {
        steps.push_back(500 * i);
    }
    for (Index i = 0; i < o.late_checkpoints; ++i) {
        steps.push_back(10000 - 500 * (o.late_checkpoints - 1 - i));
    }
    const Index per_anchor = o.fit_contexts + o.eval_contexts;
    const Index m_rows = per_anchor * o.n_anchors;
    for (std::size_t ci = 0; ci < steps.size(); ++ci) {
        const std::int64_t step = steps[ci];
        Rng rng(derive_seed(o.seed, static_cast<std::uint64_t>(50000 + ci)));
        Matrix act(m_rows, o.d_in), grad(m_rows, o.d_out), labels(m_rows, 2);
        Matrix embed(o.n_anchors, o.embed_dim), embed_ids(o.n_anchors, 1);
        for (Index a = 0; a < o.n_anchors; ++a) {
            const AnchorModel& am = models[static_cast<std::size_t>(a)];
            const AnchorEntry& e = man.anchors[static_cast<std::size_t>(a)];
            // Fit and eval blocks are drawn balanced: centred, with the normal-side draws orthogonal
            // to the tangent coordinates over the block, so the only tangent/normal coupling in
            // the gradients is the one the mode plants.
            for (const bool fit_block : {true, false}) {
                const Index n = fit_block ? o.fit_contexts : o.eval_contexts;
                const Index offset = a * per_anchor + (fit_block ? 0 : o.fit_contexts);
                const Matrix z = balanced_block(rng.gaussian(n, r), nullptr);
                const Matrix side = balanced_block(rng.gaussian(n, r + o.d_in), &z);
                const Matrix xc = o.tangent_scale * z * am.u.transpose() +
                                  o.normal_scale * side.leftCols(r) * am.v.transpose() + o.noise * side.rightCols(o.d_in);
                const Matrix coords =
                    o.mode == PlantedRunOptions::Mode::tangent ? Matrix(xc * am.u) : Matrix(xc * am.v);
                act.middleRows(offset, n) = xc.rowwise() + am.mu.transpose();
                grad.middleRows(offset, n) = coords * am.m.transpose() + o.grad_noise * rng.gaussian(n, o.d_out);
                for (Index c = 0; c < n; ++c) {
                    labels(offset + c, 0) = static_cast<double>(e.token_id);
                    labels(offset + c, 1) = static_cast<double>(
                        fit_block ? e.fit_context_ids[static_cast<std::size_t>(c)] : e.eval_context_ids[static_cast<std::size_t>(c)]);
                }
            }
            // Rare tokens wander further around their base embedding.
            const double spread = 0.05 * std::pow(e.frequency / 1e-2, -0.3);
            embed.row(a) = (am.embed_base + rng.gaussian(o.embed_dim, 1).col(0) * spread).transpose();
            embed_ids(a, 0) = static_cast<double>(e.token_id);
        }
        const std::string tag = "step" + std::to_string(step);
        CheckpointEntry ce;
        ce.step = step;
        ce.phase = static_cast<Index>(ci) < o.early_checkpoints ? Phase::early : Phase::late;
        const fs::path act_p = dir / (tag + "_act.agt"), grad_p = dir / (tag + "_grad.agt"),
                       rows_p = dir / (tag + "_rows.agt"), emb_p = dir / (tag + "_embed.agt"),
                       ids_p = dir / (tag + "_embed_ids.agt");
        write_tensor(act_p, act);
        write_tensor(grad_p, grad);
        write_tensor(rows_p, labels);
        write_tensor(emb_p, embed);
        write_tensor(ids_p, embed_ids);
        ce.tensor_paths[act_role(o.layer)] = act_p;
        ce.tensor_paths[grad_role(o.layer)] = grad_p;
        ce.tensor_paths[rows_role(o.layer)] = rows_p;
        ce.tensor_paths[embed_role] = emb_p;
        ce.tensor_paths[embed_ids_role] = ids_p;
        man.checkpoints.push_back(std::move(ce));
    }
    const fs::path mpath = dir / "manifest.json";
    save_manifest(mpath, man);
    return load_manifest(mpath);
}

TrajectorySeries isotropic_walk_series(Index t, Index d, double step, std::uint64_t seed) {
    require(t >= 2 && d >= 1 && step > 0.0, ErrorCode::invalid_argument, "bad walk parameters");
    Rng rng(seed);
    TrajectorySeries s;
    s.rows.resize(t, d);
    Vector x = Vector::Zero(d);
    for (Index i = 0; i < t; ++i) {
        s.rows.row(i) = x.transpose();
        s.steps.push_back(i);
        x += rng.gaussian(d, 1).col(0) * step;
    }
    return s;
}

TrajectorySeries drift_series(Index t, Index d, Index drift_rank, double radius, double jitter, std::uint64_t seed) {
    require(t >= 2 && drift_rank >= 1 && drift_rank < d && radius > 0.0 && jitter >= 0.0,
            ErrorCode::invalid_argument, "bad drift parameters");
    Rng rng(seed);
    const Matrix frame = sample_subspace(d, drift_rank, derive_seed(seed, 1)).columns();
    TrajectorySeries s;
    s.rows.resize(t, d);
    const double keep = 0.9;
    Vector c = Vector::Zero(drift_rank);
    for (Index i = 0; i < t; ++i) {
        c = keep * c + std::sqrt(1.0 - keep * keep) * radius * rng.gaussian(drift_rank, 1).col(0);
        s.rows.row(i) = (frame * c + rng.gaussian(d, 1).col(0) * jitter).transpose();
        s.steps.push_back(i);
    }
    return s;
}

std::vector<TrajectorySeries> frequency_law_series(const std::vector<double>& freqs, Index t, Index d,
                                                   double exponent, double log_noise, std::uint64_t seed) {
    require(t >= 2 && d >= 1, ErrorCode::invalid_argument, "bad series shape");
    std::vector<TrajectorySeries> out;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        require(freqs[i] > 0.0, ErrorCode::nonpositive_frequency, "frequencies must be positive");
        Rng rng(derive_seed(seed, i));
        const double sigma = std::pow(freqs[i], -exponent) * std::exp(log_noise * rng.normal());
        TrajectorySeries s;
        s.token_id = static_cast<std::int64_t>(i);
        s.frequency = freqs[i];
        s.rows = rng.gaussian(t, d) * sigma;
        for (Index k = 0; k < t; ++k) {
            s.steps.push_back(k);
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace tscope
