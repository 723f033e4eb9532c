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
#include "test_util.hpp"
#include "tscope/parallel.hpp"
#include "tscope/pipeline.hpp"
#include "tscope/rng.hpp"
#include "tscope/synthetic.hpp"
#include "tscope/tensor_io.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>

using namespace tscope;
using test::error_code_of;
using test::TempDir;

namespace {

PlantedRunOptions small_run() {
    PlantedRunOptions o;
    o.n_anchors = 8;
    o.early_checkpoints = 3;
    o.late_checkpoints = 2;
    o.seed = 4;
    return o;
}

CheckpointEntry at_step(std::int64_t step) {
    CheckpointEntry c;
    c.step = step;
    return c;
}

} // namespace

TEST_CASE("config validation") {
    PipelineConfig c;
    c.validate();
    c.early_frac = 0.6;
    CHECK(error_code_of([&] { c.validate(); }) == ErrorCode::invalid_argument);
    c = {};
    c.min_rank = 13;
    CHECK(error_code_of([&] { c.validate(); }) == ErrorCode::invalid_argument);
}

TEST_CASE("phase assignment and subsampling") {
    RunManifest m;
    for (int i = 0; i <= 20; ++i) {
        m.checkpoints.push_back(at_step(1000 * i));
    }
    const RunManifest p = assign_phases(m, 0.3, 0.3);
    CHECK(p.in_phase(Phase::early).size() == 7);
    CHECK(p.in_phase(Phase::late).size() == 7);
    const auto early = select_phase_checkpoints(p, Phase::early, 6);
    REQUIRE(early.size() == 6);
    CHECK(early.front()->step == 0);
    CHECK(early.back()->step == 6000);
    const auto late = select_phase_checkpoints(p, Phase::late, 4);
    REQUIRE(late.size() == 4);
    CHECK(late.front()->step == 14000);
    CHECK(late.back()->step == 20000);
}

TEST_CASE("anchor stratification") {
    RunManifest m;
    for (int i = 0; i < 40; ++i) {
        AnchorEntry a;
        a.token_id = i;
        a.frequency = std::pow(10.0, -1.0 - 4.0 * i / 39.0);
        m.anchors.push_back(a);
    }
    const auto bins = stratify_anchors(m, 4, 6);
    REQUIRE(bins.size() == 4);
    for (const auto& b : bins) {
        CHECK(b.size() == 6);
    }
    CHECK(bins[3].front()->token_id == 0);
    CHECK(bins[0].front()->token_id >= 30);
}

TEST_CASE("planted and anti-planted runs") {
    TempDir dir("planted");
    const RunManifest m = write_planted_run(dir / "tangent", small_run());
    PipelineConfig c;
    c.seed = 1;
    const auto r = run_grad_pipeline(m, "L0", Phase::early, c);
    CHECK(r.skipped.empty());
    CHECK(r.anchors.size() == 8);
    CHECK(r.row.p_e_null == 1.0 / 21.0);
    for (const auto& a : r.anchors) {
        for (const auto& e : a.energy) {
            CHECK(e.p_energy == 1.0 / 21.0);
        }
    }
    CHECK(r.row.d_iso_t_pct > 0.0);
    CHECK(r.row.d_iso_t_pct > r.row.d_iso_n_pct);

    PlantedRunOptions anti = PlantedRunOptions::anti(4);
    anti.n_anchors = 8;
    anti.early_checkpoints = 3;
    anti.late_checkpoints = 2;
    const RunManifest am = write_planted_run(dir / "anti", anti);
    CHECK(run_grad_pipeline(am, "L0", Phase::late, c).row.e_r < 1.0);
}

TEST_CASE("anchor without eval contexts is skipped") {
    TempDir dir("skip");
    RunManifest m = write_planted_run(dir / "run", small_run());
    m.anchors[2].eval_context_ids.clear();
    save_manifest(dir / "run" / "manifest.json", m);
    const RunManifest back = load_manifest(dir / "run" / "manifest.json");
    const auto r = run_grad_pipeline(back, "L0", Phase::early, PipelineConfig{});
    REQUIRE(r.skipped.size() == 1);
    CHECK(r.skipped[0].token_id == m.anchors[2].token_id);
    CHECK(r.anchors.size() == 7);
    CHECK(error_code_of([&] { run_grad_pipeline(back, "L9", Phase::early, PipelineConfig{}); }) ==
          ErrorCode::missing_tensor);
}

TEST_CASE("outputs do not depend on the worker count") {
    TempDir dir("threads");
    const RunManifest m = write_planted_run(dir / "run", small_run());
    PipelineConfig c;
    c.seed = 9;
    set_worker_threads(1);
    const std::string one = table1_csv({run_grad_pipeline(m, "L0", Phase::late, c).row}).str();
    const std::string traj_one = trajectory_csv(run_trajectory(m, {}), false).str();
    set_worker_threads(3);
    const std::string three = table1_csv({run_grad_pipeline(m, "L0", Phase::late, c).row}).str();
    const std::string traj_three = trajectory_csv(run_trajectory(m, {}), false).str();
    set_worker_threads(0);
    CHECK(one == three);
    CHECK(traj_one == traj_three);
}

TEST_CASE("parallel_for propagates errors") {
    std::atomic<int> seen{0};
    parallel_for(100, [&](std::size_t) { ++seen; });
    CHECK(seen == 100);
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                        if (i == 7) {
                            throw Error(ErrorCode::degenerate, "boom");
                        }
                    }),
                    Error);
}

TEST_CASE("geometry panel") {
    GeometryPanelOptions o;
    const Matrix plane = uniform_plane_cloud(2000, 10, 2, 3);
    const GeometryRow g = run_geometry_panel(plane, nullptr, o);
    CHECK(g.id_2nn == doctest::Approx(2.0).epsilon(0.1));
    CHECK(g.pca70 == 2);
    CHECK(std::isnan(g.sim_pca));

    const Matrix iso = Rng(4).gaussian(3000, 100);
    const GeometryRow gi = run_geometry_panel(iso, &iso, o);
    CHECK(gi.r_eff >= 90.0);
    CHECK(gi.sim_pca == doctest::Approx(1.0).epsilon(1e-12));

    const std::string csv = geometry_csv({0}, "L0", {g}).str();
    CHECK(csv.rfind("step,layer,ID_2nn,ID_Graph,PCA70,r_eff,S_M,Sim_PCA\n", 0) == 0);
    CHECK(csv.find(",na\n") != std::string::npos);

    CsvTable metrics = isotropy_metrics_table();
    append_isotropy_metrics(metrics, 5, "L0", plane, 0.05, nullptr);
    CHECK(metrics.rows().size() >= 4);
    for (const auto& row : metrics.rows()) {
        CHECK(row[0] == "5");
    }
}

TEST_CASE("trajectory report from a manifest") {
    TempDir dir("traj");
    const RunManifest m = write_planted_run(dir / "run", small_run());
    TrajectoryOptions o;
    o.rank = 2; // five checkpoints leave four post-warmup updates
    o.mc_baseline = 2000;
    const auto rep = run_trajectory(m, o);
    CHECK(rep.rows.size() == 8);
    CHECK(rep.skipped.empty());
    CHECK(rep.frequency_correlation < 0.0);
    for (const auto& r : rep.rows) {
        CHECK(r.enrichment.mc_baseline_ratio == doctest::Approx(1.0).epsilon(0.05));
    }
    const std::string csv = trajectory_csv(rep, false).str();
    CHECK(csv.rfind("token_id,freq,mean_dist,min_dist,max_dist,tangent_enrichment,normal_enrichment\n", 0) == 0);
}
