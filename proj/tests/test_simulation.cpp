#include <catch2/catch_amalgamated.hpp>

#include "pampi/io.hpp"
#include "pampi/simulation.hpp"

using namespace pampi;

namespace {

struct Setup {
  EpisodeConfig episode;
  QuadParams quad;
  MppiConfig mppi;
  CostParams costs;
  CameraIntrinsics camera =
      CameraIntrinsics::with_hfov(160, 120, 115.0 * M_PI / 180.0, 5.0);

  Setup() {
    mppi.n_samples = 256;  // keep closed-loop tests fast
    // settled-goal capture needs the terminal hover incentive, and the
    // soft rate loop plus coarse map keep the small batch well-behaved
    quad.k_rate = 10.0;
    costs.c_safe = 15.0;
    costs.v_bound = 0.3;
    costs.omega_bound = 5.0;
    episode.map_resolution = 0.25;
    episode.map_margin = 0.275;
    episode.stuck_window = 8.0;
  }

  EpisodeResult run() const {
    return run_episode(episode, quad, mppi, costs, camera);
  }
};

}  // namespace

TEST_CASE("empty scene reaches the goal on every seed") {
  for (uint64_t seed : {1, 2, 3, 4, 5}) {
    Setup s;
    s.episode.scene.family = SceneFamily::Empty;
    s.episode.seed = seed;
    s.episode.scene.seed = seed;
    const EpisodeResult res = s.run();
    INFO("seed " << seed << " -> " << to_string(res.termination));
    CHECK(res.termination == Termination::Success);
    CHECK(res.time_to_goal < s.episode.timeout);
    CHECK(res.max_penetration == 0.0);
  }
}

TEST_CASE("control, render, and snapshot schedules hold their rates") {
  Setup s;
  s.episode.scene.family = SceneFamily::Empty;
  s.episode.timeout = 2.0;  // ends by timeout, far from the goal
  s.episode.goal_pos_tol = 1e-6;
  const EpisodeResult res = s.run();

  CHECK(res.control_ticks == 100);  // 2 s at 50 Hz exactly
  // one-sided schedules started after t = 0: rate*T - 1 <= n <= rate*T + 1
  CHECK(res.render_frames >= 58);
  CHECK(res.render_frames <= 61);
  CHECK(res.snapshots >= 19);
  CHECK(res.snapshots <= 21);
}

TEST_CASE("episode reruns are bitwise identical") {
  auto make = [] {
    Setup s;
    s.episode.scene.family = SceneFamily::CWall;
    s.episode.scene.size = 1.0;
    s.episode.scene.seed = 7;
    s.episode.seed = 7;
    s.episode.timeout = 4.0;
    return s;
  };
  const EpisodeResult a = make().run();
  const EpisodeResult b = make().run();
  CHECK(a.termination == b.termination);
  CHECK(a.time_to_goal == b.time_to_goal);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  CHECK(io::trajectory_jsonl(a) == io::trajectory_jsonl(b));
}

TEST_CASE("different seeds explore differently") {
  auto run_with_seed = [](uint64_t seed) {
    Setup s;
    s.episode.scene.family = SceneFamily::CWall;
    s.episode.scene.size = 1.0;
    s.episode.scene.seed = seed;
    s.episode.seed = seed;
    s.episode.timeout = 3.0;
    return io::trajectory_jsonl(s.run());
  };
  CHECK(run_with_seed(1) != run_with_seed(2));
}

TEST_CASE("yaw sweep observes strictly more than a single frame") {
  const Scene sc = build_scene({SceneFamily::CWall, 1.0, 1});
  const CameraIntrinsics cam =
      CameraIntrinsics::with_hfov(160, 120, M_PI / 2.0, 5.0);
  const Aabb bounds{sc.bounds.min + Vec3::Constant(0.25),
                    sc.bounds.max - Vec3::Constant(0.25)};

  VoxelMap single(bounds, 0.1);
  init_observation(InitObservation::None, sc, cam, single);
  VoxelMap swept(bounds, 0.1);
  init_observation(InitObservation::YawSweep, sc, cam, swept);

  const double f_single = detail::known_fraction(*single.snapshot());
  const double f_swept = detail::known_fraction(*swept.snapshot());
  CHECK(f_single > 0.0);
  CHECK(f_swept > f_single);
}

TEST_CASE("logged grid versions are monotone and snapshot-limited") {
  Setup s;
  s.episode.scene.family = SceneFamily::CWall;
  s.episode.scene.size = 1.0;
  s.episode.timeout = 3.0;
  s.episode.goal_pos_tol = 1e-6;
  const EpisodeResult res = s.run();

  REQUIRE(!res.trajectory.empty());
  uint64_t prev = res.trajectory.front().grid_version;
  size_t distinct = 1;
  for (const auto& step : res.trajectory) {
    CHECK(step.grid_version >= prev);
    if (step.grid_version != prev) ++distinct;
    prev = step.grid_version;
  }
  // the controller can only ever see the initial publication plus the
  // 10 Hz republications
  CHECK(distinct <= static_cast<size_t>(res.snapshots) + 1);
}

TEST_CASE("coverage fraction never decreases") {
  Setup s;
  s.episode.scene.family = SceneFamily::CWall;
  s.episode.scene.size = 1.0;
  s.episode.timeout = 3.0;
  const EpisodeResult res = s.run();
  REQUIRE(res.coverage.size() >= 2);
  for (size_t i = 1; i < res.coverage.size(); ++i) {
    CHECK(res.coverage[i].known_fraction >=
          res.coverage[i - 1].known_fraction);
    CHECK(res.coverage[i].known_fraction <= 1.0);
  }
}

TEST_CASE("termination labels are exhaustive and exclusive") {
  CHECK(to_string(Termination::Success) == "Success");
  CHECK(to_string(Termination::Stuck) == "Stuck");
  CHECK(to_string(Termination::Collision) == "Collision");
  Setup s;
  s.episode.scene.family = SceneFamily::Empty;
  s.episode.timeout = 1.0;
  s.episode.goal_pos_tol = 1e-6;
  const EpisodeResult res = s.run();
  // ran out of time well before the goal: labeled Stuck by timeout
  CHECK(res.termination == Termination::Stuck);
  CHECK(res.time_to_goal == 1.0);
}

TEST_CASE("batch aggregates cells deterministically") {
  Setup s;
  std::vector<BatchCell> cells{
      {Controller::PaMppi, SceneFamily::Empty, 1.0, 2}};
  BatchParams params{s.quad, s.mppi, s.costs, s.camera, s.episode};
  params.episode.record_trajectory = false;
  params.episode.timeout = 1.0;  // every episode times out: all Stuck
  params.episode.goal_pos_tol = 1e-6;

  auto sink = [](size_t, int, const EpisodeConfig&, const EpisodeResult&) {};
  const auto rows1 = run_batch(cells, params, 11, 1, sink);
  const auto rows2 = run_batch(cells, params, 11, 1, sink);

  REQUIRE(rows1.size() == 1);
  CHECK(rows1[0].repeats == 2);
  CHECK(rows1[0].success_pct + rows1[0].stuck_pct + rows1[0].collision_pct ==
        Catch::Approx(100.0));
  CHECK(rows1[0].stuck_pct == 100.0);
  CHECK(rows1[0].mean_time_to_goal == 0.0);  // no successful episodes
  CHECK(io::batch_csv(rows1) == io::batch_csv(rows2));
}

TEST_CASE("batch with no cells yields an empty table") {
  Setup s;
  BatchParams params{s.quad, s.mppi, s.costs, s.camera, s.episode};
  auto sink = [](size_t, int, const EpisodeConfig&, const EpisodeResult&) {};
  const auto rows = run_batch({}, params, 1, 1, sink);
  CHECK(rows.empty());
  const std::string csv = io::batch_csv(rows);
  CHECK(csv.find("controller,family,size") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);  // header only
}

TEST_CASE("batch seeds episodes distinctly") {
  Setup s;
  std::vector<BatchCell> cells{
      {Controller::PaMppi, SceneFamily::Empty, 1.0, 3}};
  BatchParams params{s.quad, s.mppi, s.costs, s.camera, s.episode};
  params.episode.record_trajectory = false;
  params.episode.timeout = 1.0;

  std::vector<uint64_t> seeds;
  const auto rows = run_batch(
      cells, params, 100, 1,
      [&](size_t, int, const EpisodeConfig& cfg, const EpisodeResult&) {
        seeds.push_back(cfg.seed);
        CHECK(cfg.scene.seed == cfg.seed);
      });
  REQUIRE(seeds.size() == 3);
  CHECK(seeds == std::vector<uint64_t>{100, 101, 102});
  (void)rows;
}
