#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pampi/mppi.hpp"

namespace pampi {

enum class Controller { PaMppi, TrackingMppi };

inline Controller controller_from_string(const std::string& s) {
  if (s == "pa-mppi") return Controller::PaMppi;
  if (s == "tracking-mppi") return Controller::TrackingMppi;
  throw std::invalid_argument("unknown controller: " + s);
}

inline std::string to_string(Controller c) {
  return c == Controller::PaMppi ? "pa-mppi" : "tracking-mppi";
}

enum class Termination { Success, Stuck, Collision };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::Success: return "Success";
    case Termination::Stuck: return "Stuck";
    case Termination::Collision: return "Collision";
  }
  return "?";
}

enum class InitObservation { None, YawSweep };

struct EpisodeConfig {
  SceneSpec scene;
  Controller controller{Controller::PaMppi};
  double timeout{30.0};
  double goal_pos_tol{0.2};
  double goal_yaw_tol{0.26};
  double goal_vel_tol{0.1};
  double stuck_window{5.0};
  double stuck_displacement{0.1};
  InitObservation init_observation{InitObservation::YawSweep};
  uint64_t seed{0};
  double map_resolution{0.1};
  // The map covers the arena shrunk by this much on every side. Rollout
  // positions outside the grid read as unknown, so the margin keeps planned
  // knots away from the arena shell, which the depth camera cannot observe.
  double map_margin{0.25};
  // Optional explicit map box. When set it replaces the margin-shrunk
  // arena, letting a scene-specific config align voxel boundaries with
  // known obstacle faces so occupied voxels overhang the geometry.
  std::optional<Aabb> map_bounds;
  double control_rate{50.0};
  double render_rate{30.0};
  double snapshot_rate{10.0};
  double reference_duration{4.0};
  bool record_trajectory{true};
};

struct TrajectoryStep {
  double t;
  QuadState state;
  ControlCommand command;
  StageCostBreakdown costs;
  double l_min;
  double effective_samples;
  uint64_t grid_version;
};

struct CoverageSample {
  double t;
  double known_fraction;  // voxels not unknown / total
};

struct EpisodeResult {
  Termination termination{Termination::Stuck};
  double time_to_goal{0.0};
  double max_penetration{0.0};
  bool starved{false};
  int control_ticks{0};
  int render_frames{0};   // excludes the pre-episode init frames
  int snapshots{0};       // publications after the initial one
  std::vector<TrajectoryStep> trajectory;
  std::vector<CoverageSample> coverage;
  GridSnapshot final_grid;
  Scene scene;
};

namespace detail {

inline QuadState start_state(const Scene& sc) {
  QuadState s;
  s.p = sc.start_pos;
  s.q = Quat(Eigen::AngleAxisd(sc.start_yaw, Vec3::UnitZ()));
  return s;
}

inline double known_fraction(const OccupancyGrid& g) {
  size_t known = 0;
  for (int8_t v : g.values) known += (v != -1);
  return static_cast<double>(known) / static_cast<double>(g.values.size());
}

}  // namespace detail

/// Seeds the map before handing control to the optimizer. Yaw-sweep
/// rotates the camera -90..+90 deg about the start pose, inserting frames
/// at the render rate over a 2 s pre-roll; None inserts one forward frame.
inline void init_observation(InitObservation mode, const Scene& sc,
                             const CameraIntrinsics& cam, VoxelMap& map) {
  const Vec3 p = sc.start_pos;
  auto insert_frame = [&](double yaw) {
    const Quat q(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
    const DepthImage img = render_depth(sc, p, q, cam);
    const PointCloud pc = depth_to_pointcloud(img, p, q);
    map.insert_pointcloud(p, pc.returns, pc.free_endpoints);
  };
  if (mode == InitObservation::None) {
    insert_frame(sc.start_yaw);
    return;
  }
  const int frames = 61;  // 2 s of frames at 30 Hz
  for (int i = 0; i < frames; ++i) {
    const double a = static_cast<double>(i) / (frames - 1);
    insert_frame(sc.start_yaw - M_PI_2 + a * M_PI);
  }
}

/// Closed-loop episode on a deterministic virtual-time schedule: control
/// every tick, depth frames and grid snapshots on their own slower
/// schedules. The controller only ever sees published snapshots.
inline EpisodeResult run_episode(const EpisodeConfig& cfg,
                                 const QuadParams& qp, MppiConfig mppi_cfg,
                                 const CostParams& cost_prm,
                                 const CameraIntrinsics& cam) {
  mppi_cfg.validate();
  qp.validate();

  EpisodeResult res;
  const Scene sc = build_scene(cfg.scene);
  res.scene = sc;

  const Aabb map_bounds =
      cfg.map_bounds ? *cfg.map_bounds
                     : Aabb{sc.bounds.min + Vec3::Constant(cfg.map_margin),
                            sc.bounds.max - Vec3::Constant(cfg.map_margin)};
  VoxelMap map(map_bounds, cfg.map_resolution);
  init_observation(cfg.init_observation, sc, cam, map);
  GridSnapshot grid = map.snapshot();
  res.coverage.push_back({0.0, detail::known_fraction(*grid)});

  QuadState plant = detail::start_state(sc);
  ControlSequence nominal = hover_sequence(qp, mppi_cfg.horizon);
  ControlCommand u_last = hover_command(qp);

  const GoalPose goal{sc.goal_pos, sc.goal_yaw};
  ReferenceTrajectory ref(sc.start_pos, sc.goal_pos, sc.goal_yaw,
                          cfg.reference_duration);

  const double dt = 1.0 / cfg.control_rate;
  const int max_ticks = static_cast<int>(std::ceil(cfg.timeout / dt));
  double next_render = 1.0 / cfg.render_rate;  // t=0 frame came from init
  double next_snapshot = 1.0 / cfg.snapshot_rate;

  // position ring buffer for stuck detection
  const int window_ticks = std::max(1, static_cast<int>(cfg.stuck_window / dt));
  std::vector<Vec3> history;
  history.reserve(max_ticks + 1);
  history.push_back(plant.p);

  res.termination = Termination::Stuck;
  res.time_to_goal = cfg.timeout;

  for (int k = 0; k < max_ticks; ++k) {
    const double t = k * dt;

    if (t >= next_render - 1e-9) {
      const DepthImage img = render_depth(sc, plant.p, plant.q, cam);
      const PointCloud pc = depth_to_pointcloud(img, plant.p, plant.q);
      map.insert_pointcloud(plant.p, pc.returns, pc.free_endpoints);
      next_render += 1.0 / cfg.render_rate;
      ++res.render_frames;
    }
    if (t >= next_snapshot - 1e-9) {
      grid = map.snapshot();
      res.coverage.push_back({t, detail::known_fraction(*grid)});
      next_snapshot += 1.0 / cfg.snapshot_rate;
      ++res.snapshots;
    }
    ++res.control_ticks;

    RolloutCostModel cm;
    cm.grid = grid.get();
    cm.goal = goal;
    cm.prm = cost_prm;
    cm.dt_pred = mppi_cfg.dt_pred;
    if (cfg.controller == Controller::TrackingMppi) {
      cm.reference = &ref;
      cm.rollout_start_time = t;
    }

    ControlStepResult step_res;
    try {
      step_res = control_step(plant, nominal, u_last, cm, qp, mppi_cfg,
                              detail::splitmix64(cfg.seed * 0x10001ULL + k));
    } catch (const OptimizerStarvation&) {
      res.starved = true;
      res.termination = Termination::Stuck;
      res.time_to_goal = t;
      return res;
    }
    nominal = step_res.next_nominal;

    if (cfg.record_trajectory) {
      res.trajectory.push_back({t, plant, step_res.command,
                                step_res.diag.executed_terms,
                                step_res.diag.l_min,
                                step_res.diag.effective_samples,
                                grid->version});
    }

    plant = step(plant, step_res.command, dt, qp);
    u_last = step_res.command;
    history.push_back(plant.p);
    const double t_next = (k + 1) * dt;

    const CollisionResult col = true_collision(sc, plant.p, qp.collision_radius);
    res.max_penetration = std::max(res.max_penetration, col.penetration);
    if (col.collided) {
      // collision takes precedence over success on the same tick
      res.termination = Termination::Collision;
      res.time_to_goal = t_next;
      break;
    }

    const double dpsi = wrap_angle_diff(plant.yaw(), sc.goal_yaw);
    if ((plant.p - sc.goal_pos).norm() < cfg.goal_pos_tol &&
        std::abs(dpsi) < cfg.goal_yaw_tol &&
        plant.v.norm() < cfg.goal_vel_tol) {
      res.termination = Termination::Success;
      res.time_to_goal = t_next;
      break;
    }

    if (static_cast<int>(history.size()) > window_ticks) {
      // stuck = the whole window fits in a box smaller than the
      // displacement threshold; comparing only the window endpoints would
      // misfire on loops that happen to revisit an old position
      Vec3 lo = plant.p;
      Vec3 hi = plant.p;
      for (size_t i = history.size() - 1 - window_ticks; i < history.size();
           ++i) {
        lo = lo.cwiseMin(history[i]);
        hi = hi.cwiseMax(history[i]);
      }
      if ((hi - lo).norm() < cfg.stuck_displacement) {
        res.termination = Termination::Stuck;
        res.time_to_goal = t_next;
        break;
      }
    }
  }

  res.final_grid = map.snapshot();
  return res;
}

struct BatchCell {
  Controller controller{Controller::PaMppi};
  SceneFamily family{SceneFamily::CWall};
  double size{1.0};
  int repeats{5};
};

struct SummaryRow {
  Controller controller;
  SceneFamily family;
  double size;
  int repeats;
  double success_pct{0.0};
  double stuck_pct{0.0};
  double collision_pct{0.0};
  double mean_time_to_goal{0.0};  // over successful episodes
  double mean_penetration{0.0};
};

struct BatchParams {
  QuadParams quad;
  MppiConfig mppi;
  CostParams costs;
  CameraIntrinsics camera;
  EpisodeConfig episode;  // template; scene/controller/seed set per cell
};

/// Runs every cell for its repeat count with distinct seeds and aggregates
/// the termination statistics. Episodes share nothing and may run on
/// several workers; results are stored by index so the summary is
/// deterministic for a fixed seed list.
template <typename EpisodeSink>
inline std::vector<SummaryRow> run_batch(const std::vector<BatchCell>& cells,
                                         const BatchParams& params,
                                         uint64_t base_seed, int jobs,
                                         EpisodeSink&& sink) {
  struct Job {
    size_t cell;
    int repeat;
    EpisodeConfig cfg;
  };
  std::vector<Job> queue;
  uint64_t seed = base_seed;
  for (size_t c = 0; c < cells.size(); ++c) {
    for (int r = 0; r < cells[c].repeats; ++r) {
      EpisodeConfig e = params.episode;
      e.controller = cells[c].controller;
      e.scene.family = cells[c].family;
      e.scene.size = cells[c].size;
      e.scene.seed = seed;  // also selects the hole location
      e.seed = seed;
      ++seed;
      queue.push_back({c, r, e});
    }
  }

  std::vector<EpisodeResult> results(queue.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= queue.size()) return;
      try {
        results[i] = run_episode(queue[i].cfg, params.quad, params.mppi,
                                 params.costs, params.camera);
      } catch (const std::exception&) {
        results[i].termination = Termination::Stuck;
        results[i].starved = true;
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<SummaryRow> rows(cells.size());
  std::vector<int> n_success(cells.size(), 0);
  for (size_t c = 0; c < cells.size(); ++c) {
    rows[c] = {cells[c].controller, cells[c].family, cells[c].size,
               cells[c].repeats};
  }
  for (size_t i = 0; i < queue.size(); ++i) {
    SummaryRow& row = rows[queue[i].cell];
    const EpisodeResult& er = results[i];
    const double frac = 100.0 / row.repeats;
    switch (er.termination) {
      case Termination::Success:
        row.success_pct += frac;
        row.mean_time_to_goal += er.time_to_goal;
        ++n_success[queue[i].cell];
        break;
      case Termination::Stuck: row.stuck_pct += frac; break;
      case Termination::Collision: row.collision_pct += frac; break;
    }
    row.mean_penetration += er.max_penetration / row.repeats;
    sink(queue[i].cell, queue[i].repeat, queue[i].cfg, er);
  }
  for (size_t c = 0; c < cells.size(); ++c) {
    if (n_success[c] > 0) rows[c].mean_time_to_goal /= n_success[c];
  }
  return rows;
}

}  // namespace pampi
