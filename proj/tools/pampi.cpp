// Command-line front end: single episodes, batch sweeps, SVG plots.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "pampi/config.hpp"
#include "pampi/io.hpp"

namespace fs = std::filesystem;
using namespace pampi;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  int64_t seed = -1;
  int jobs = 1;
};

fs::path resolve_out_dir(const CommonOpts& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv("PAMPI_OUT")) return env;
  return "out";
}

std::pair<RunConfig, json> load(const CommonOpts& o) {
  json user = json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw std::runtime_error("cannot open config: " + o.config_path);
    user = json::parse(in);
  }
  for (const auto& kv : o.overrides) apply_override(user, kv);
  if (o.seed >= 0) user["episode"]["seed"] = o.seed;
  return load_config_json(user);
}

int cmd_run(const CommonOpts& opts) {
  auto [cfg, effective] = load(opts);
  cfg.mppi.jobs = std::max(cfg.mppi.jobs, opts.jobs);
  const fs::path out = resolve_out_dir(opts);
  fs::create_directories(out);

  EpisodeConfig ep = cfg.episode;
  ep.scene.seed = ep.scene.seed ? ep.scene.seed : ep.seed;
  const EpisodeResult res =
      run_episode(ep, cfg.quad, cfg.mppi, cfg.costs, cfg.camera.intrinsics());

  io::write_atomic(out / "trajectory.jsonl", io::trajectory_jsonl(res));
  io::write_atomic(out / "grid.bin", io::grid_binary(*res.final_grid));
  io::write_atomic(out / "scene.json", io::scene_json(res.scene).dump(2) + "\n");
  io::write_atomic(out / "summary.json",
                   io::summary_json(ep, res).dump(2) + "\n");
  io::write_atomic(out / "effective_config.json", effective.dump(2) + "\n");

  std::cout << to_string(res.termination)
            << " time_to_goal=" << res.time_to_goal << "s"
            << " max_penetration=" << res.max_penetration << "m\n";
  switch (res.termination) {
    case Termination::Success: return 0;
    case Termination::Stuck: return 2;
    case Termination::Collision: return 3;
  }
  return 1;
}

int cmd_batch(const CommonOpts& opts) {
  auto [cfg, effective] = load(opts);
  if (cfg.batch.cells.empty()) {
    std::cerr << "error: config has no batch.cells; add a batch block, e.g. "
                 "{\"batch\":{\"cells\":[{\"controller\":\"pa-mppi\","
                 "\"family\":\"cwall\",\"sizes\":[0.5,1.0]}]}}\n";
    return 1;
  }
  const fs::path out = resolve_out_dir(opts);
  fs::create_directories(out);

  std::vector<BatchCell> cells;
  for (const auto& bc : cfg.batch.cells) {
    for (double size : bc.sizes) {
      cells.push_back({controller_from_string(bc.controller),
                       scene_family_from_string(bc.family), size,
                       cfg.batch.repeats});
    }
  }

  BatchParams params{cfg.quad, cfg.mppi, cfg.costs, cfg.camera.intrinsics(),
                     cfg.episode};
  const auto rows = run_batch(
      cells, params, cfg.batch.base_seed, opts.jobs,
      [&](size_t cell, int repeat, const EpisodeConfig& ep,
          const EpisodeResult& res) {
        std::ostringstream name;
        name << to_string(ep.controller) << "_" << to_string(ep.scene.family)
             << "_" << ep.scene.size << "_r" << repeat;
        io::write_atomic(out / (name.str() + ".summary.json"),
                         io::summary_json(ep, res).dump(2) + "\n");
        if (ep.record_trajectory) {
          io::write_atomic(out / (name.str() + ".jsonl"),
                           io::trajectory_jsonl(res));
        }
        (void)cell;
      });

  io::write_atomic(out / "summary.csv", io::batch_csv(rows));
  io::write_atomic(out / "effective_config.json", effective.dump(2) + "\n");
  std::cout << io::batch_table(rows);
  return 0;
}

int cmd_plot(const std::string& traj_path, const std::string& grid_path,
             const std::string& out_svg, const std::string& summary_path,
             double z_slice) {
  std::ifstream gf(grid_path, std::ios::binary);
  if (!gf) {
    std::cerr << "error: cannot open grid file " << grid_path << "\n";
    return 1;
  }
  std::stringstream gbuf;
  gbuf << gf.rdbuf();
  const OccupancyGrid grid = io::grid_from_binary(gbuf.str());

  std::vector<Vec3> path;
  std::ifstream tf(traj_path);
  if (!tf) {
    std::cerr << "error: cannot open trajectory file " << traj_path << "\n";
    return 1;
  }
  std::string line;
  while (std::getline(tf, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    path.emplace_back(j.at("p").at(0), j.at("p").at(1), j.at("p").at(2));
  }

  Vec3 start, goal;
  bool have_marks = false;
  if (!summary_path.empty()) {
    std::ifstream sf(summary_path);
    if (sf) {
      const json s = json::parse(sf);
      start = Vec3(s.at("start").at(0), s.at("start").at(1), s.at("start").at(2));
      goal = Vec3(s.at("goal").at(0), s.at("goal").at(1), s.at("goal").at(2));
      have_marks = true;
    }
  }
  if (!have_marks && !path.empty()) {
    start = path.front();
    goal = path.back();
    have_marks = true;
  }

  for (const auto& p : path) {
    if (!Aabb{grid.geom.origin,
              grid.geom.origin +
                  grid.geom.resolution *
                      Vec3(grid.geom.dims[0], grid.geom.dims[1],
                           grid.geom.dims[2])}
             .contains(p)) {
      std::cerr << "warning: trajectory leaves the grid bounds\n";
      break;
    }
  }

  const std::string svg =
      io::render_svg(grid, path, z_slice, have_marks ? &start : nullptr,
                     have_marks ? &goal : nullptr);
  try {
    io::write_atomic(out_svg, svg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PA-MPPI quadrotor navigation simulator"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "config file (JSON)");
    sub->add_option("--set", opts.overrides, "key=value override (repeatable)");
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--seed", opts.seed, "episode seed");
    sub->add_option("--jobs", opts.jobs, "worker threads");
  };

  auto* run = app.add_subcommand("run", "run one episode");
  add_common(run);
  auto* batch = app.add_subcommand("batch", "run the configured batch grid");
  add_common(batch);

  std::string traj_path, grid_path, out_svg, summary_path;
  double z_slice = 1.0;
  auto* plot = app.add_subcommand("plot", "render a top-down SVG");
  plot->add_option("--trajectory", traj_path, "trajectory JSONL")->required();
  plot->add_option("--grid", grid_path, "grid binary")->required();
  plot->add_option("--svg", out_svg, "output SVG path")->required();
  plot->add_option("--summary", summary_path, "episode summary (for markers)");
  plot->add_option("--z", z_slice, "slice height [m]");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(opts);
    if (batch->parsed()) return cmd_batch(opts);
    if (plot->parsed()) {
      return cmd_plot(traj_path, grid_path, out_svg, summary_path, z_slice);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
