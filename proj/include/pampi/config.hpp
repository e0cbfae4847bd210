#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pampi/simulation.hpp"

namespace pampi {

using nlohmann::json;

/// Camera block kept in human units; fx/fy are derived from the FoV.
struct CameraConfig {
  int width{320};
  int height{240};
  double hfov_deg{90.0};
  double max_range{5.0};

  CameraIntrinsics intrinsics() const {
    return CameraIntrinsics::with_hfov(width, height, hfov_deg * M_PI / 180.0,
                                       max_range);
  }
};

struct BatchCellConfig {
  std::string controller{"pa-mppi"};
  std::string family{"cwall"};
  std::vector<double> sizes{0.5, 1.0, 2.0, 3.0};
};

struct BatchConfig {
  int repeats{5};
  uint64_t base_seed{1};
  std::vector<BatchCellConfig> cells;
};

/// Whole-run configuration. Every field has a default, so an empty file is
/// a valid config; unknown keys are rejected with a path diagnostic.
struct RunConfig {
  QuadParams quad;
  MppiConfig mppi;
  CostParams costs;
  CameraConfig camera;
  EpisodeConfig episode;
  BatchConfig batch;
};

namespace cfgdetail {

inline json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
inline json vec4_to_json(const Vec4& v) {
  return json::array({v(0), v(1), v(2), v(3)});
}
inline Vec3 vec3_from_json(const json& j) { return Vec3(j.at(0), j.at(1), j.at(2)); }
inline Vec4 vec4_from_json(const json& j) {
  return Vec4(j.at(0), j.at(1), j.at(2), j.at(3));
}

}  // namespace cfgdetail

inline json to_json(const RunConfig& c) {
  using namespace cfgdetail;
  json j;
  j["quad"] = {{"mass", c.quad.mass},
               {"inertia", vec3_to_json(c.quad.inertia)},
               {"gravity", vec3_to_json(c.quad.gravity)},
               {"arm_length", c.quad.arm_length},
               {"thrust_to_weight", c.quad.thrust_to_weight},
               {"n_rotors", c.quad.n_rotors},
               {"k_rate", c.quad.k_rate},
               {"yaw_torque_coeff", c.quad.yaw_torque_coeff},
               {"collision_radius", c.quad.collision_radius}};
  j["mppi"] = {{"n_samples", c.mppi.n_samples},
               {"horizon", c.mppi.horizon},
               {"lambda", c.mppi.lambda},
               {"dt_pred", c.mppi.dt_pred},
               {"dt_ctrl", c.mppi.dt_ctrl},
               {"sigma", vec4_to_json(c.mppi.sigma)},
               {"rng_seed", c.mppi.rng_seed},
               {"jobs", c.mppi.jobs},
               {"sentinel_cost", c.mppi.sentinel_cost}};
  j["costs"] = {{"c_pos", c.costs.c_pos},
                {"c_psi", c.costs.c_psi},
                {"c_collision", c.costs.c_collision},
                {"c_poi", c.costs.c_poi},
                {"c_thresh", c.costs.c_thresh},
                {"c_free", c.costs.c_free},
                {"c_unknown", c.costs.c_unknown},
                {"c_occupied", c.costs.c_occupied},
                {"R", vec4_to_json(c.costs.R)},
                {"R_delta", vec4_to_json(c.costs.R_delta)},
                {"c_safe", c.costs.c_safe},
                {"v_bound", c.costs.v_bound},
                {"omega_bound", c.costs.omega_bound},
                {"raytrace_stride", c.costs.raytrace_stride}};
  j["camera"] = {{"width", c.camera.width},
                 {"height", c.camera.height},
                 {"hfov_deg", c.camera.hfov_deg},
                 {"max_range", c.camera.max_range}};
  j["episode"] = {
      {"scene",
       {{"family", to_string(c.episode.scene.family)},
        {"size", c.episode.scene.size},
        {"seed", c.episode.scene.seed}}},
      {"controller", to_string(c.episode.controller)},
      {"timeout", c.episode.timeout},
      {"goal_pos_tol", c.episode.goal_pos_tol},
      {"goal_yaw_tol", c.episode.goal_yaw_tol},
      {"goal_vel_tol", c.episode.goal_vel_tol},
      {"stuck_window", c.episode.stuck_window},
      {"stuck_displacement", c.episode.stuck_displacement},
      {"init_observation",
       c.episode.init_observation == InitObservation::YawSweep ? "yaw-sweep"
                                                               : "none"},
      {"seed", c.episode.seed},
      {"map_resolution", c.episode.map_resolution},
      {"map_margin", c.episode.map_margin},
      {"map_bounds",
       c.episode.map_bounds
           ? json::array({vec3_to_json(c.episode.map_bounds->min),
                          vec3_to_json(c.episode.map_bounds->max)})
           : json()},
      {"control_rate", c.episode.control_rate},
      {"render_rate", c.episode.render_rate},
      {"snapshot_rate", c.episode.snapshot_rate},
      {"reference_duration", c.episode.reference_duration}};
  json cells = json::array();
  for (const auto& cell : c.batch.cells) {
    cells.push_back({{"controller", cell.controller},
                     {"family", cell.family},
                     {"sizes", cell.sizes}});
  }
  j["batch"] = {{"repeats", c.batch.repeats},
                {"base_seed", c.batch.base_seed},
                {"cells", cells}};
  return j;
}

namespace cfgdetail {

// every user key must exist in the defaults (arrays of objects are
// validated against the template element)
inline void reject_unknown(const json& user, const json& defaults,
                           const std::string& path) {
  if (user.is_object()) {
    if (!defaults.is_object()) {
      throw std::invalid_argument("config: unexpected object at " + path);
    }
    for (auto it = user.begin(); it != user.end(); ++it) {
      if (!defaults.contains(it.key())) {
        throw std::invalid_argument("config: unknown key " + path + "/" +
                                    it.key());
      }
      reject_unknown(it.value(), defaults.at(it.key()), path + "/" + it.key());
    }
  } else if (user.is_array() && defaults.is_array() && !defaults.empty() &&
             defaults.front().is_object()) {
    for (size_t i = 0; i < user.size(); ++i) {
      reject_unknown(user[i], defaults.front(), path + "/" + std::to_string(i));
    }
  }
}

inline void merge(json& base, const json& user) {
  if (base.is_object() && user.is_object()) {
    for (auto it = user.begin(); it != user.end(); ++it) {
      if (base.contains(it.key()) && base[it.key()].is_object() &&
          it.value().is_object()) {
        merge(base[it.key()], it.value());
      } else {
        base[it.key()] = it.value();
      }
    }
  } else {
    base = user;
  }
}

}  // namespace cfgdetail

inline RunConfig config_from_json(const json& merged) {
  using namespace cfgdetail;
  RunConfig c;
  const json& q = merged.at("quad");
  c.quad.mass = q.at("mass");
  c.quad.inertia = vec3_from_json(q.at("inertia"));
  c.quad.gravity = vec3_from_json(q.at("gravity"));
  c.quad.arm_length = q.at("arm_length");
  c.quad.thrust_to_weight = q.at("thrust_to_weight");
  c.quad.n_rotors = q.at("n_rotors");
  c.quad.k_rate = q.at("k_rate");
  c.quad.yaw_torque_coeff = q.at("yaw_torque_coeff");
  c.quad.collision_radius = q.at("collision_radius");

  const json& m = merged.at("mppi");
  c.mppi.n_samples = m.at("n_samples");
  c.mppi.horizon = m.at("horizon");
  c.mppi.lambda = m.at("lambda");
  c.mppi.dt_pred = m.at("dt_pred");
  c.mppi.dt_ctrl = m.at("dt_ctrl");
  c.mppi.sigma = vec4_from_json(m.at("sigma"));
  c.mppi.rng_seed = m.at("rng_seed");
  c.mppi.jobs = m.at("jobs");
  c.mppi.sentinel_cost = m.at("sentinel_cost");

  const json& k = merged.at("costs");
  c.costs.c_pos = k.at("c_pos");
  c.costs.c_psi = k.at("c_psi");
  c.costs.c_collision = k.at("c_collision");
  c.costs.c_poi = k.at("c_poi");
  c.costs.c_thresh = k.at("c_thresh");
  c.costs.c_free = k.at("c_free");
  c.costs.c_unknown = k.at("c_unknown");
  c.costs.c_occupied = k.at("c_occupied");
  c.costs.R = vec4_from_json(k.at("R"));
  c.costs.R_delta = vec4_from_json(k.at("R_delta"));
  c.costs.c_safe = k.at("c_safe");
  c.costs.v_bound = k.at("v_bound");
  c.costs.omega_bound = k.at("omega_bound");
  c.costs.raytrace_stride = k.at("raytrace_stride");

  const json& cam = merged.at("camera");
  c.camera.width = cam.at("width");
  c.camera.height = cam.at("height");
  c.camera.hfov_deg = cam.at("hfov_deg");
  c.camera.max_range = cam.at("max_range");

  const json& e = merged.at("episode");
  c.episode.scene.family = scene_family_from_string(e.at("scene").at("family"));
  c.episode.scene.size = e.at("scene").at("size");
  c.episode.scene.seed = e.at("scene").at("seed");
  c.episode.controller = controller_from_string(e.at("controller"));
  c.episode.timeout = e.at("timeout");
  c.episode.goal_pos_tol = e.at("goal_pos_tol");
  c.episode.goal_yaw_tol = e.at("goal_yaw_tol");
  c.episode.goal_vel_tol = e.at("goal_vel_tol");
  c.episode.stuck_window = e.at("stuck_window");
  c.episode.stuck_displacement = e.at("stuck_displacement");
  const std::string init = e.at("init_observation");
  if (init == "yaw-sweep") {
    c.episode.init_observation = InitObservation::YawSweep;
  } else if (init == "none") {
    c.episode.init_observation = InitObservation::None;
  } else {
    throw std::invalid_argument("config: init_observation must be none|yaw-sweep");
  }
  c.episode.seed = e.at("seed");
  c.episode.map_resolution = e.at("map_resolution");
  c.episode.map_margin = e.at("map_margin");
  const json& mb = e.at("map_bounds");
  if (mb.is_null()) {
    c.episode.map_bounds.reset();
  } else {
    c.episode.map_bounds =
        Aabb{vec3_from_json(mb.at(0)), vec3_from_json(mb.at(1))};
  }
  c.episode.control_rate = e.at("control_rate");
  c.episode.render_rate = e.at("render_rate");
  c.episode.snapshot_rate = e.at("snapshot_rate");
  c.episode.reference_duration = e.at("reference_duration");

  const json& b = merged.at("batch");
  c.batch.repeats = b.at("repeats");
  c.batch.base_seed = b.at("base_seed");
  c.batch.cells.clear();
  for (const auto& cell : b.at("cells")) {
    BatchCellConfig bc;
    bc.controller = cell.at("controller");
    bc.family = cell.at("family");
    bc.sizes = cell.at("sizes").get<std::vector<double>>();
    c.batch.cells.push_back(bc);
  }
  return c;
}

/// Validates user json against the defaults, merges, and parses. The
/// returned pair also carries the merged (effective) document so it can be
/// dumped and reloaded byte-identically.
inline std::pair<RunConfig, json> load_config_json(const json& user) {
  json defaults = to_json(RunConfig{});
  // template for cell validation even when the default list is empty
  json defaults_for_check = defaults;
  defaults_for_check["batch"]["cells"] = json::array(
      {{{"controller", ""}, {"family", ""}, {"sizes", json::array()}}});
  cfgdetail::reject_unknown(user, defaults_for_check, "");
  cfgdetail::merge(defaults, user);
  return {config_from_json(defaults), defaults};
}

inline std::pair<RunConfig, json> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json user;
  try {
    user = json::parse(in);
  } catch (const json::parse_error& err) {
    throw std::runtime_error("config parse error in " + path + ": " +
                             err.what());
  }
  return load_config_json(user);
}

/// Applies a `key=value` override with dotted paths; bare `controller`,
/// `scene` (family:size) and `seed` shortcuts are accepted.
inline void apply_override(json& doc, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("override must be key=value: " + kv);
  }
  std::string key = kv.substr(0, eq);
  const std::string value = kv.substr(eq + 1);

  if (key == "controller") key = "episode.controller";
  if (key == "seed") key = "episode.seed";
  if (key == "scene") {
    const auto colon = value.find(':');
    doc["episode"]["scene"]["family"] =
        value.substr(0, colon == std::string::npos ? value.size() : colon);
    if (colon != std::string::npos) {
      doc["episode"]["scene"]["size"] = std::stod(value.substr(colon + 1));
    }
    return;
  }

  json* node = &doc;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;  // plain string
  }
  (*node)[parts.back()] = parsed;
}

}  // namespace pampi
