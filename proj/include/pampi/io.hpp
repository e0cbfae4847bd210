#pragma once

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pampi/simulation.hpp"

namespace pampi {

namespace io {

/// Write via temp file + rename so readers never see a truncated file.
inline void write_atomic(const std::filesystem::path& path,
                         const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline nlohmann::json vec3_json(const Vec3& v) {
  return nlohmann::json::array({v.x(), v.y(), v.z()});
}

inline std::string trajectory_jsonl(const EpisodeResult& res) {
  std::ostringstream out;
  for (const auto& s : res.trajectory) {
    nlohmann::json j = {
        {"t", s.t},
        {"p", vec3_json(s.state.p)},
        {"q", {s.state.q.w(), s.state.q.x(), s.state.q.y(), s.state.q.z()}},
        {"v", vec3_json(s.state.v)},
        {"omega", vec3_json(s.state.omega)},
        {"command", {{"thrust", s.command.thrust}, {"rates", vec3_json(s.command.rates)}}},
        {"costs",
         {{"goal", s.costs.goal},
          {"action", s.costs.action},
          {"collision", s.costs.collision},
          {"perception", s.costs.perception}}},
        {"l_min", s.l_min},
        {"ess", s.effective_samples},
        {"grid_version", s.grid_version}};
    out << j.dump() << "\n";
  }
  return out.str();
}

inline nlohmann::json summary_json(const EpisodeConfig& cfg,
                                   const EpisodeResult& res) {
  nlohmann::json cov = nlohmann::json::array();
  for (const auto& c : res.coverage) cov.push_back({{"t", c.t}, {"known", c.known_fraction}});
  return {{"termination", to_string(res.termination)},
          {"time_to_goal", res.time_to_goal},
          {"max_penetration", res.max_penetration},
          {"starved", res.starved},
          {"controller", to_string(cfg.controller)},
          {"scene",
           {{"family", to_string(cfg.scene.family)},
            {"size", cfg.scene.size},
            {"seed", cfg.scene.seed}}},
          {"seed", cfg.seed},
          {"start", vec3_json(res.scene.start_pos)},
          {"goal", vec3_json(res.scene.goal_pos)},
          {"coverage", cov}};
}

/// Scene as a flat primitive list, for plotting.
inline nlohmann::json scene_json(const Scene& sc) {
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : sc.obstacles) {
    nlohmann::json j = {{"center", vec3_json(o.center)},
                        {"half_extents", vec3_json(o.half_extents)}};
    if (o.has_hole()) {
      j["hole_axis"] = o.hole_axis;
      j["hole_center"] = vec3_json(o.hole_center);
      j["hole_diameter"] = o.hole_diameter;
    }
    obs.push_back(j);
  }
  return {{"bounds", {{"min", vec3_json(sc.bounds.min)}, {"max", vec3_json(sc.bounds.max)}}},
          {"start", vec3_json(sc.start_pos)},
          {"start_yaw", sc.start_yaw},
          {"goal", vec3_json(sc.goal_pos)},
          {"goal_yaw", sc.goal_yaw},
          {"obstacles", obs}};
}

// --- grid binary: origin (3 x f64 LE), dims (3 x i32 LE), resolution
// (f64 LE), then X*Y*Z signed bytes, x-major ---

inline std::string grid_binary(const OccupancyGrid& g) {
  std::string out;
  out.reserve(7 * 8 + g.values.size());
  auto put = [&](const void* p, size_t n) {
    out.append(reinterpret_cast<const char*>(p), n);
  };
  for (int a = 0; a < 3; ++a) {
    const double v = g.geom.origin(a);
    put(&v, 8);
  }
  for (int a = 0; a < 3; ++a) {
    const int32_t v = g.geom.dims[a];
    put(&v, 4);
  }
  put(&g.geom.resolution, 8);
  put(g.values.data(), g.values.size());
  return out;
}

inline OccupancyGrid grid_from_binary(const std::string& bytes) {
  OccupancyGrid g;
  const size_t header = 3 * 8 + 3 * 4 + 8;
  if (bytes.size() < header) throw std::runtime_error("grid file truncated");
  const char* p = bytes.data();
  for (int a = 0; a < 3; ++a) {
    double v;
    std::memcpy(&v, p, 8);
    p += 8;
    g.geom.origin(a) = v;
  }
  for (int a = 0; a < 3; ++a) {
    int32_t v;
    std::memcpy(&v, p, 4);
    p += 4;
    g.geom.dims[a] = v;
  }
  std::memcpy(&g.geom.resolution, p, 8);
  p += 8;
  const size_t n = g.geom.voxel_count();
  if (bytes.size() != header + n) throw std::runtime_error("grid payload size mismatch");
  g.values.assign(reinterpret_cast<const int8_t*>(p),
                  reinterpret_cast<const int8_t*>(p) + n);
  return g;
}

/// Human-readable z-slice, one character per voxel (# occupied, . free,
/// ? unknown), rows are y from max to min.
inline std::string grid_slice_dump(const OccupancyGrid& g, double z) {
  std::ostringstream out;
  const long zi = GridGeom::axis_index((z - g.geom.origin.z()) / g.geom.resolution);
  for (long y = g.geom.dims[1] - 1; y >= 0; --y) {
    for (long x = 0; x < g.geom.dims[0]; ++x) {
      const int8_t v = g.at({x, y, zi});
      out << (v == 1 ? '#' : v == 0 ? '.' : '?');
    }
    out << "\n";
  }
  return out.str();
}

inline std::string batch_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "controller,family,size,repeats,success_pct,stuck_pct,collision_pct,"
         "mean_time_to_goal_s,mean_penetration_m\n";
  for (const auto& r : rows) {
    out << to_string(r.controller) << ',' << to_string(r.family) << ','
        << r.size << ',' << r.repeats << ',' << r.success_pct << ','
        << r.stuck_pct << ',' << r.collision_pct << ',' << r.mean_time_to_goal
        << ',' << r.mean_penetration << "\n";
  }
  return out.str();
}

inline std::string batch_table(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(15) << "controller" << std::setw(10)
      << "family" << std::setw(7) << "size" << std::right << std::setw(10)
      << "success%" << std::setw(9) << "stuck%" << std::setw(12)
      << "collision%" << std::setw(12) << "t_goal[s]" << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(15) << to_string(r.controller)
        << std::setw(10) << to_string(r.family) << std::setw(7) << r.size
        << std::right << std::fixed << std::setprecision(0) << std::setw(10)
        << r.success_pct << std::setw(9) << r.stuck_pct << std::setw(12)
        << r.collision_pct << std::setprecision(2) << std::setw(12)
        << r.mean_time_to_goal << "\n";
    out.unsetf(std::ios::fixed);
  }
  return out.str();
}

/// Top-down x-y SVG of one grid z-slice with the flown path. Occupied
/// voxels red, free green, unknown blue.
inline std::string render_svg(const OccupancyGrid& g,
                              const std::vector<Vec3>& path, double z_slice,
                              const Vec3* start = nullptr,
                              const Vec3* goal = nullptr) {
  const double px_per_m = 100.0;
  const double w = g.geom.dims[0] * g.geom.resolution * px_per_m;
  const double h = g.geom.dims[1] * g.geom.resolution * px_per_m;
  auto X = [&](double x) { return (x - g.geom.origin.x()) * px_per_m; };
  auto Y = [&](double y) { return h - (y - g.geom.origin.y()) * px_per_m; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
      << "\">\n";
  const long zi =
      GridGeom::axis_index((z_slice - g.geom.origin.z()) / g.geom.resolution);
  const double cell = g.geom.resolution * px_per_m;
  for (long x = 0; x < g.geom.dims[0]; ++x) {
    for (long y = 0; y < g.geom.dims[1]; ++y) {
      const int8_t v = g.at({x, y, zi});
      const char* color = v == 1 ? "#d03030" : v == 0 ? "#70c070" : "#4060c0";
      out << "<rect x=\"" << x * cell << "\" y=\"" << h - (y + 1) * cell
          << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
          << color << "\"/>\n";
    }
  }
  if (!path.empty()) {
    out << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"3\" points=\"";
    for (const auto& p : path) out << X(p.x()) << "," << Y(p.y()) << " ";
    out << "\"/>\n";
  }
  auto marker = [&](const Vec3& p, const char* color) {
    out << "<circle cx=\"" << X(p.x()) << "\" cy=\"" << Y(p.y())
        << "\" r=\"8\" fill=\"" << color << "\" stroke=\"black\"/>\n";
  };
  if (start) marker(*start, "white");
  if (goal) marker(*goal, "gold");
  out << "</svg>\n";
  return out.str();
}

}  // namespace io
}  // namespace pampi
