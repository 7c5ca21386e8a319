#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajpred/common.hpp"
#include "trajpred/traversability.hpp"

namespace trajpred {

// Synthetic benchmark corpus: a handful of scenes populated by
// constant-velocity and single-turn walkers that keep to the traversable
// area around one rectangular obstacle. File formats match the real
// corpus (scene text files, PGM maps, registry JSON), so every pipeline
// stage runs unchanged.
struct SynthOptions {
  int scenes = 5;
  int agents_per_scene = 48;
  double turn_fraction = 0.5;
  int min_frames = 20;
  int max_frames = 26;
  std::uint64_t seed = 7;

  double world = 20.0;          // square world edge, meters
  int grid = 100;               // map resolution (grid x grid)
  double obstacle_size = 3.6;   // obstacle edge, meters
};

namespace detail {

inline bool path_clear(const std::vector<Eigen::Vector2d>& pts, const TraversabilityMap& map) {
  for (const auto& p : pts) {
    const Eigen::Vector2d px = map.world_to_pixel.to_pixel(p);
    const int c = static_cast<int>(std::lround(px.x()));
    const int r = static_cast<int>(std::lround(px.y()));
    if (c < 1 || r < 1 || c >= map.cols - 1 || r >= map.rows - 1) return false;
    if (!map.traversable(r, c)) return false;
  }
  return true;
}

inline std::vector<Eigen::Vector2d> sample_track(Rng& rng, const TraversabilityMap& map,
                                                 const SynthOptions& opt, int frames, bool turn) {
  for (int attempt = 0; attempt < 400; ++attempt) {
    const double margin = 1.5;
    Eigen::Vector2d pos(rng.uniform(margin, opt.world - margin),
                        rng.uniform(margin, opt.world - margin));
    double heading = rng.uniform(0.0, 2.0 * M_PI);
    const double speed = rng.uniform(0.4, 1.1) * 0.4;  // meters per frame at 2.5 fps
    const int turn_at = turn ? 9 + static_cast<int>(rng.below(7)) : frames + 1;
    const double turn_by = (rng.uniform() < 0.5 ? 1.0 : -1.0) * rng.uniform(0.7, 1.7);

    std::vector<Eigen::Vector2d> pts;
    pts.reserve(static_cast<std::size_t>(frames));
    Eigen::Vector2d p = pos;
    for (int t = 0; t < frames; ++t) {
      pts.push_back(p);
      if (t + 1 == turn_at) heading += turn_by;
      p += speed * Eigen::Vector2d(std::cos(heading), std::sin(heading));
    }
    if (path_clear(pts, map)) return pts;
  }
  throw DataError("synthetic corpus: could not place an agent on traversable ground");
}

}  // namespace detail

inline TraversabilityMap make_synth_map(const SynthOptions& opt, int scene_index) {
  const double px_per_m = static_cast<double>(opt.grid) / opt.world;
  Eigen::Matrix3d h;
  h << px_per_m, 0, 0, 0, px_per_m, 0, 0, 0, 1;
  // obstacle center varies a little per scene
  const double cx = opt.world * (0.42 + 0.04 * (scene_index % 3));
  const double cy = opt.world * (0.42 + 0.05 * (scene_index % 2)) + 0.3 * scene_index;
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(opt.grid) * static_cast<std::size_t>(opt.grid), 1);
  const double half = opt.obstacle_size / 2.0;
  for (int r = 0; r < opt.grid; ++r) {
    for (int c = 0; c < opt.grid; ++c) {
      const double x = c / px_per_m, y = r / px_per_m;
      if (std::abs(x - cx) <= half && std::abs(y - cy) <= half) {
        grid[static_cast<std::size_t>(r) * static_cast<std::size_t>(opt.grid) +
             static_cast<std::size_t>(c)] = 0;
      }
    }
  }
  return TraversabilityMap::from_grid(opt.grid, opt.grid, std::move(grid), Homography(h));
}

inline void write_pgm(const TraversabilityMap& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write map " + path.string());
  out << "P2\n" << map.cols << " " << map.rows << "\n255\n";
  for (int r = 0; r < map.rows; ++r) {
    for (int c = 0; c < map.cols; ++c) {
      out << (map.traversable(r, c) ? 255 : 0) << (c + 1 == map.cols ? '\n' : ' ');
    }
  }
}

// Writes scene files, maps and the registry; returns the registry path.
inline std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir,
                                                    const SynthOptions& opt) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  Rng rng(derive_seed(opt.seed, "synth"));

  nlohmann::ordered_json scenes_json;
  for (int s = 0; s < opt.scenes; ++s) {
    const std::string name = "synth" + std::string(1, static_cast<char>('A' + s));
    const TraversabilityMap map = make_synth_map(opt, s);
    write_pgm(map, dir / (name + ".pgm"));

    std::ofstream traj(dir / (name + ".txt"));
    if (!traj) throw ConfigError("cannot write scene file");
    traj << std::setprecision(12);
    for (int a = 0; a < opt.agents_per_scene; ++a) {
      const int frames = opt.min_frames +
                         static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_frames - opt.min_frames + 1)));
      const bool turn = rng.uniform() < opt.turn_fraction;
      const auto pts = detail::sample_track(rng, map, opt, frames, turn);
      const long long start = 10 * static_cast<long long>(rng.below(6));  // raw stride of 10
      for (int t = 0; t < frames; ++t) {
        traj << (start + 10 * t) << " " << (a + 1) << " " << pts[static_cast<std::size_t>(t)].x()
             << " " << pts[static_cast<std::size_t>(t)].y() << "\n";
      }
    }

    nlohmann::ordered_json entry;
    entry["trajectories"] = name + ".txt";
    entry["map"] = name + ".pgm";
    const auto h = map.world_to_pixel.row_major();
    entry["world_to_pixel"] = std::vector<double>(h.begin(), h.end());
    scenes_json[name] = entry;
  }

  nlohmann::ordered_json root;
  root["scenes"] = scenes_json;
  const fs::path reg_path = dir / "registry.json";
  std::ofstream reg(reg_path);
  reg << root.dump(1) << "\n";
  return reg_path;
}

}  // namespace trajpred
