#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "trajpred/common.hpp"
#include "trajpred/homography.hpp"

namespace trajpred {

// Binary walkability grid with its world <-> pixel transform. Grid value
// 1 means traversable.
struct TraversabilityMap {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> grid;  // row-major
  Homography world_to_pixel;
  double pixel_scale = 1.0;  // meters per pixel, derived from the homography

  bool traversable(int r, int c) const {
    return grid[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                static_cast<std::size_t>(c)] != 0;
  }

  Eigen::Vector2d cell_world(int r, int c) const {
    return world_to_pixel.to_world(Eigen::Vector2d(static_cast<double>(c), static_cast<double>(r)));
  }

  void validate() const {
    if (rows <= 0 || cols <= 0) throw DataError("traversability map is empty");
    bool any = false;
    for (auto v : grid) any = any || v != 0;
    if (!any) throw DataError("traversability map has no traversable cell");
  }

  static TraversabilityMap from_grid(int rows, int cols, std::vector<std::uint8_t> grid,
                                     const Homography& h) {
    TraversabilityMap m;
    m.rows = rows;
    m.cols = cols;
    m.grid = std::move(grid);
    m.world_to_pixel = h;
    m.pixel_scale = h.meters_per_pixel();
    m.validate();
    return m;
  }

  // PGM (P2/P5, value >= half of maxval is traversable) or whitespace
  // separated 0/1 text rows.
  static TraversabilityMap load(const std::filesystem::path& path, const Homography& h) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open map file: " + path.string());
    std::string magic;
    in >> magic;
    if (magic == "P2" || magic == "P5") return load_pgm(in, magic, path, h);
    in.clear();
    in.seekg(0);
    return load_text(in, path, h);
  }

 private:
  static void skip_pgm_junk(std::istream& in) {
    while (true) {
      int c = in.peek();
      if (c == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        return;
      }
    }
  }

  static TraversabilityMap load_pgm(std::istream& in, const std::string& magic,
                                    const std::filesystem::path& path, const Homography& h) {
    int w = 0, hh = 0, maxval = 0;
    skip_pgm_junk(in);
    in >> w;
    skip_pgm_junk(in);
    in >> hh;
    skip_pgm_junk(in);
    in >> maxval;
    if (!in || w <= 0 || hh <= 0 || maxval <= 0 || maxval > 255)
      throw ParseError(path.string() + ": bad PGM header");
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(w) * static_cast<std::size_t>(hh));
    if (magic == "P5") {
      in.get();  // single whitespace after maxval
      std::vector<char> raw(grid.size());
      in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
      if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw ParseError(path.string() + ": truncated PGM payload");
      for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] = (2 * static_cast<int>(static_cast<unsigned char>(raw[i])) >= maxval) ? 1 : 0;
      }
    } else {
      for (auto& cell : grid) {
        int v;
        if (!(in >> v)) throw ParseError(path.string() + ": truncated PGM payload");
        cell = (2 * v >= maxval) ? 1 : 0;
      }
    }
    return from_grid(hh, w, std::move(grid), h);
  }

  static TraversabilityMap load_text(std::istream& in, const std::filesystem::path& path,
                                     const Homography& h) {
    std::vector<std::vector<std::uint8_t>> rows;
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::vector<std::uint8_t> row;
      int v;
      while (ls >> v) {
        if (v != 0 && v != 1) throw ParseError(path.string() + ": text map cells must be 0 or 1");
        row.push_back(static_cast<std::uint8_t>(v));
      }
      if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path.string() + ": empty map");
    const std::size_t w = rows[0].size();
    std::vector<std::uint8_t> grid;
    for (const auto& r : rows) {
      if (r.size() != w) throw ParseError(path.string() + ": ragged map rows");
      grid.insert(grid.end(), r.begin(), r.end());
    }
    return from_grid(static_cast<int>(rows.size()), static_cast<int>(w), std::move(grid), h);
  }
};

// Per-cell displacement (world meters) toward the nearest traversable
// cell; zero on traversable cells. Ties in the nearest-cell search break
// toward the smallest (row, col).
struct VectorField {
  int rows = 0;
  int cols = 0;
  Mat fx;  // world-frame x displacement per cell
  Mat fy;
  Homography world_to_pixel;
  std::vector<std::uint8_t> grid;  // copy of the walkability grid

  bool traversable(int r, int c) const {
    return grid[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                static_cast<std::size_t>(c)] != 0;
  }
};

inline VectorField build_vector_field(const TraversabilityMap& map) {
  map.validate();
  const int h = map.rows, w = map.cols;

  // nearest traversable row per (row, column); ties prefer the smaller row
  std::vector<int> nearest_row(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), -1);
  std::vector<int> up(static_cast<std::size_t>(h)), down(static_cast<std::size_t>(h));
  for (int c = 0; c < w; ++c) {
    int seen = -1;
    for (int r = 0; r < h; ++r) {
      if (map.traversable(r, c)) seen = r;
      up[static_cast<std::size_t>(r)] = seen;  // nearest at or above
    }
    seen = -1;
    for (int r = h - 1; r >= 0; --r) {
      if (map.traversable(r, c)) seen = r;
      down[static_cast<std::size_t>(r)] = seen;  // nearest at or below
    }
    for (int r = 0; r < h; ++r) {
      const int a = up[static_cast<std::size_t>(r)], b = down[static_cast<std::size_t>(r)];
      int pick = -1;
      if (a < 0) pick = b;
      else if (b < 0) pick = a;
      else pick = (b - r < r - a) ? b : a;  // tie -> a, the smaller row
      nearest_row[static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c)] = pick;
    }
  }

  VectorField f;
  f.rows = h;
  f.cols = w;
  f.fx = Mat::Zero(h, w);
  f.fy = Mat::Zero(h, w);
  f.world_to_pixel = map.world_to_pixel;
  f.grid = map.grid;

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (map.traversable(r, c)) continue;
      long long best_d2 = std::numeric_limits<long long>::max();
      int best_r = -1, best_c = -1;
      for (int cc = 0; cc < w; ++cc) {
        const int rr = nearest_row[static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(cc)];
        if (rr < 0) continue;
        const long long dr = rr - r, dc = cc - c;
        const long long d2 = dr * dr + dc * dc;
        if (d2 < best_d2 ||
            (d2 == best_d2 && (rr < best_r || (rr == best_r && cc < best_c)))) {
          best_d2 = d2;
          best_r = rr;
          best_c = cc;
        }
      }
      const Eigen::Vector2d delta = map.cell_world(best_r, best_c) - map.cell_world(r, c);
      f.fx(r, c) = delta.x();
      f.fy(r, c) = delta.y();
    }
  }
  return f;
}

// Field value at a world point; bilinear over cell centers. Outside the
// grid the point is treated as non-traversable and pulled toward the
// nearest traversable cell of its clamped boundary cell.
inline Eigen::Vector2d sample_field(const VectorField& f, const Eigen::Vector2d& world) {
  const Eigen::Vector2d px = f.world_to_pixel.to_pixel(world);
  const double u = px.x(), v = px.y();
  if (u < 0.0 || v < 0.0 || u > f.cols - 1.0 || v > f.rows - 1.0) {
    const int c = std::clamp(static_cast<int>(std::lround(u)), 0, f.cols - 1);
    const int r = std::clamp(static_cast<int>(std::lround(v)), 0, f.rows - 1);
    const Eigen::Vector2d cell_w =
        f.world_to_pixel.to_world(Eigen::Vector2d(static_cast<double>(c), static_cast<double>(r)));
    return Eigen::Vector2d(f.fx(r, c), f.fy(r, c)) + (cell_w - world);
  }
  const int c0 = std::clamp(static_cast<int>(std::floor(u)), 0, f.cols - 1);
  const int r0 = std::clamp(static_cast<int>(std::floor(v)), 0, f.rows - 1);
  const int c1 = std::min(c0 + 1, f.cols - 1);
  const int r1 = std::min(r0 + 1, f.rows - 1);
  const double au = std::clamp(u - c0, 0.0, 1.0);
  const double av = std::clamp(v - r0, 0.0, 1.0);
  auto lerp2 = [&](const Mat& g) {
    const double top = (1.0 - au) * g(r0, c0) + au * g(r0, c1);
    const double bot = (1.0 - au) * g(r1, c0) + au * g(r1, c1);
    return (1.0 - av) * top + av * bot;
  };
  return {lerp2(f.fx), lerp2(f.fy)};
}

// Nearest-cell walkability of a world point (out of bounds counts as
// blocked).
inline bool point_traversable(const VectorField& f, const Eigen::Vector2d& world) {
  const Eigen::Vector2d px = f.world_to_pixel.to_pixel(world);
  const int c = static_cast<int>(std::lround(px.x()));
  const int r = static_cast<int>(std::lround(px.y()));
  if (c < 0 || r < 0 || c >= f.cols || r >= f.rows) return false;
  return f.traversable(r, c);
}

}  // namespace trajpred
