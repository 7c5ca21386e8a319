#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajpred/common.hpp"
#include "trajpred/metrics.hpp"
#include "trajpred/png.hpp"
#include "trajpred/protocol.hpp"
#include "trajpred/traversability.hpp"

namespace trajpred {

inline nlohmann::ordered_json results_to_json(const std::vector<EvalResult>& rs) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rs) {
    nlohmann::ordered_json j;
    j["task"] = r.task;
    j["scene"] = r.scene;
    j["ade"] = r.ade;
    j["fde"] = r.fde;
    j["samples"] = r.samples;
    j["windows"] = r.windows;
    j["config_hash"] = r.config_hash;
    j["aggregate"] = r.aggregate;
    arr.push_back(j);
  }
  return arr;
}

inline std::vector<EvalResult> results_from_json(const nlohmann::ordered_json& arr) {
  std::vector<EvalResult> rs;
  for (const auto& j : arr) {
    EvalResult r;
    r.task = j.at("task").get<std::string>();
    r.scene = j.at("scene").get<std::string>();
    r.ade = j.at("ade").get<double>();
    r.fde = j.at("fde").get<double>();
    r.samples = j.at("samples").get<int>();
    r.windows = j.at("windows").get<long>();
    r.config_hash = j.value("config_hash", "");
    r.aggregate = j.value("aggregate", false);
    rs.push_back(r);
  }
  return rs;
}

inline void write_results_json(const std::vector<EvalResult>& rs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << results_to_json(rs).dump(1) << "\n";
}

inline std::vector<EvalResult> load_results_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  nlohmann::ordered_json j;
  in >> j;
  return results_from_json(j);
}

inline void write_results_csv(const std::vector<EvalResult>& rs, const std::filesystem::path& path) {
  if (rs.empty()) throw ArgError("report: no results to write");
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "task,scene,ade,fde,samples,windows,config_hash,aggregate\n";
  for (const auto& r : rs) {
    out << r.task << "," << r.scene << "," << std::setprecision(10) << r.ade << "," << r.fde << ","
        << r.samples << "," << r.windows << "," << r.config_hash << "," << (r.aggregate ? 1 : 0)
        << "\n";
  }
}

namespace detail {

inline std::string fmt_pair(double ade, double fde) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << ade << " / " << fde;
  return os.str();
}

}  // namespace detail

// One row per scene plus the AVG row: "| Scene | ADE | FDE |".
// For domain adaptation, a per-source grid with ADE/FDE cells.
inline std::string results_markdown(const std::vector<EvalResult>& rs) {
  if (rs.empty()) throw ArgError("report: no results to format");
  std::ostringstream os;
  const std::string task = rs.front().task;
  if (task == "domain_adaptation") {
    // collect sources and destinations in first-seen order
    std::vector<std::string> sources;
    std::map<std::string, std::map<std::string, const EvalResult*>> grid;
    for (const auto& r : rs) {
      if (r.aggregate) continue;
      const auto pos = r.scene.find('2');
      const std::string src = r.scene.substr(0, pos), dst = r.scene.substr(pos + 1);
      if (grid.find(src) == grid.end()) sources.push_back(src);
      grid[src][dst] = &r;
    }
    os << "| Train \\ Test (ADE / FDE) |";
    std::vector<std::string> dsts = sources;  // square grid over the same scene set
    for (const auto& d : dsts) os << " " << d << " |";
    os << " AVG |\n|---|";
    for (std::size_t i = 0; i <= dsts.size(); ++i) os << "---|";
    os << "\n";
    for (const auto& src : sources) {
      os << "| " << src << " |";
      for (const auto& d : dsts) {
        auto it = grid[src].find(d);
        os << " " << (it == grid[src].end() ? "-" : detail::fmt_pair(it->second->ade, it->second->fde))
           << " |";
      }
      const EvalResult* avg = nullptr;
      for (const auto& r : rs)
        if (r.aggregate && r.scene == src + "2AVG") avg = &r;
      os << " " << (avg ? detail::fmt_pair(avg->ade, avg->fde) : "-") << " |\n";
    }
    for (const auto& r : rs) {
      if (r.aggregate && r.scene == "AVG")
        os << "\nCross-scene average: " << detail::fmt_pair(r.ade, r.fde) << "\n";
    }
  } else {
    os << "| " << task << " |";
    for (const auto& r : rs) os << " " << r.scene << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < rs.size(); ++i) os << "---|";
    os << "\n| ADE / FDE |";
    for (const auto& r : rs) os << " " << detail::fmt_pair(r.ade, r.fde) << " |";
    os << "\n";
  }
  return os.str();
}

inline void write_results_markdown(const std::vector<EvalResult>& rs,
                                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << results_markdown(rs);
}

// Ablation table: rows are swept values, columns are tasks.
struct AblationRow {
  std::string value;  // e.g. "K=3" or "M=10"
  std::vector<std::pair<std::string, AdeFde>> per_task;
};

inline std::string ablation_markdown(const std::string& axis, const std::vector<AblationRow>& rows) {
  if (rows.empty()) throw ArgError("ablation table: no rows");
  std::ostringstream os;
  os << "| " << axis << " |";
  for (const auto& [t, m] : rows.front().per_task) os << " " << t << " |";
  os << " Average |\n|---|";
  for (std::size_t i = 0; i <= rows.front().per_task.size(); ++i) os << "---|";
  os << "\n";
  for (const auto& row : rows) {
    os << "| " << row.value << " |";
    double a = 0.0, f = 0.0;
    for (const auto& [t, m] : row.per_task) {
      os << " " << detail::fmt_pair(m.ade, m.fde) << " |";
      a += m.ade;
      f += m.fde;
    }
    const double n = static_cast<double>(row.per_task.size());
    os << " " << detail::fmt_pair(a / n, f / n) << " |\n";
  }
  return os.str();
}

// "csv" | "markdown" | "json" -> file path written.
inline std::filesystem::path report(const std::vector<EvalResult>& rs, const std::string& format,
                                    const std::filesystem::path& out_dir) {
  if (rs.empty()) throw ArgError("report: refusing to emit empty results");
  std::filesystem::create_directories(out_dir);
  const std::string stem = rs.front().task + "_results";
  if (format == "csv") {
    auto p = out_dir / (stem + ".csv");
    write_results_csv(rs, p);
    return p;
  }
  if (format == "markdown") {
    auto p = out_dir / (stem + ".md");
    write_results_markdown(rs, p);
    return p;
  }
  if (format == "json") {
    auto p = out_dir / (stem + ".json");
    write_results_json(rs, p);
    return p;
  }
  throw ArgError("report: unknown format \"" + format + "\" (csv, markdown, json)");
}

// ---------------------------------------------------------------------------
// Trajectory plots
// ---------------------------------------------------------------------------

class ScenePlot {
 public:
  explicit ScenePlot(const TraversabilityMap& map, int scale = 4)
      : map_(&map), scale_(scale), w_(map.cols * scale), h_(map.rows * scale),
        rgb_(static_cast<std::size_t>(w_) * static_cast<std::size_t>(h_) * 3) {
    for (int r = 0; r < h_; ++r)
      for (int c = 0; c < w_; ++c) {
        const bool walk = map.traversable(r / scale_, c / scale_);
        set(c, r, walk ? 245 : 120, walk ? 245 : 120, walk ? 245 : 130);
      }
  }

  void polyline(const Path& world, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    for (Eigen::Index i = 0; i + 1 < world.rows(); ++i) {
      const Eigen::Vector2d a = map_->world_to_pixel.to_pixel(world.row(i).transpose()) * scale_;
      const Eigen::Vector2d d = map_->world_to_pixel.to_pixel(world.row(i + 1).transpose()) * scale_;
      line(a.x(), a.y(), d.x(), d.y(), r, g, b);
    }
  }

  void save(const std::filesystem::path& path) const { write_png_rgb(path, w_, h_, rgb_); }

 private:
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    const std::size_t i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(w_) +
                           static_cast<std::size_t>(x)) * 3;
    rgb_[i] = r;
    rgb_[i + 1] = g;
    rgb_[i + 2] = b;
  }

  void line(double x0, double y0, double x1, double y1, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const int steps = static_cast<int>(std::hypot(x1 - x0, y1 - y0)) + 1;
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      set(static_cast<int>(std::lround(x0 + t * (x1 - x0))),
          static_cast<int>(std::lround(y0 + t * (y1 - y0))), r, g, b);
    }
  }

  const TraversabilityMap* map_;
  int scale_;
  int w_, h_;
  std::vector<std::uint8_t> rgb_;
};

}  // namespace trajpred
