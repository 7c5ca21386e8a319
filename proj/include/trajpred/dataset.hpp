#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajpred/common.hpp"
#include "trajpred/homography.hpp"

namespace trajpred {

struct RawRecord {
  long long frame = 0;  // normalized so consecutive observations differ by 1
  long long ped = 0;
  double x = 0.0;
  double y = 0.0;
};

enum class Task { stochastic, deterministic, momentary, domain_adaptation, few_shot };

inline std::string task_name(Task t) {
  switch (t) {
    case Task::stochastic: return "stochastic";
    case Task::deterministic: return "deterministic";
    case Task::momentary: return "momentary";
    case Task::domain_adaptation: return "domain_adaptation";
    case Task::few_shot: return "few_shot";
  }
  return "?";
}

inline Task task_from_name(const std::string& s) {
  for (Task t : {Task::stochastic, Task::deterministic, Task::momentary, Task::domain_adaptation,
                 Task::few_shot}) {
    if (task_name(t) == s) return t;
  }
  throw ConfigError("unknown task: " + s);
}

struct TaskSpec {
  Task task = Task::stochastic;
  int t_hist = 8;
  int t_fut = 12;
  int samples = 20;  // S
  std::vector<std::string> train_scenes;
  std::vector<std::string> test_scenes;
  double train_fraction = 1.0;

  void validate() const {
    if (t_fut != 12) throw ConfigError("task spec: t_fut must be 12");
    switch (task) {
      case Task::stochastic:
      case Task::few_shot:
        if (samples != 20 || t_hist != 8) throw ConfigError("task spec: bad S or t_hist");
        break;
      case Task::momentary:
        if (samples != 20 || t_hist != 2) throw ConfigError("task spec: momentary needs t_hist=2, S=20");
        break;
      case Task::deterministic:
      case Task::domain_adaptation:
        if (samples != 1 || t_hist != 8) throw ConfigError("task spec: deterministic needs S=1");
        break;
    }
    if (task == Task::few_shot) {
      if (std::abs(train_fraction - 0.1) > 1e-12) throw ConfigError("task spec: few_shot fraction is 0.1");
    } else if (std::abs(train_fraction - 1.0) > 1e-12) {
      throw ConfigError("task spec: train fraction is 1.0 outside few_shot");
    }
  }

  static TaskSpec leave_one_out(Task task, const std::string& test_scene,
                                const std::vector<std::string>& all_scenes) {
    TaskSpec s;
    s.task = task;
    s.t_hist = (task == Task::momentary) ? 2 : 8;
    s.samples = (task == Task::deterministic || task == Task::domain_adaptation) ? 1 : 20;
    s.train_fraction = (task == Task::few_shot) ? 0.1 : 1.0;
    bool found = false;
    for (const auto& sc : all_scenes) {
      if (sc == test_scene) {
        found = true;
      } else {
        s.train_scenes.push_back(sc);
      }
    }
    if (!found) throw ConfigError("unknown scene name: " + test_scene);
    s.test_scenes = {test_scene};
    s.validate();
    return s;
  }

  static TaskSpec domain_pair(const std::string& train_scene, const std::string& test_scene,
                              const std::vector<std::string>& all_scenes) {
    auto known = [&](const std::string& n) {
      return std::find(all_scenes.begin(), all_scenes.end(), n) != all_scenes.end();
    };
    if (!known(train_scene)) throw ConfigError("unknown scene name: " + train_scene);
    if (!known(test_scene)) throw ConfigError("unknown scene name: " + test_scene);
    TaskSpec s;
    s.task = Task::domain_adaptation;
    s.t_hist = 8;
    s.samples = 1;
    s.train_scenes = {train_scene};
    s.test_scenes = {test_scene};
    s.validate();
    return s;
  }
};

// ---------------------------------------------------------------------------
// Scene files: one record per line, "frame ped x y".
// ---------------------------------------------------------------------------

inline std::vector<RawRecord> parse_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene file: " + path.string());

  std::vector<RawRecord> recs;
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<double> fields;
    double v;
    while (ls >> v) fields.push_back(v);
    if (fields.empty()) continue;  // blank line
    if (fields.size() != 4) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 4 fields (frame ped x y), got " + std::to_string(fields.size()));
    }
    RawRecord r;
    r.frame = static_cast<long long>(std::llround(fields[0]));
    r.ped = static_cast<long long>(std::llround(fields[1]));
    r.x = fields[2];
    r.y = fields[3];
    recs.push_back(r);
  }

  std::stable_sort(recs.begin(), recs.end(), [](const RawRecord& a, const RawRecord& b) {
    return a.ped != b.ped ? a.ped < b.ped : a.frame < b.frame;
  });

  // Uniqueness and monotonicity per agent.
  for (std::size_t i = 1; i < recs.size(); ++i) {
    if (recs[i].ped == recs[i - 1].ped && recs[i].frame <= recs[i - 1].frame) {
      throw DataError(path.string() + ": non-increasing frames for agent " +
                      std::to_string(recs[i].ped) + " at frame " + std::to_string(recs[i].frame));
    }
  }

  // Normalize the frame stride (raw files typically step by 10 at 2.5 fps)
  // so consecutive observations differ by 1.
  if (!recs.empty()) {
    long long base = recs.front().frame;
    for (const auto& r : recs) base = std::min(base, r.frame);
    long long g = 0;
    for (const auto& r : recs) g = std::gcd(g, r.frame - base);
    if (g == 0) g = 1;
    for (auto& r : recs) r.frame = (r.frame - base) / g;
  }
  return recs;
}

// ---------------------------------------------------------------------------
// Sliding windows
// ---------------------------------------------------------------------------

struct TrajectoryWindow {
  long long ped = 0;
  std::string scene;
  long long start_frame = 0;  // normalized frame of hist[0]
  Path hist;                  // t_hist x 2
  Path fut;                   // t_fut x 2
  // Indices (into the owning window vector) of agents co-present for the
  // full t_hist + t_fut span, i.e. windows with the same start frame.
  std::vector<int> neighbors;

  Eigen::Vector2d last_obs() const { return hist.row(hist.rows() - 1).transpose(); }
};

inline void rebuild_neighbors(std::vector<TrajectoryWindow>& ws) {
  std::map<long long, std::vector<int>> by_start;
  for (std::size_t i = 0; i < ws.size(); ++i) by_start[ws[i].start_frame].push_back(static_cast<int>(i));
  for (auto& [start, idx] : by_start) {
    for (int i : idx) {
      ws[i].neighbors.clear();
      for (int j : idx)
        if (j != i) ws[i].neighbors.push_back(j);
    }
  }
}

inline std::vector<TrajectoryWindow> make_windows(const std::vector<RawRecord>& records,
                                                  const std::string& scene, const TaskSpec& spec) {
  spec.validate();
  const int span = spec.t_hist + spec.t_fut;
  std::vector<TrajectoryWindow> out;

  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    // contiguous run of one agent
    while (j + 1 < records.size() && records[j + 1].ped == records[i].ped &&
           records[j + 1].frame == records[j].frame + 1) {
      ++j;
    }
    const std::size_t run_len = j - i + 1;
    if (run_len >= static_cast<std::size_t>(span)) {
      for (std::size_t s = i; s + span <= j + 1; ++s) {
        TrajectoryWindow w;
        w.ped = records[i].ped;
        w.scene = scene;
        w.start_frame = records[s].frame;
        w.hist.resize(spec.t_hist, 2);
        w.fut.resize(spec.t_fut, 2);
        for (int t = 0; t < spec.t_hist; ++t) {
          w.hist(t, 0) = records[s + t].x;
          w.hist(t, 1) = records[s + t].y;
        }
        for (int t = 0; t < spec.t_fut; ++t) {
          w.fut(t, 0) = records[s + spec.t_hist + t].x;
          w.fut(t, 1) = records[s + spec.t_hist + t].y;
        }
        out.push_back(std::move(w));
      }
    }
    i = j + 1;
  }

  rebuild_neighbors(out);
  return out;
}

// Co-present windows, processed jointly by the interaction encoder.
inline std::vector<std::vector<int>> group_windows(const std::vector<TrajectoryWindow>& ws) {
  std::map<long long, std::vector<int>> by_start;
  for (std::size_t i = 0; i < ws.size(); ++i) by_start[ws[i].start_frame].push_back(static_cast<int>(i));
  std::vector<std::vector<int>> groups;
  groups.reserve(by_start.size());
  for (auto& [start, idx] : by_start) groups.push_back(idx);
  return groups;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

struct WindowSet {
  std::string scene;
  std::vector<TrajectoryWindow> windows;
};

struct Split {
  std::vector<WindowSet> train;
  std::vector<WindowSet> test;

  std::size_t train_count() const {
    std::size_t n = 0;
    for (const auto& s : train) n += s.windows.size();
    return n;
  }
  std::size_t test_count() const {
    std::size_t n = 0;
    for (const auto& s : test) n += s.windows.size();
    return n;
  }
};

// Deterministic subsample keeping floor(fraction * n) windows; the
// identity when fraction == 1. Neighbor lists are rebuilt over what
// remains.
inline std::vector<WindowSet> subsample_windows(const std::vector<WindowSet>& sets, double fraction,
                                                std::uint64_t seed) {
  if (fraction >= 1.0) return sets;
  std::size_t total = 0;
  for (const auto& s : sets) total += s.windows.size();
  const std::size_t keep = static_cast<std::size_t>(fraction * static_cast<double>(total));
  if (keep == 0) throw ConfigError("subsample would retain zero training windows");

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "fewshot-subsample"));
  rng.shuffle(order);
  std::vector<bool> keep_mask(total, false);
  for (std::size_t i = 0; i < keep; ++i) keep_mask[order[i]] = true;

  std::vector<WindowSet> out;
  std::size_t flat = 0;
  for (const auto& s : sets) {
    WindowSet kept;
    kept.scene = s.scene;
    for (const auto& w : s.windows) {
      if (keep_mask[flat++]) kept.windows.push_back(w);
    }
    rebuild_neighbors(kept.windows);
    out.push_back(std::move(kept));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scene registry
// ---------------------------------------------------------------------------

struct SceneEntry {
  std::string name;
  std::filesystem::path trajectories;
  std::filesystem::path map;
  Homography world_to_pixel;
};

struct SceneRegistry {
  std::vector<SceneEntry> scenes;  // in registry order
  nlohmann::ordered_json model_overrides;

  std::vector<std::string> scene_names() const {
    std::vector<std::string> n;
    for (const auto& s : scenes) n.push_back(s.name);
    return n;
  }

  const SceneEntry& at(const std::string& name) const {
    for (const auto& s : scenes)
      if (s.name == name) return s;
    throw ConfigError("unknown scene name: " + name);
  }

  static SceneRegistry load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    nlohmann::ordered_json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw ConfigError("bad JSON in " + path.string() + ": " + e.what());
    }
    if (!j.contains("scenes") || !j["scenes"].is_object())
      throw ConfigError(path.string() + ": expected a top-level \"scenes\" mapping");

    SceneRegistry reg;
    const auto base = path.parent_path();
    for (const auto& [name, entry] : j["scenes"].items()) {
      SceneEntry e;
      e.name = name;
      e.trajectories = base / entry.at("trajectories").get<std::string>();
      if (entry.contains("map")) e.map = base / entry.at("map").get<std::string>();
      std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};
      if (entry.contains("world_to_pixel")) {
        const auto& arr = entry.at("world_to_pixel");
        if (!arr.is_array() || arr.size() != 9)
          throw ConfigError(path.string() + ": world_to_pixel must be a 9-number row-major array");
        for (int i = 0; i < 9; ++i) h[static_cast<std::size_t>(i)] = arr[static_cast<std::size_t>(i)].get<double>();
      }
      e.world_to_pixel = Homography::from_row_major(h);
      reg.scenes.push_back(std::move(e));
    }
    if (j.contains("model")) reg.model_overrides = j["model"];
    return reg;
  }
};

// All scene windows under a spec, cached per scene by the caller if needed.
inline std::map<std::string, std::vector<TrajectoryWindow>> load_all_windows(
    const SceneRegistry& reg, const TaskSpec& spec) {
  std::map<std::string, std::vector<TrajectoryWindow>> out;
  for (const auto& s : reg.scenes) {
    out[s.name] = make_windows(parse_scene(s.trajectories), s.name, spec);
  }
  return out;
}

inline Split make_split(const TaskSpec& spec,
                        const std::map<std::string, std::vector<TrajectoryWindow>>& by_scene,
                        std::uint64_t seed) {
  spec.validate();
  Split split;
  for (const auto& name : spec.train_scenes) {
    auto it = by_scene.find(name);
    if (it == by_scene.end()) throw ConfigError("unknown scene name: " + name);
    split.train.push_back(WindowSet{name, it->second});
  }
  for (const auto& name : spec.test_scenes) {
    auto it = by_scene.find(name);
    if (it == by_scene.end()) throw ConfigError("unknown scene name: " + name);
    split.test.push_back(WindowSet{name, it->second});
  }
  if (spec.train_fraction < 1.0) {
    split.train = subsample_windows(split.train, spec.train_fraction, seed);
  }
  return split;
}

// Ordered (train, test) scene pairs for the domain-adaptation protocol:
// the full grid, one row per ordered combination.
inline std::vector<std::pair<std::string, std::string>> domain_adaptation_pairs(
    const std::vector<std::string>& scenes) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& a : scenes)
    for (const auto& b : scenes) pairs.emplace_back(a, b);
  return pairs;
}

}  // namespace trajpred
