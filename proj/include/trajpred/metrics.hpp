#pragma once

#include <vector>

#include "trajpred/common.hpp"

namespace trajpred {

struct AdeFde {
  double ade = 0.0;
  double fde = 0.0;
};

// Best-of-S displacement errors. Per agent, every sample's mean and final
// displacement are computed and the minimum over samples is taken for each
// metric independently; agents are then averaged.
inline AdeFde ade_fde(const std::vector<std::vector<Path>>& pred,
                      const std::vector<Path>& gt) {
  if (pred.size() != gt.size()) throw ShapeError("ade_fde: agent count mismatch");
  if (pred.empty()) throw ShapeError("ade_fde: empty prediction set");
  double ade_sum = 0.0, fde_sum = 0.0;
  for (std::size_t n = 0; n < pred.size(); ++n) {
    if (pred[n].empty()) throw ShapeError("ade_fde: agent has no samples");
    const Path& g = gt[n];
    double best_ade = std::numeric_limits<double>::max();
    double best_fde = std::numeric_limits<double>::max();
    for (const Path& p : pred[n]) {
      if (p.rows() != g.rows()) throw ShapeError("ade_fde: horizon mismatch");
      const double a = (p - g).rowwise().norm().mean();
      const double f = (p.row(p.rows() - 1) - g.row(g.rows() - 1)).norm();
      best_ade = std::min(best_ade, a);
      best_fde = std::min(best_fde, f);
    }
    ade_sum += best_ade;
    fde_sum += best_fde;
  }
  const double n = static_cast<double>(pred.size());
  return {ade_sum / n, fde_sum / n};
}

// Streaming aggregation across groups/scenes (window-weighted mean).
struct MetricAccumulator {
  double ade_sum = 0.0;
  double fde_sum = 0.0;
  long count = 0;

  void add(const AdeFde& m, long windows) {
    ade_sum += m.ade * static_cast<double>(windows);
    fde_sum += m.fde * static_cast<double>(windows);
    count += windows;
  }

  AdeFde mean() const {
    if (count == 0) throw DataError("metric accumulator is empty");
    return {ade_sum / static_cast<double>(count), fde_sum / static_cast<double>(count)};
  }
};

}  // namespace trajpred
