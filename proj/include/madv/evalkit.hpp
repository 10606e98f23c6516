#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "madv/attack.hpp"
#include "madv/nets.hpp"
#include "madv/overlay.hpp"
#include "madv/rng.hpp"
#include "madv/tensor.hpp"

/// Post-hoc analyses of attack results: relocation robustness, placement
/// confidence heatmaps, Grad-CAM overlap and aggregate tables.
namespace madv::evalkit {

/// Any classifier as a pure map from input to logits.
using LogitsFn = std::function<std::vector<double>(const Tensor&)>;

LogitsFn logits_of(const nets::Network& f);

double target_confidence(const LogitsFn& f, const Tensor& input, std::size_t target);

// ------------------------------------------------------------- relocation

/// One adversarial patch together with the clean image it was made for.
struct RelocationCase {
  Tensor patch;  // [3,s,s]
  Tensor base;   // [3,H,W]
  std::size_t target = 0;
  std::string group;  // e.g. the attack method
};

std::vector<RelocationCase> relocation_cases(const std::vector<attack::AdversarialRecord>& records,
                                             const Tensor& base, const std::string& group);

struct RobustnessGroup {
  std::string name;
  std::size_t records = 0;
  std::size_t successes = 0;
  std::size_t trials = 0;
  double rate = 0.0;
};

struct RobustnessReport {
  std::size_t trials_per_record = 0;
  std::vector<std::size_t> successes;  // per case, out of trials_per_record
  double rate = 0.0;
  std::vector<RobustnessGroup> groups;  // in first-appearance order

  const RobustnessGroup* group(const std::string& name) const;
};

/// Re-places every patch, unchanged, at n fresh draws from the placement
/// prior and counts how often argmax == target.
RobustnessReport relocation_test(const LogitsFn& f, const std::vector<RelocationCase>& cases, std::size_t n,
                                 Rng& rng);

// ---------------------------------------------------------------- heatmap

/// Target confidence indexed by integer patch centre. Cell (r, c) holds the
/// placement centred at (x0 + c*stride, y0 + r*stride).
struct Heatmap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 1;
  double x0 = 0.0;
  double y0 = 0.0;
  std::vector<double> values;
  std::string patch_id;

  double at(std::size_t r, std::size_t c) const { return values.at(r * cols + c); }
  /// Nearest cell to a real centre, clamped into the grid.
  std::pair<std::size_t, std::size_t> cell_of(double cx, double cy) const;
  /// Fraction of cells whose value is <= v.
  double percentile_rank(double v) const;
  Tensor to_tensor() const;
};

struct HeatmapOptions {
  std::size_t stride = 1;
  double phi = 0.0;
  /// Take the max over phi in {0, pi/2, pi, 3pi/2} instead of a fixed phi.
  bool sweep_rotations = false;
  std::string patch_id;
};

/// Exhaustive sweep over the integer centres inside the placement prior box.
/// Each axis has floor(count / stride) cells.
Heatmap confidence_heatmap(const LogitsFn& f, const Tensor& image, const Tensor& patch, std::size_t target,
                           const HeatmapOptions& options);

std::string heatmap_csv(const Heatmap& map);

// ---------------------------------------------------------------- Grad-CAM

/// Heatmap mass inside the footprint divided by total mass; 0 when the map
/// has no mass.
double cam_overlap(const Tensor& cam, const std::vector<std::uint8_t>& footprint);

/// Grad-CAM of `cls` on `image`, scored against the footprint of a
/// side x side patch placed at theta.
double cam_overlap(const nets::Classifier& f, const Tensor& image, const overlay::PlacementParams& theta,
                   std::size_t side, std::size_t cls);

// --------------------------------------------------------------- aggregate

struct RunSummary {
  std::string method;
  std::size_t patch_size = 0;
  std::uint64_t seed = 0;
  bool success = false;
  std::size_t iterations = 0;
};

struct AggregateRow {
  std::string method;
  std::size_t patch_size = 0;
  std::size_t runs = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  /// Mean iterations over successful runs; empty when nothing succeeded.
  std::optional<double> mean_iterations;
};

struct AggregateTable {
  std::vector<AggregateRow> rows;  // sorted by method, then patch size
  std::string csv;
  std::string text;

  const AggregateRow* find(const std::string& method, std::size_t patch_size) const;
};

/// Rejects grids where some (method, size) cell is missing, a run is
/// duplicated, or cells were run over different seed sets.
AggregateTable aggregate_report(const std::vector<RunSummary>& runs);

RunSummary summarize(const attack::AttackReport& report, const std::string& method, std::size_t patch_size,
                     std::uint64_t seed);

}  // namespace madv::evalkit
