#include "madv/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "madv/ops.hpp"

namespace madv::evalkit {

LogitsFn logits_of(const nets::Network& f) {
  return [&f](const Tensor& x) { return f.infer(x).values(); };
}

double target_confidence(const LogitsFn& f, const Tensor& input, std::size_t target) {
  const auto logits = f(input);
  if (target >= logits.size()) throw std::out_of_range("target class outside the logit vector");
  return softmax(logits)[target];
}

std::vector<RelocationCase> relocation_cases(const std::vector<attack::AdversarialRecord>& records,
                                             const Tensor& base, const std::string& group) {
  std::vector<RelocationCase> out;
  for (const auto& r : records) {
    if (!std::holds_alternative<overlay::PlacementParams>(r.placement)) {
      throw std::invalid_argument("relocation applies to image patches only");
    }
    out.push_back({r.patch, base, r.target, group});
  }
  return out;
}

const RobustnessGroup* RobustnessReport::group(const std::string& name) const {
  for (const auto& g : groups) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

RobustnessReport relocation_test(const LogitsFn& f, const std::vector<RelocationCase>& cases, std::size_t n,
                                 Rng& rng) {
  if (cases.empty()) throw std::invalid_argument("relocation_test needs at least one record");
  if (n == 0) throw std::invalid_argument("relocation_test needs n >= 1");
  RobustnessReport report;
  report.trials_per_record = n;
  std::size_t total = 0;
  for (const auto& c : cases) {
    const auto prior = overlay::PlacementPrior::for_patch(c.patch.dim(1), c.base.dim(1), c.base.dim(2));
    std::size_t hits = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const Tensor composite = overlay::apply_patch(c.patch, c.base, overlay::sample_theta(prior, rng));
      hits += argmax(f(composite)) == c.target ? 1 : 0;
    }
    report.successes.push_back(hits);
    total += hits;

    auto it = std::find_if(report.groups.begin(), report.groups.end(),
                           [&](const RobustnessGroup& g) { return g.name == c.group; });
    if (it == report.groups.end()) {
      report.groups.push_back({c.group});
      it = std::prev(report.groups.end());
    }
    it->records += 1;
    it->successes += hits;
    it->trials += n;
  }
  for (auto& g : report.groups) g.rate = static_cast<double>(g.successes) / static_cast<double>(g.trials);
  report.rate = static_cast<double>(total) / static_cast<double>(n * cases.size());
  return report;
}

std::pair<std::size_t, std::size_t> Heatmap::cell_of(double cx, double cy) const {
  auto index = [this](double v, double origin, std::size_t count) {
    const double k = std::round((v - origin) / static_cast<double>(stride));
    return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(count - 1)));
  };
  return {index(cy, y0, rows), index(cx, x0, cols)};
}

double Heatmap::percentile_rank(double v) const {
  const auto below = std::count_if(values.begin(), values.end(), [v](double x) { return x <= v; });
  return static_cast<double>(below) / static_cast<double>(values.size());
}

Tensor Heatmap::to_tensor() const { return Tensor(Shape{rows, cols}, values); }

Heatmap confidence_heatmap(const LogitsFn& f, const Tensor& image, const Tensor& patch, std::size_t target,
                           const HeatmapOptions& options) {
  if (options.stride == 0) throw std::invalid_argument("heatmap stride must be >= 1");
  if (image.rank() != 3 || patch.rank() != 3) throw std::invalid_argument("heatmap expects [c,H,W] image and patch");
  const auto prior = overlay::PlacementPrior::for_patch(patch.dim(1), image.dim(1), image.dim(2));
  const double x_lo = std::ceil(prior.cx_lo), x_hi = std::floor(prior.cx_hi);
  const double y_lo = std::ceil(prior.cy_lo), y_hi = std::floor(prior.cy_hi);
  const auto count = [](double lo, double hi) { return hi < lo ? 0 : static_cast<std::size_t>(hi - lo) + 1; };

  Heatmap map;
  map.stride = options.stride;
  map.cols = count(x_lo, x_hi) / options.stride;
  map.rows = count(y_lo, y_hi) / options.stride;
  map.x0 = x_lo;
  map.y0 = y_lo;
  map.patch_id = options.patch_id;
  if (map.rows == 0 || map.cols == 0) throw std::invalid_argument("heatmap stride exceeds the valid centre range");

  std::vector<double> angles{options.phi};
  if (options.sweep_rotations) angles = {0.0, std::numbers::pi / 2.0, std::numbers::pi, 3.0 * std::numbers::pi / 2.0};
  map.values.assign(map.rows * map.cols, 0.0);
  for (std::size_t r = 0; r < map.rows; ++r) {
    for (std::size_t c = 0; c < map.cols; ++c) {
      const double cx = map.x0 + static_cast<double>(c * map.stride);
      const double cy = map.y0 + static_cast<double>(r * map.stride);
      double best = 0.0;
      for (double phi : angles) {
        const Tensor composite = overlay::apply_patch(patch, image, {cx, cy, phi});
        best = std::max(best, target_confidence(f, composite, target));
      }
      map.values[r * map.cols + c] = best;
    }
  }
  return map;
}

std::string heatmap_csv(const Heatmap& map) {
  std::ostringstream out;
  out.precision(9);
  out << "row,col,cx,cy,confidence\n";
  for (std::size_t r = 0; r < map.rows; ++r) {
    for (std::size_t c = 0; c < map.cols; ++c) {
      out << r << ',' << c << ',' << map.x0 + static_cast<double>(c * map.stride) << ','
          << map.y0 + static_cast<double>(r * map.stride) << ',' << map.at(r, c) << '\n';
    }
  }
  return out.str();
}

double cam_overlap(const Tensor& cam, const std::vector<std::uint8_t>& footprint) {
  if (cam.size() != footprint.size()) throw std::invalid_argument("cam_overlap: footprint size mismatch");
  double inside = 0.0, total = 0.0;
  for (std::size_t i = 0; i < cam.size(); ++i) {
    const double v = std::max(cam[i], 0.0);
    total += v;
    if (footprint[i]) inside += v;
  }
  return total > 0.0 ? inside / total : 0.0;
}

double cam_overlap(const nets::Classifier& f, const Tensor& image, const overlay::PlacementParams& theta,
                   std::size_t side, std::size_t cls) {
  const Tensor cam = nets::grad_cam(f, image, cls);
  return cam_overlap(cam, overlay::footprint_mask(side, image.dim(1), image.dim(2), theta));
}

const AggregateRow* AggregateTable::find(const std::string& method, std::size_t patch_size) const {
  for (const auto& r : rows) {
    if (r.method == method && r.patch_size == patch_size) return &r;
  }
  return nullptr;
}

AggregateTable aggregate_report(const std::vector<RunSummary>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate_report needs at least one run");
  std::map<std::pair<std::string, std::size_t>, std::vector<const RunSummary*>> cells;
  std::set<std::string> methods;
  std::set<std::size_t> sizes;
  for (const auto& r : runs) {
    cells[{r.method, r.patch_size}].push_back(&r);
    methods.insert(r.method);
    sizes.insert(r.patch_size);
  }
  std::optional<std::set<std::uint64_t>> seeds;
  for (const auto& m : methods) {
    for (auto s : sizes) {
      auto it = cells.find({m, s});
      if (it == cells.end()) {
        throw std::invalid_argument("inconsistent grid: no runs for method " + m + " at size " + std::to_string(s));
      }
      std::set<std::uint64_t> cell_seeds;
      for (const auto* r : it->second) {
        if (!cell_seeds.insert(r->seed).second) {
          throw std::invalid_argument("inconsistent grid: duplicate seed " + std::to_string(r->seed) + " for " + m +
                                      " at size " + std::to_string(s));
        }
      }
      if (seeds && *seeds != cell_seeds) {
        throw std::invalid_argument("inconsistent grid: cell " + m + "/" + std::to_string(s) +
                                    " uses a different seed set");
      }
      seeds = cell_seeds;
    }
  }

  AggregateTable table;
  std::ostringstream csv, text;
  csv.precision(9);
  csv << "method,patch_size,runs,successes,success_rate,mean_iterations\n";
  text << "method  size  runs  success  rate    mean_iter\n";
  for (const auto& [key, list] : cells) {
    AggregateRow row;
    row.method = key.first;
    row.patch_size = key.second;
    row.runs = list.size();
    double iters = 0.0;
    for (const auto* r : list) {
      if (!r->success) continue;
      ++row.successes;
      iters += static_cast<double>(r->iterations);
    }
    row.success_rate = static_cast<double>(row.successes) / static_cast<double>(row.runs);
    if (row.successes > 0) row.mean_iterations = iters / static_cast<double>(row.successes);

    csv << row.method << ',' << row.patch_size << ',' << row.runs << ',' << row.successes << ','
        << row.success_rate << ',';
    if (row.mean_iterations) {
      csv << *row.mean_iterations;
    } else {
      csv << "NA";
    }
    csv << '\n';

    char line[128];
    if (row.mean_iterations) {
      std::snprintf(line, sizeof line, "%-7s %4zu  %4zu  %7zu  %.3f  %9.1f\n", row.method.c_str(), row.patch_size,
                    row.runs, row.successes, row.success_rate, *row.mean_iterations);
    } else {
      std::snprintf(line, sizeof line, "%-7s %4zu  %4zu  %7zu  %.3f  %9s\n", row.method.c_str(), row.patch_size,
                    row.runs, row.successes, row.success_rate, "n/a");
    }
    text << line;
    table.rows.push_back(std::move(row));
  }
  table.csv = csv.str();
  table.text = text.str();
  return table;
}

RunSummary summarize(const attack::AttackReport& report, const std::string& method, std::size_t patch_size,
                     std::uint64_t seed) {
  return {method, patch_size, seed, report.success, report.iterations};
}

}  // namespace madv::evalkit
