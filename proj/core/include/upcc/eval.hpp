#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "upcc/autoencoder.hpp"
#include "upcc/point_set.hpp"
#include "upcc/rng.hpp"

namespace upcc {

class CompletionPipeline;

inline constexpr double kDefaultMatchThreshold = 0.03;
inline constexpr std::size_t kDefaultOccupancyGrid = 32;

/// Percent of completion points within eps of some ground-truth point.
double accuracy(const PointSet& comp, const PointSet& gt, double eps = kDefaultMatchThreshold);
/// Percent of ground-truth points within eps of some completion point.
double completeness(const PointSet& comp, const PointSet& gt, double eps = kDefaultMatchThreshold);
/// Harmonic mean of two percentages; 0 when both are 0.
double f1(double acc, double comp);

struct ShapeMetrics {
  double accuracy = 0.0;
  double completeness = 0.0;
  double f1 = 0.0;
  double emd = 0.0;
  double chamfer = 0.0;
  double hausdorff_sym = 0.0;
  /// Directed Hausdorff input -> completion; only set when inputs are given.
  double hl = 0.0;
};

struct MetricsReport {
  double eps = kDefaultMatchThreshold;
  bool has_hl = false;
  std::vector<ShapeMetrics> rows;
  ShapeMetrics mean;
};

/// Per-shape metrics of completions against paired ground truth. `inputs`
/// may be empty; otherwise it pairs with the completions for the hl column.
MetricsReport evaluate(std::span<const PointSet> completions, std::span<const PointSet> gts,
                       double eps = kDefaultMatchThreshold, std::span<const PointSet> inputs = {});

/// Normalized point counts over a g^3 grid covering [-1, 1]^3.
struct OccupancyDistribution {
  std::size_t g = kDefaultOccupancyGrid;
  std::vector<double> p;
  /// Points that fell outside the cube and were clamped to the border cells.
  std::size_t clamped = 0;
};

OccupancyDistribution occupancy(std::span<const PointSet> clouds, std::size_t g = kDefaultOccupancyGrid);

/// Base-2 Jensen-Shannon divergence, in [0, 1].
double jsd(const OccupancyDistribution& a, const OccupancyDistribution& b);
/// Clamped points are reported on stderr.
double jsd(std::span<const PointSet> a, std::span<const PointSet> b,
           std::size_t g = kDefaultOccupancyGrid);

/// One ground-truth cloud picked uniformly, repeated |gt| times.
std::vector<PointSet> mode_collapse_reference(std::span<const PointSet> gt, Rng& rng);

/// Plausibility stand-in: nearest class centroid on latent codes.
class CentroidClassifier {
 public:
  void fit(std::span<const LatentCode> codes, std::span<const std::string> labels);
  std::string predict(const LatentCode& code) const;
  /// Fraction of codes whose predicted label matches.
  double score(std::span<const LatentCode> codes, std::span<const std::string> labels) const;
  std::size_t classes() const { return centroids_.size(); }

 private:
  std::map<std::string, std::vector<double>> centroids_;
};

struct SweepRow {
  double r = 0.0;
  double f1_ae = 0.0;
  double f1_ours = 0.0;
  double emd_ae = 0.0;
  double emd_ours = 0.0;
};

struct SweepInput {
  double r = 0.0;
  std::vector<PointSet> partials;
  std::vector<PointSet> gts;
};

/// F1 and EMD of the pipeline and of the autoencoder-only baseline for
/// each incompleteness level.
std::vector<SweepRow> incompleteness_sweep(CompletionPipeline& pipeline, Autoencoder& ae_baseline,
                                           std::span<const SweepInput> levels,
                                           double eps = kDefaultMatchThreshold);

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report);
void write_metrics_json(const std::filesystem::path& path, const MetricsReport& report);
void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows);

/// Fixed-format number used by every CSV writer, so reruns are byte-identical.
std::string format_number(double v);

}  // namespace upcc
