#include "upcc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

#include <json.hpp>

#include "upcc/distances.hpp"
#include "upcc/error.hpp"
#include "upcc/latent_gan.hpp"
#include "upcc/parallel.hpp"

namespace upcc {

namespace {

double within_percent(const PointSet& from, const PointSet& to, double eps) {
  if (from.size() == 0 || to.size() == 0) throw InvalidArgument("metric of an empty point set");
  if (!(eps >= 0.0)) throw InvalidArgument("match threshold must be non-negative");
  const auto d = nearest_distances(from, to);
  const auto hits = std::count_if(d.begin(), d.end(), [eps](double x) { return x <= eps; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(from.size());
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::size_t cell(double v, std::size_t g, bool& clamped) {
  double t = (v + 1.0) / 2.0 * static_cast<double>(g);
  if (t < 0.0 || t > static_cast<double>(g)) clamped = true;
  t = std::clamp(t, 0.0, static_cast<double>(g) - 1.0);
  return static_cast<std::size_t>(t);
}

}  // namespace

double accuracy(const PointSet& comp, const PointSet& gt, double eps) {
  return within_percent(comp, gt, eps);
}

double completeness(const PointSet& comp, const PointSet& gt, double eps) {
  return within_percent(gt, comp, eps);
}

double f1(double acc, double comp) {
  if (acc + comp <= 0.0) return 0.0;
  return 2.0 * acc * comp / (acc + comp);
}

MetricsReport evaluate(std::span<const PointSet> completions, std::span<const PointSet> gts,
                       double eps, std::span<const PointSet> inputs) {
  if (completions.size() != gts.size() || completions.empty()) {
    throw InvalidArgument("evaluate: completions and ground truth must pair up");
  }
  if (!inputs.empty() && inputs.size() != completions.size()) {
    throw InvalidArgument("evaluate: inputs must pair with completions");
  }
  MetricsReport report;
  report.eps = eps;
  report.has_hl = !inputs.empty();
  report.rows.resize(completions.size());
  parallel_for(completions.size(), [&](std::size_t i) {
    ShapeMetrics& m = report.rows[i];
    m.accuracy = accuracy(completions[i], gts[i], eps);
    m.completeness = completeness(completions[i], gts[i], eps);
    m.f1 = f1(m.accuracy, m.completeness);
    m.emd = completions[i].size() == gts[i].size() ? emd(completions[i], gts[i]).cost
                                                   : std::numeric_limits<double>::quiet_NaN();
    m.chamfer = chamfer(completions[i], gts[i]);
    m.hausdorff_sym = hausdorff_symmetric(completions[i], gts[i]);
    if (report.has_hl) m.hl = hausdorff_directed(inputs[i], completions[i]);
  });
  const double inv = 1.0 / static_cast<double>(report.rows.size());
  for (const auto& m : report.rows) {
    report.mean.accuracy += m.accuracy * inv;
    report.mean.completeness += m.completeness * inv;
    report.mean.f1 += m.f1 * inv;
    report.mean.emd += m.emd * inv;
    report.mean.chamfer += m.chamfer * inv;
    report.mean.hausdorff_sym += m.hausdorff_sym * inv;
    report.mean.hl += m.hl * inv;
  }
  return report;
}

OccupancyDistribution occupancy(std::span<const PointSet> clouds, std::size_t g) {
  if (clouds.empty()) throw InvalidArgument("occupancy of an empty collection");
  if (g == 0) throw InvalidArgument("occupancy grid must have at least one cell");
  OccupancyDistribution d;
  d.g = g;
  d.p.assign(g * g * g, 0.0);
  std::size_t total = 0;
  for (const auto& cloud : clouds) {
    for (const auto& v : cloud) {
      bool clamped = false;
      const std::size_t ix = cell(v.x, g, clamped), iy = cell(v.y, g, clamped), iz = cell(v.z, g, clamped);
      if (clamped) ++d.clamped;
      d.p[(ix * g + iy) * g + iz] += 1.0;
      ++total;
    }
  }
  if (total == 0) throw InvalidArgument("occupancy of empty clouds");
  for (auto& x : d.p) x /= static_cast<double>(total);
  return d;
}

double jsd(const OccupancyDistribution& a, const OccupancyDistribution& b) {
  if (a.g != b.g || a.p.size() != b.p.size()) throw InvalidArgument("jsd: grid sizes differ");
  double ka = 0.0, kb = 0.0;
  for (std::size_t i = 0; i < a.p.size(); ++i) {
    const double m = 0.5 * (a.p[i] + b.p[i]);
    if (a.p[i] > 0.0) ka += a.p[i] * std::log2(a.p[i] / m);
    if (b.p[i] > 0.0) kb += b.p[i] * std::log2(b.p[i] / m);
  }
  return std::clamp(0.5 * (ka + kb), 0.0, 1.0);
}

double jsd(std::span<const PointSet> a, std::span<const PointSet> b, std::size_t g) {
  const auto da = occupancy(a, g);
  const auto db = occupancy(b, g);
  if (da.clamped + db.clamped > 0) {
    std::cerr << "warning: " << da.clamped + db.clamped
              << " points outside [-1,1]^3 clamped into the occupancy grid\n";
  }
  return jsd(da, db);
}

std::vector<PointSet> mode_collapse_reference(std::span<const PointSet> gt, Rng& rng) {
  if (gt.empty()) throw InvalidArgument("mode_collapse_reference: empty collection");
  const PointSet& pick = gt[rng.below(gt.size())];
  return std::vector<PointSet>(gt.size(), pick);
}

void CentroidClassifier::fit(std::span<const LatentCode> codes, std::span<const std::string> labels) {
  if (codes.empty() || codes.size() != labels.size()) {
    throw InvalidArgument("classifier: codes and labels must pair up");
  }
  centroids_.clear();
  std::map<std::string, std::size_t> counts;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    auto& c = centroids_[labels[i]];
    if (c.empty()) c.assign(codes[i].values.size(), 0.0);
    if (c.size() != codes[i].values.size()) throw InvalidArgument("classifier: code widths differ");
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += codes[i].values[j];
    ++counts[labels[i]];
  }
  for (auto& [label, c] : centroids_) {
    for (auto& x : c) x /= static_cast<double>(counts[label]);
  }
}

std::string CentroidClassifier::predict(const LatentCode& code) const {
  if (centroids_.empty()) throw InvalidArgument("classifier: not fitted");
  std::string best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& [label, c] : centroids_) {
    if (c.size() != code.values.size()) throw InvalidArgument("classifier: code width mismatch");
    double d = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) d += (c[j] - code.values[j]) * (c[j] - code.values[j]);
    if (d < best_d) {
      best_d = d;
      best = label;
    }
  }
  return best;
}

double CentroidClassifier::score(std::span<const LatentCode> codes,
                                 std::span<const std::string> labels) const {
  if (codes.empty() || codes.size() != labels.size()) {
    throw InvalidArgument("classifier: codes and labels must pair up");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < codes.size(); ++i) hits += predict(codes[i]) == labels[i];
  return static_cast<double>(hits) / static_cast<double>(codes.size());
}

std::vector<SweepRow> incompleteness_sweep(CompletionPipeline& pipeline, Autoencoder& ae_baseline,
                                           std::span<const SweepInput> levels, double eps) {
  std::vector<SweepRow> rows;
  for (const auto& level : levels) {
    const auto ours = pipeline.complete(level.partials);
    const auto ae = autoencoder_baseline(ae_baseline, level.partials);
    const auto m_ours = evaluate(ours, level.gts, eps);
    const auto m_ae = evaluate(ae, level.gts, eps);
    rows.push_back({level.r, m_ae.mean.f1, m_ours.mean.f1, m_ae.mean.emd, m_ours.mean.emd});
  }
  return rows;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report) {
  auto out = open_out(path);
  out << "shape,accuracy,completeness,f1,emd,chamfer,hausdorff_sym" << (report.has_hl ? ",hl" : "") << "\n";
  auto row = [&](const std::string& name, const ShapeMetrics& m) {
    out << name << ',' << format_number(m.accuracy) << ',' << format_number(m.completeness) << ','
        << format_number(m.f1) << ',' << format_number(m.emd) << ',' << format_number(m.chamfer) << ','
        << format_number(m.hausdorff_sym);
    if (report.has_hl) out << ',' << format_number(m.hl);
    out << "\n";
  };
  for (std::size_t i = 0; i < report.rows.size(); ++i) row(std::to_string(i), report.rows[i]);
  row("mean", report.mean);
}

void write_metrics_json(const std::filesystem::path& path, const MetricsReport& report) {
  auto to_json = [&](const ShapeMetrics& m) {
    nlohmann::json j = {{"accuracy", m.accuracy}, {"completeness", m.completeness}, {"f1", m.f1},
                        {"emd", m.emd},           {"chamfer", m.chamfer},           {"hausdorff_sym", m.hausdorff_sym}};
    if (report.has_hl) j["hl"] = m.hl;
    return j;
  };
  nlohmann::json j;
  j["eps"] = report.eps;
  j["mean"] = to_json(report.mean);
  j["rows"] = nlohmann::json::array();
  for (const auto& m : report.rows) j["rows"].push_back(to_json(m));
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows) {
  auto out = open_out(path);
  out << "r,F1_AE,F1_ours,EMD_AE,EMD_ours\n";
  for (const auto& r : rows) {
    out << format_number(r.r) << ',' << format_number(r.f1_ae) << ',' << format_number(r.f1_ours) << ','
        << format_number(r.emd_ae) << ',' << format_number(r.emd_ours) << "\n";
  }
}

}  // namespace upcc
