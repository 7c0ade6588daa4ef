#include "upcc/scan_synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "upcc/error.hpp"
#include "upcc/parallel.hpp"
#include "upcc/point_io.hpp"

namespace upcc {

namespace {

using nlohmann::json;

struct FamilyInfo {
  ShapeFamily family;
  const char* name;
  std::map<std::string, ParamRange> ranges;
};

const std::vector<FamilyInfo>& family_table() {
  static const std::vector<FamilyInfo> table = {
      {ShapeFamily::Box, "box", {{"hx", {0.2, 1.0}}, {"hy", {0.2, 1.0}}, {"hz", {0.2, 1.0}}}},
      {ShapeFamily::Cylinder, "cylinder", {{"radius", {0.2, 0.6}}, {"height", {0.4, 1.6}}}},
      {ShapeFamily::Ellipsoid, "ellipsoid", {{"rx", {0.3, 1.0}}, {"ry", {0.3, 1.0}}, {"rz", {0.3, 1.0}}}},
      {ShapeFamily::Table4,
       "table4",
       {{"top_w", {0.5, 1.0}},
        {"top_d", {0.35, 0.8}},
        {"top_t", {0.02, 0.06}},
        {"height", {0.5, 1.0}},
        {"leg_w", {0.03, 0.07}},
        {"leg_inset", {0.0, 0.1}}}},
      {ShapeFamily::Chair5,
       "chair5",
       {{"seat_w", {0.35, 0.6}},
        {"seat_d", {0.35, 0.6}},
        {"seat_t", {0.02, 0.06}},
        {"seat_h", {0.35, 0.6}},
        {"back_h", {0.35, 0.8}},
        {"back_t", {0.02, 0.06}},
        {"leg_w", {0.025, 0.06}}}},
      {ShapeFamily::Lampoid,
       "lampoid",
       {{"base_r", {0.15, 0.35}},
        {"base_h", {0.02, 0.08}},
        {"pole_h", {0.6, 1.4}},
        {"pole_r", {0.015, 0.04}},
        {"shade_bottom_r", {0.25, 0.5}},
        {"shade_top_r", {0.08, 0.22}},
        {"shade_h", {0.2, 0.45}}}},
  };
  return table;
}

const FamilyInfo& info(ShapeFamily f) {
  for (const auto& fi : family_table()) {
    if (fi.family == f) return fi;
  }
  throw InvalidArgument("unknown shape family");
}

// Independent stream ids for everything derived from the master seed.
std::uint64_t stream_id(std::size_t instance, std::uint64_t purpose) {
  return (static_cast<std::uint64_t>(instance) << 8) | purpose;
}

constexpr std::uint64_t kGenerate = 1;
constexpr std::uint64_t kCorruptTrain = 2;
constexpr std::uint64_t kCorruptTest = 3;
constexpr std::uint64_t kCorruptSweep = 16;  // + sweep index
constexpr std::uint64_t kSplit = 0xFF;

}  // namespace

std::string to_string(ShapeFamily f) { return info(f).name; }

ShapeFamily family_from_string(const std::string& s) {
  for (const auto& fi : family_table()) {
    if (s == fi.name) return fi.family;
  }
  throw InvalidArgument("unknown shape family '" + s + "'");
}

const std::vector<ShapeFamily>& all_families() {
  static const std::vector<ShapeFamily> fams = {ShapeFamily::Box,    ShapeFamily::Cylinder,
                                                ShapeFamily::Ellipsoid, ShapeFamily::Table4,
                                                ShapeFamily::Chair5, ShapeFamily::Lampoid};
  return fams;
}

const std::map<std::string, ParamRange>& parameter_ranges(ShapeFamily family) {
  return info(family).ranges;
}

ShapeParams sample_params(ShapeFamily family, Rng& rng) {
  ShapeParams p{family, {}};
  for (const auto& [name, range] : parameter_ranges(family)) {
    p.values[name] = rng.uniform(range.lo, range.hi);
  }
  return p;
}

void validate(const ShapeParams& params) {
  const auto& ranges = parameter_ranges(params.family);
  for (const auto& [name, value] : params.values) {
    auto it = ranges.find(name);
    if (it == ranges.end()) {
      throw InvalidArgument(to_string(params.family) + ": unknown parameter '" + name + "'");
    }
    if (!(value >= it->second.lo && value <= it->second.hi)) {
      throw InvalidArgument(to_string(params.family) + ": parameter '" + name + "' = " +
                            std::to_string(value) + " outside [" + std::to_string(it->second.lo) +
                            ", " + std::to_string(it->second.hi) + "]");
    }
  }
  for (const auto& [name, range] : ranges) {
    if (!params.values.count(name)) {
      throw InvalidArgument(to_string(params.family) + ": missing parameter '" + name + "'");
    }
  }
}

Mesh build_mesh(const ShapeParams& params) {
  validate(params);
  const auto& v = params.values;
  auto g = [&](const char* key) { return v.at(key); };
  Mesh mesh;
  switch (params.family) {
    case ShapeFamily::Box:
      add_box(mesh, {0, 0, 0}, {g("hx"), g("hy"), g("hz")});
      break;
    case ShapeFamily::Cylinder:
      add_frustum(mesh, {0, 0, 0}, g("radius"), g("radius"), g("height"));
      break;
    case ShapeFamily::Ellipsoid:
      add_ellipsoid(mesh, {0, 0, 0}, {g("rx"), g("ry"), g("rz")});
      break;
    case ShapeFamily::Table4: {
      const double w = g("top_w"), d = g("top_d"), t = g("top_t"), h = g("height");
      const double leg = g("leg_w"), inset = g("leg_inset");
      add_box(mesh, {0, h - t, 0}, {w, t, d});
      const double leg_half_h = (h - 2 * t) / 2;
      for (double sx : {-1.0, 1.0}) {
        for (double sz : {-1.0, 1.0}) {
          add_box(mesh, {sx * (w - inset - leg), leg_half_h, sz * (d - inset - leg)},
                  {leg, leg_half_h, leg});
        }
      }
      break;
    }
    case ShapeFamily::Chair5: {
      const double w = g("seat_w"), d = g("seat_d"), t = g("seat_t"), h = g("seat_h");
      const double bh = g("back_h"), bt = g("back_t"), leg = g("leg_w");
      add_box(mesh, {0, h - t, 0}, {w, t, d});
      add_box(mesh, {0, h + bh / 2, -d + bt}, {w, bh / 2, bt});
      const double leg_half_h = (h - 2 * t) / 2;
      for (double sx : {-1.0, 1.0}) {
        for (double sz : {-1.0, 1.0}) {
          add_box(mesh, {sx * (w - leg), leg_half_h, sz * (d - leg)}, {leg, leg_half_h, leg});
        }
      }
      break;
    }
    case ShapeFamily::Lampoid: {
      const double bh = g("base_h"), ph = g("pole_h"), sh = g("shade_h");
      add_frustum(mesh, {0, 0, 0}, g("base_r"), g("base_r"), bh);
      add_frustum(mesh, {0, bh, 0}, g("pole_r"), g("pole_r"), ph, 12);
      add_frustum(mesh, {0, bh + ph - 0.5 * sh, 0}, g("shade_bottom_r"), g("shade_top_r"), sh, 24,
                  false);
      break;
    }
  }
  return mesh;
}

std::vector<Camera> cube_corner_rig() {
  std::vector<Camera> rig;
  const double s = 1.0 / std::sqrt(3.0);
  for (double x : {-s, s}) {
    for (double y : {-s, s}) {
      for (double z : {-s, s}) rig.push_back({{x, y, z}});
    }
  }
  return rig;
}

PointSet virtual_scan(const Mesh& mesh, const std::vector<Camera>& cameras,
                      std::size_t resolution) {
  if (cameras.empty()) throw InvalidArgument("virtual_scan: no cameras");
  if (resolution == 0) throw InvalidArgument("virtual_scan: resolution must be positive");
  if (mesh.size() == 0) throw InvalidArgument("virtual_scan: empty mesh");
  const Aabb box = mesh.bounds();
  const Vec3 center = (box.lo + box.hi) * 0.5;
  const double radius = 1.02 * norm(box.hi - box.lo) * 0.5;
  std::vector<Vec3> hits;
  for (const auto& cam : cameras) {
    const Vec3 d = normalized(cam.direction);
    const Vec3 helper = std::abs(d.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
    const Vec3 u = normalized(cross(d, helper));
    const Vec3 v = cross(d, u);
    const double cell = 2.0 * radius / static_cast<double>(resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
      for (std::size_t j = 0; j < resolution; ++j) {
        const double a = -radius + (static_cast<double>(i) + 0.5) * cell;
        const double b = -radius + (static_cast<double>(j) + 0.5) * cell;
        const Ray ray{center + d * (3.0 * radius) + u * a + v * b, -d};
        if (auto t = mesh.first_hit(ray)) hits.push_back(ray.origin + ray.direction * *t);
      }
    }
  }
  if (hits.empty()) throw InvalidArgument("shape outside all frusta");
  return PointSet(std::move(hits));
}

GeneratedShape generate_shape(const ShapeParams& params, std::size_t n, Rng& rng,
                              std::size_t scan_resolution) {
  if (n < 8) throw InvalidArgument("generate_shape: n must be at least 8");
  Mesh mesh = build_mesh(params);
  const PointSet dense = virtual_scan(mesh, cube_corner_rig(), scan_resolution);
  if (dense.size() < n) {
    throw InvalidArgument("generate_shape: scan produced " + std::to_string(dense.size()) +
                          " points, fewer than n=" + std::to_string(n));
  }
  PointSet cloud = downsample(dense, n, rng);
  // Two passes, mirroring normalize_unit_sphere, applied to mesh and cloud alike.
  for (int pass = 0; pass < 2; ++pass) {
    const Normalization t = unit_sphere_transform(cloud);
    cloud = apply(t, cloud);
    mesh = mesh.transformed(t);
  }
  return {std::move(mesh), std::move(cloud)};
}

std::size_t removal_count(std::size_t n, double r) {
  if (!(r >= 0.0 && r < 1.0)) throw InvalidArgument("incompleteness r must lie in [0, 1)");
  // The small bias absorbs products such as 100 * 0.29 = 28.999999999999996.
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 1e-9));
}

Corruption corrupt_at(const PointSet& clean, const CorruptionSpec& spec, std::size_t picked,
                      Rng& rng) {
  const std::size_t n = clean.size();
  if (spec.sigma < 0.0) throw InvalidArgument("corrupt: sigma must be non-negative");
  const std::size_t remove = removal_count(n, spec.r);
  if (remove >= n) throw InvalidArgument("corrupt: r removes every point");
  if (picked >= n) throw InvalidArgument("corrupt: picked index out of range");
  std::vector<char> removed(n, 0);
  if (remove > 0) {
    for (auto i : nearest_neighbors(clean, clean[picked], remove)) removed[i] = 1;
  }
  Corruption out;
  out.picked = picked;
  std::vector<Vec3> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (removed[i]) continue;
    out.survivors.push_back(i);
    Vec3 p = clean[i];
    if (spec.sigma > 0.0) {
      p.x += rng.normal(0.0, spec.sigma);
      p.y += rng.normal(0.0, spec.sigma);
      p.z += rng.normal(0.0, spec.sigma);
    }
    kept.push_back(p);
  }
  out.partial = duplicate_to_count(PointSet(std::move(kept)), n, rng);
  return out;
}

PointSet corrupt(const PointSet& clean, const CorruptionSpec& spec) {
  Rng rng(spec.seed);
  const std::size_t picked = rng.below(clean.size());
  return corrupt_at(clean, spec, picked, rng).partial;
}

std::vector<PointSet> Dataset::clouds(const std::vector<DatasetItem>& items) const {
  std::vector<PointSet> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.cloud);
  return out;
}

std::string r_label(double r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "r%.2f", r);
  return buf;
}

Dataset make_dataset(const DatasetConfig& cfg) {
  if (cfg.families.empty()) throw InvalidArgument("make_dataset: family list is empty");
  if (cfg.shapes_per_family == 0) throw InvalidArgument("make_dataset: no shapes requested");
  if (!(cfg.test_fraction >= 0.0 && cfg.test_fraction < 1.0)) {
    throw InvalidArgument("make_dataset: test fraction must lie in [0, 1)");
  }
  if (!(cfg.r_train_min <= cfg.r_train_max)) {
    throw InvalidArgument("make_dataset: r_train_min exceeds r_train_max");
  }
  removal_count(cfg.n, cfg.r_train_max);
  removal_count(cfg.n, cfg.r_test);
  for (double r : cfg.sweep_r) removal_count(cfg.n, r);

  const Rng master(cfg.seed);
  const std::size_t count = cfg.shapes_per_family;
  const auto test_count =
      static_cast<std::size_t>(std::llround(static_cast<double>(count) * cfg.test_fraction));
  const std::size_t train_count = count - test_count;
  const std::size_t per_family = count + train_count;

  struct Job {
    std::size_t instance;
    ShapeFamily family;
    bool partial;
  };
  std::vector<Job> jobs;
  for (std::size_t f = 0; f < cfg.families.size(); ++f) {
    for (std::size_t j = 0; j < per_family; ++j) {
      jobs.push_back({f * per_family + j, cfg.families[f], j >= count});
    }
  }

  struct Built {
    DatasetItem item;
    PointSet source;  // clean cloud, for partial jobs
  };
  std::vector<Built> built(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const Job& job = jobs[i];
    Rng rng = master.fork(stream_id(job.instance, kGenerate));
    DatasetItem item;
    item.instance = job.instance;
    item.params = sample_params(job.family, rng);
    item.seed = rng.seed();
    auto shape = generate_shape(item.params, cfg.n, rng, cfg.scan_resolution);
    if (!job.partial) {
      item.cloud = std::move(shape.cloud);
      built[i] = {std::move(item), {}};
      return;
    }
    Rng crng = master.fork(stream_id(job.instance, kCorruptTrain));
    CorruptionSpec spec{crng.uniform(cfg.r_train_min, cfg.r_train_max), cfg.sigma, crng.next_u64()};
    item.r = spec.r;
    item.seed = spec.seed;
    item.cloud = corrupt(shape.cloud, spec);
    built[i] = {std::move(item), std::move(shape.cloud)};
  });

  Dataset ds;
  for (std::size_t f = 0; f < cfg.families.size(); ++f) {
    const std::size_t base = f * per_family;
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), base);
    Rng split_rng = master.fork(stream_id(f, kSplit));
    split_rng.shuffle(order.begin(), order.end());
    std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_count));
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(test_count), order.end());
    for (std::size_t j = 0; j < count; ++j) {
      auto& dest = j < test_count ? ds.clean_test : ds.clean_train;
      dest.push_back(built[order[j]].item);
    }
    for (std::size_t j = count; j < per_family; ++j) {
      ds.partial_train.push_back(built[base + j].item);
      ds.partial_train_gt.push_back(built[base + j].source);
    }
  }

  auto corrupt_test = [&](double r, std::uint64_t purpose) {
    std::vector<DatasetItem> out(ds.clean_test.size());
    parallel_for(out.size(), [&](std::size_t i) {
      const auto& gt = ds.clean_test[i];
      Rng crng = master.fork(stream_id(gt.instance, purpose));
      CorruptionSpec spec{r, cfg.sigma, crng.next_u64()};
      out[i] = {gt.instance, gt.params, corrupt(gt.cloud, spec), r, spec.seed};
    });
    return out;
  };
  ds.partial_test = corrupt_test(cfg.r_test, kCorruptTest);
  for (std::size_t s = 0; s < cfg.sweep_r.size(); ++s) {
    ds.partial_test_sweep[r_label(cfg.sweep_r[s])] = corrupt_test(cfg.sweep_r[s], kCorruptSweep + s);
  }
  return ds;
}

namespace {

json item_json(const DatasetItem& it, const std::string& file) {
  return {{"instance", it.instance}, {"family", to_string(it.params.family)},
          {"params", it.params.values}, {"seed", it.seed},
          {"r", it.r},               {"file", file}};
}

std::string item_file(const std::string& split, const DatasetItem& it) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu.ply", it.instance);
  return split + "/" + buf;
}

DatasetItem item_from_json(const json& j, const std::filesystem::path& dir) {
  DatasetItem it;
  it.instance = j.at("instance").get<std::size_t>();
  it.params.family = family_from_string(j.at("family").get<std::string>());
  it.params.values = j.at("params").get<std::map<std::string, double>>();
  it.seed = j.at("seed").get<std::uint64_t>();
  it.r = j.at("r").get<double>();
  it.cloud = read_ply(dir / j.at("file").get<std::string>());
  return it;
}

json config_json(const DatasetConfig& cfg) {
  std::vector<std::string> fams;
  for (auto f : cfg.families) fams.push_back(to_string(f));
  return {{"families", fams},
          {"n", cfg.n},
          {"shapes_per_family", cfg.shapes_per_family},
          {"test_fraction", cfg.test_fraction},
          {"sigma", cfg.sigma},
          {"r_train_min", cfg.r_train_min},
          {"r_train_max", cfg.r_train_max},
          {"r_test", cfg.r_test},
          {"sweep_r", cfg.sweep_r},
          {"scan_resolution", cfg.scan_resolution},
          {"seed", cfg.seed}};
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const Dataset& ds, const DatasetConfig& cfg) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["schema"] = "upcc-dataset";
  manifest["version"] = 1;
  manifest["config"] = config_json(cfg);
  auto write_split = [&](const std::string& name, const std::vector<DatasetItem>& items) {
    json arr = json::array();
    for (const auto& it : items) {
      const auto file = item_file(name, it);
      write_ply(dir / file, it.cloud);
      arr.push_back(item_json(it, file));
    }
    manifest["splits"][name] = arr;
  };
  write_split("clean_train", ds.clean_train);
  write_split("clean_test", ds.clean_test);
  write_split("partial_test", ds.partial_test);
  write_split("partial_train", ds.partial_train);
  for (std::size_t i = 0; i < ds.partial_train.size(); ++i) {
    const auto file = item_file("partial_train_gt", ds.partial_train[i]);
    write_ply(dir / file, ds.partial_train_gt[i]);
    manifest["splits"]["partial_train"][i]["gt_file"] = file;
  }
  for (const auto& [label, items] : ds.partial_test_sweep) {
    write_split("partial_test_" + label, items);
  }
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw Error("cannot write dataset manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json", std::ios::binary);
  if (!in) throw Error("missing dataset manifest " + (dir / "manifest.json").string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw Error("unreadable dataset manifest: " + std::string(e.what()));
  }
  Dataset ds;
  try {
    const auto& splits = manifest.at("splits");
    auto read_split = [&](const std::string& name) {
      std::vector<DatasetItem> items;
      for (const auto& j : splits.at(name)) items.push_back(item_from_json(j, dir));
      return items;
    };
    ds.clean_train = read_split("clean_train");
    ds.clean_test = read_split("clean_test");
    ds.partial_test = read_split("partial_test");
    ds.partial_train = read_split("partial_train");
    for (const auto& j : splits.at("partial_train")) {
      ds.partial_train_gt.push_back(read_ply(dir / j.at("gt_file").get<std::string>()));
    }
    for (const auto& [name, arr] : splits.items()) {
      const std::string prefix = "partial_test_";
      if (name.rfind(prefix, 0) == 0) ds.partial_test_sweep[name.substr(prefix.size())] = read_split(name);
    }
  } catch (const json::exception& e) {
    throw Error("malformed dataset manifest: " + std::string(e.what()));
  }
  return ds;
}

}  // namespace upcc
