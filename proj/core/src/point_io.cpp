#include "upcc/point_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "upcc/error.hpp"

namespace upcc {

namespace {

std::string format_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(static_cast<float>(v)));
  return buf;
}

// Coordinates are stored as float32; rounding on read makes write/read exact.
bool parse_coordinate(const std::string& token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) return false;
  out = static_cast<double>(static_cast<float>(out));
  return true;
}

std::vector<std::string> split(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedPly("cannot open " + path.string());
  return in;
}

}  // namespace

void write_ply(std::ostream& out, const PointSet& set) {
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << set.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\nend_header\n";
  for (const auto& p : set) {
    out << format_float(p.x) << ' ' << format_float(p.y) << ' ' << format_float(p.z) << '\n';
  }
}

void write_ply(const std::filesystem::path& path, const PointSet& set) {
  auto out = open_out(path);
  write_ply(out, set);
}

PointSet read_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
    throw MalformedPly("missing 'ply' magic");
  }
  bool ascii = false;
  bool in_vertex = false;
  bool seen_vertex = false;
  std::size_t n_vertex = 0;
  std::vector<std::string> props;
  while (true) {
    if (!std::getline(in, line)) throw MalformedPly("unterminated header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto tok = split(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii") {
        throw MalformedPly("unsupported PLY format '" + (tok.size() > 1 ? tok[1] : "") + "'");
      }
      ascii = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw MalformedPly("bad element line: " + line);
      in_vertex = tok[1] == "vertex";
      if (in_vertex) {
        if (seen_vertex) throw MalformedPly("duplicate vertex element");
        seen_vertex = true;
        try {
          n_vertex = std::stoull(tok[2]);
        } catch (const std::exception&) {
          throw MalformedPly("bad vertex count: " + tok[2]);
        }
      } else if (!seen_vertex) {
        throw MalformedPly("elements before vertex are not supported");
      }
    } else if (tok[0] == "property") {
      if (in_vertex) {
        if (tok.size() != 3 || tok[1] == "list") throw MalformedPly("unsupported vertex property");
        props.push_back(tok[2]);
      }
    } else {
      throw MalformedPly("unknown header keyword '" + tok[0] + "'");
    }
  }
  if (!ascii) throw MalformedPly("missing format line");
  if (!seen_vertex) throw MalformedPly("missing vertex element");
  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (props[i] == "x") ix = static_cast<int>(i);
    if (props[i] == "y") iy = static_cast<int>(i);
    if (props[i] == "z") iz = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw MalformedPly("vertex element lacks x, y, z");
  std::vector<Vec3> pts;
  pts.reserve(n_vertex);
  for (std::size_t v = 0; v < n_vertex; ++v) {
    if (!std::getline(in, line)) throw MalformedPly("truncated vertex data");
    auto tok = split(line);
    if (tok.size() < props.size()) throw MalformedPly("short vertex row " + std::to_string(v));
    Vec3 p;
    if (!parse_coordinate(tok[ix], p.x) || !parse_coordinate(tok[iy], p.y) ||
        !parse_coordinate(tok[iz], p.z)) {
      throw MalformedPly("bad number in vertex row " + std::to_string(v));
    }
    pts.push_back(p);
  }
  if (pts.empty()) throw MalformedPly("PLY has no vertices");
  try {
    return PointSet(std::move(pts));
  } catch (const InvalidArgument& e) {
    throw MalformedPly(e.what());
  }
}

PointSet read_ply(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_ply(in);
  } catch (const MalformedPly& e) {
    throw MalformedPly(path.string() + ": " + e.what());
  }
}

void write_xyz(std::ostream& out, const PointSet& set) {
  for (const auto& p : set) {
    out << format_float(p.x) << ' ' << format_float(p.y) << ' ' << format_float(p.z) << '\n';
  }
}

void write_xyz(const std::filesystem::path& path, const PointSet& set) {
  auto out = open_out(path);
  write_xyz(out, set);
}

PointSet read_xyz(std::istream& in) {
  std::vector<Vec3> pts;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    auto tok = split(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    Vec3 p;
    if (tok.size() < 3 || !parse_coordinate(tok[0], p.x) || !parse_coordinate(tok[1], p.y) ||
        !parse_coordinate(tok[2], p.z)) {
      throw MalformedPly("bad xyz row " + std::to_string(row));
    }
    pts.push_back(p);
  }
  if (pts.empty()) throw MalformedPly("xyz file has no points");
  try {
    return PointSet(std::move(pts));
  } catch (const InvalidArgument& e) {
    throw MalformedPly(e.what());
  }
}

PointSet read_xyz(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_xyz(in);
}

PointSet read_points(const std::filesystem::path& path) {
  return path.extension() == ".xyz" ? read_xyz(path) : read_ply(path);
}

void write_points(const std::filesystem::path& path, const PointSet& set) {
  if (path.extension() == ".xyz") {
    write_xyz(path, set);
  } else {
    write_ply(path, set);
  }
}

PointSet quantize_float32(const PointSet& set) {
  std::vector<Vec3> out(set.begin(), set.end());
  for (auto& p : out) {
    p = {static_cast<float>(p.x), static_cast<float>(p.y), static_cast<float>(p.z)};
  }
  return PointSet(std::move(out));
}

}  // namespace upcc
