#pragma once

#include <filesystem>
#include <iosfwd>

#include "upcc/point_set.hpp"

namespace upcc {

/// ASCII PLY with a single `element vertex n` and float x, y, z properties.
/// Coordinates are written with float32 precision. The reader accepts extra
/// vertex properties (ignored) and other elements after the vertices.
void write_ply(std::ostream& out, const PointSet& set);
void write_ply(const std::filesystem::path& path, const PointSet& set);
PointSet read_ply(std::istream& in);
PointSet read_ply(const std::filesystem::path& path);

/// Whitespace-separated "x y z" lines.
void write_xyz(std::ostream& out, const PointSet& set);
void write_xyz(const std::filesystem::path& path, const PointSet& set);
PointSet read_xyz(std::istream& in);
PointSet read_xyz(const std::filesystem::path& path);

/// Dispatches on extension (.ply or .xyz).
PointSet read_points(const std::filesystem::path& path);
void write_points(const std::filesystem::path& path, const PointSet& set);

/// Rounds every coordinate through float32, i.e. the value a PLY round trip
/// produces.
PointSet quantize_float32(const PointSet& set);

}  // namespace upcc
