#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hoigen/core/math.hpp"

namespace hoigen::geometry {

/// Immutable triangle mesh. Degenerate (zero-area) triangles are dropped at construction and
/// watertightness (every edge shared by exactly two triangles) is determined once.
class TriangleMesh {
 public:
  TriangleMesh() = default;
  /// Throws ValidationError on out-of-range indices or non-finite vertices.
  TriangleMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  bool empty() const { return triangles_.empty(); }
  bool watertight() const { return watertight_; }
  std::size_t dropped_degenerate() const { return dropped_; }

  Vec3 bbox_min() const { return bbox_min_; }
  Vec3 bbox_max() const { return bbox_max_; }
  /// The 8 corners of the axis-aligned bounding box.
  std::array<Vec3, 8> bbox_corners() const;

  TriangleMesh transformed(const Mat3& rotation, const Vec3& translation) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  bool watertight_ = false;
  std::size_t dropped_ = 0;
  Vec3 bbox_min_ = Vec3::Zero();
  Vec3 bbox_max_ = Vec3::Zero();
};

/// Axis-aligned box centered at the origin.
TriangleMesh make_box(const Vec3& half_extents);
/// Subdivided icosahedron with vertices on the sphere of the given radius.
TriangleMesh make_icosphere(double radius, int subdivisions);

struct ObjLoadResult {
  TriangleMesh mesh;
  std::vector<std::string> warnings;
};

/// Wavefront OBJ: `v` and triangular `f` records (v, v/vt, v//vn, v/vt/vn, negative indices).
/// Other record types are skipped with a warning; non-triangular faces are rejected.
ObjLoadResult parse_obj(const std::string& text);
ObjLoadResult load_obj(const std::filesystem::path& path);
std::string to_obj(const TriangleMesh& mesh);
void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

/// Closest point on triangle (a, b, c) to p, by Voronoi-region classification.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct ClosestPoint {
  Vec3 point = Vec3::Zero();
  double distance = 0.0;
  int triangle = -1;
};

/// Brute force over all triangles; the first triangle wins ties. Throws on an empty mesh.
ClosestPoint closest_point(const TriangleMesh& mesh, const Vec3& p);
double unsigned_distance(const TriangleMesh& mesh, const Vec3& p);

/// Negative inside. Sign from ray-crossing parity along three fixed directions with a majority
/// vote. Throws ValidationError for non-watertight meshes.
double signed_distance(const TriangleMesh& mesh, const Vec3& p);

/// Batched signed distances, parallel over points.
std::vector<double> signed_distances(const TriangleMesh& mesh, std::span<const Vec3> points);
/// Serial reference of signed_distances.
std::vector<double> signed_distances_serial(const TriangleMesh& mesh, std::span<const Vec3> points);

}  // namespace hoigen::geometry
