#include "hoigen/geometry/mesh.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <utility>

#include "hoigen/core/error.hpp"

namespace hoigen::geometry {

TriangleMesh::TriangleMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles)
    : vertices_(std::move(vertices)) {
  const int nv = static_cast<int>(vertices_.size());
  for (const auto& v : vertices_)
    if (!v.allFinite()) throw ValidationError("mesh: non-finite vertex");
  triangles_.reserve(triangles.size());
  for (const auto& t : triangles) {
    for (int i : t)
      if (i < 0 || i >= nv) throw ValidationError("mesh: triangle index out of range");
    const double area2 = (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]).norm();
    if (!(area2 > 1e-14) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      ++dropped_;
      continue;
    }
    triangles_.push_back(t);
  }
  if (!vertices_.empty()) {
    bbox_min_ = bbox_max_ = vertices_.front();
    for (const auto& v : vertices_) {
      bbox_min_ = bbox_min_.cwiseMin(v);
      bbox_max_ = bbox_max_.cwiseMax(v);
    }
  }
  std::map<std::pair<int, int>, int> edges;
  for (const auto& t : triangles_)
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edges[{a, b}];
    }
  watertight_ = !triangles_.empty();
  for (const auto& [edge, count] : edges)
    if (count != 2) {
      watertight_ = false;
      break;
    }
}

std::array<Vec3, 8> TriangleMesh::bbox_corners() const {
  std::array<Vec3, 8> c;
  for (int i = 0; i < 8; ++i)
    c[i] = Vec3((i & 1) ? bbox_max_.x() : bbox_min_.x(), (i & 2) ? bbox_max_.y() : bbox_min_.y(),
                (i & 4) ? bbox_max_.z() : bbox_min_.z());
  return c;
}

TriangleMesh TriangleMesh::transformed(const Mat3& rotation, const Vec3& translation) const {
  std::vector<Vec3> v;
  v.reserve(vertices_.size());
  for (const auto& p : vertices_) v.push_back(rotation * p + translation);
  return TriangleMesh(std::move(v), triangles_);
}

TriangleMesh make_box(const Vec3& h) {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i)
    v.emplace_back((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z());
  // Outward-facing, counter-clockwise.
  std::vector<std::array<int, 3>> f = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                                       {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return TriangleMesh(std::move(v), std::move(f));
}

TriangleMesh make_icosphere(double radius, int subdivisions) {
  const double g = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, g, 0}, {1, g, 0}, {-1, -g, 0}, {1, -g, 0}, {0, -1, g}, {0, 1, g},
                         {0, -1, -g}, {0, 1, -g}, {g, 0, -1}, {g, 0, 1}, {-g, 0, -1}, {-g, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      if (auto it = mid.find(key); it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(f.size() * 4);
    for (const auto& t : f) {
      const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  for (auto& p : v) p *= radius;
  return TriangleMesh(std::move(v), std::move(f));
}

namespace {

int parse_index(std::string_view tok, int vertex_count) {
  const auto slash = tok.find('/');
  const auto head = tok.substr(0, slash);
  int idx = 0;
  const auto res = std::from_chars(head.data(), head.data() + head.size(), idx);
  if (res.ec != std::errc() || res.ptr != head.data() + head.size() || idx == 0)
    throw FormatError("obj: bad face index '" + std::string(tok) + "'");
  return idx > 0 ? idx - 1 : vertex_count + idx;
}

}  // namespace

ObjLoadResult parse_obj(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> faces;
  std::map<std::string, int> skipped;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind) || kind[0] == '#') continue;
    if (kind == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) throw FormatError("obj: malformed vertex on line " + std::to_string(line_no));
      verts.push_back(p);
    } else if (kind == "f") {
      std::vector<std::string> toks;
      std::string tok;
      while (ls >> tok) toks.push_back(tok);
      if (toks.size() != 3)
        throw FormatError("obj: only triangular faces are supported (line " + std::to_string(line_no) + ")");
      std::array<int, 3> t{};
      for (int i = 0; i < 3; ++i) t[i] = parse_index(toks[i], static_cast<int>(verts.size()));
      faces.push_back(t);
    } else {
      ++skipped[kind];
    }
  }
  ObjLoadResult r;
  for (const auto& [kind, count] : skipped)
    r.warnings.push_back("obj: ignored " + std::to_string(count) + " '" + kind + "' record(s)");
  try {
    r.mesh = TriangleMesh(std::move(verts), std::move(faces));
  } catch (const ValidationError& e) {
    throw FormatError(std::string("obj: ") + e.what());
  }
  if (r.mesh.dropped_degenerate() > 0)
    r.warnings.push_back("obj: dropped " + std::to_string(r.mesh.dropped_degenerate()) + " degenerate triangle(s)");
  return r;
}

ObjLoadResult load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_obj(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string to_obj(const TriangleMesh& mesh) {
  std::string out;
  char buf[128];
  for (const auto& v : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out += buf;
  }
  for (const auto& t : mesh.triangles()) {
    std::snprintf(buf, sizeof buf, "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
    out += buf;
  }
  return out;
}

void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << to_obj(mesh);
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

ClosestPoint closest_point(const TriangleMesh& mesh, const Vec3& p) {
  if (mesh.empty()) throw ValidationError("closest_point: empty mesh");
  const auto& v = mesh.vertices();
  ClosestPoint best;
  double best_d2 = std::numeric_limits<double>::infinity();
  const auto& tris = mesh.triangles();
  for (std::size_t i = 0; i < tris.size(); ++i) {
    const auto& t = tris[i];
    const Vec3 q = closest_point_on_triangle(p, v[t[0]], v[t[1]], v[t[2]]);
    const double d2 = (q - p).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best.point = q;
      best.triangle = static_cast<int>(i);
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

double unsigned_distance(const TriangleMesh& mesh, const Vec3& p) { return closest_point(mesh, p).distance; }

namespace {

bool ray_hits_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 h = d.cross(e2);
  const double det = e1.dot(h);
  if (std::abs(det) < 1e-15) return false;
  const double inv = 1.0 / det;
  const Vec3 s = o - a;
  const double u = inv * s.dot(h);
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 q = s.cross(e1);
  const double w = inv * d.dot(q);
  if (w < 0.0 || u + w > 1.0) return false;
  return inv * e2.dot(q) > 0.0;
}

bool inside_by_parity(const TriangleMesh& mesh, const Vec3& p) {
  static const std::array<Vec3, 3> kDirs = {Vec3(1.0, 0.3719, 0.1234).normalized(),
                                            Vec3(-0.2718, 1.0, 0.5772).normalized(),
                                            Vec3(0.1618, -0.4142, 1.0).normalized()};
  const auto& v = mesh.vertices();
  int votes = 0;
  for (const auto& d : kDirs) {
    int crossings = 0;
    for (const auto& t : mesh.triangles())
      if (ray_hits_triangle(p, d, v[t[0]], v[t[1]], v[t[2]])) ++crossings;
    votes += crossings & 1;
  }
  return votes >= 2;
}

}  // namespace

double signed_distance(const TriangleMesh& mesh, const Vec3& p) {
  if (!mesh.watertight()) throw ValidationError("signed_distance: mesh is not watertight");
  const double d = unsigned_distance(mesh, p);
  if (d == 0.0) return 0.0;
  return inside_by_parity(mesh, p) ? -d : d;
}

std::vector<double> signed_distances(const TriangleMesh& mesh, std::span<const Vec3> points) {
  if (!mesh.watertight()) throw ValidationError("signed_distances: mesh is not watertight");
  std::vector<double> out(points.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = signed_distance(mesh, points[i]);
  return out;
}

std::vector<double> signed_distances_serial(const TriangleMesh& mesh, std::span<const Vec3> points) {
  if (!mesh.watertight()) throw ValidationError("signed_distances: mesh is not watertight");
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(signed_distance(mesh, p));
  return out;
}

}  // namespace hoigen::geometry
