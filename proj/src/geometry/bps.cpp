#include "hoigen/geometry/bps.hpp"

#include "hoigen/core/error.hpp"
#include "hoigen/core/rng.hpp"

namespace hoigen::geometry {

BasisPointSet sample_basis_points(std::uint64_t seed, int count, double radius) {
  if (count < 1) throw ValidationError("sample_basis_points: count must be >= 1");
  if (!(radius > 0.0)) throw ValidationError("sample_basis_points: radius must be positive");
  BasisPointSet b;
  b.seed = seed;
  b.radius = radius;
  b.points.reserve(count);
  Rng rng(seed);
  while (static_cast<int>(b.points.size()) < count) {
    const Vec3 p(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    if (p.squaredNorm() <= 1.0) b.points.push_back(p * radius);
  }
  return b;
}

BpsFeature encode_bps(const TriangleMesh& mesh, const BasisPointSet& basis) {
  if (mesh.empty()) throw ValidationError("encode_bps: empty mesh");
  BpsFeature f;
  f.vectors.resize(static_cast<Eigen::Index>(basis.points.size()), 3);
  const auto n = static_cast<std::ptrdiff_t>(basis.points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Vec3& b = basis.points[i];
    f.vectors.row(i) = (closest_point(mesh, b).point - b).transpose();
  }
  return f;
}

BpsFeature encode_bps_serial(const TriangleMesh& mesh, const BasisPointSet& basis) {
  if (mesh.empty()) throw ValidationError("encode_bps: empty mesh");
  BpsFeature f;
  f.vectors.resize(static_cast<Eigen::Index>(basis.points.size()), 3);
  for (std::size_t i = 0; i < basis.points.size(); ++i) {
    const Vec3& b = basis.points[i];
    f.vectors.row(static_cast<Eigen::Index>(i)) = (closest_point(mesh, b).point - b).transpose();
  }
  return f;
}

Eigen::MatrixXd project_geometry(const Eigen::MatrixXd& vectors, const Eigen::MatrixXd& projection) {
  if (vectors.cols() != 3) throw ValidationError("project_geometry: vectors must have 3 columns");
  if (projection.cols() != vectors.rows())
    throw ValidationError("project_geometry: projection has " + std::to_string(projection.cols()) +
                          " columns, expected " + std::to_string(vectors.rows()));
  return projection * vectors;
}

namespace {
constexpr std::int64_t kBpsSchema = 1;

void write_matrix(io::ChunkWriter& w, const Eigen::MatrixXd& m) {
  w.i64(m.rows()).newline();
  for (Eigen::Index r = 0; r < m.rows(); ++r) w.f64(m(r, 0)).f64(m(r, 1)).f64(m(r, 2)).newline();
}

Eigen::MatrixXd read_matrix(io::ChunkReader& r) {
  const auto rows = static_cast<Eigen::Index>(r.count(1 << 24));
  Eigen::MatrixXd m(rows, 3);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (int k = 0; k < 3; ++k) m(i, k) = r.f64();
  return m;
}
}  // namespace

io::Chunk encode_bps_chunk(const BpsFeature& f, const BasisPointSet& basis) {
  io::ChunkWriter w("bps");
  w.i64(kBpsSchema).i64(static_cast<std::int64_t>(basis.seed)).f64(basis.radius).i64(f.projected ? 1 : 0);
  write_matrix(w, f.vectors);
  if (f.projected) write_matrix(w, *f.projected);
  return std::move(w).finish();
}

BpsFeature decode_bps_chunk(const io::Chunk& c) {
  io::ChunkReader r(c);
  if (r.i64() != kBpsSchema) throw FormatError("bps chunk: unsupported schema version");
  r.i64();
  r.f64();
  const bool projected = r.i64() != 0;
  BpsFeature f;
  f.vectors = read_matrix(r);
  if (projected) f.projected = read_matrix(r);
  r.expect_done();
  return f;
}

}  // namespace hoigen::geometry
