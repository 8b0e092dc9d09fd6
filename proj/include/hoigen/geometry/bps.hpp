#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "hoigen/geometry/mesh.hpp"
#include "hoigen/io/container.hpp"

namespace hoigen::geometry {

inline constexpr int kBasisPointCount = 1024;
inline constexpr int kProjectedPointCount = 256;

struct BasisPointSet {
  std::vector<Vec3> points;
  std::uint64_t seed = 0;
  double radius = 1.0;
};

/// Uniform samples from the ball of `radius` by rejection from the bounding cube.
BasisPointSet sample_basis_points(std::uint64_t seed, int count = kBasisPointCount, double radius = 1.0);

/// Row i is the vector from basis point i to its nearest point on the mesh surface.
struct BpsFeature {
  Eigen::MatrixXd vectors;                   ///< count x 3
  std::optional<Eigen::MatrixXd> projected;  ///< rows x 3, present after project_geometry
};

/// Parallel over basis points.
BpsFeature encode_bps(const TriangleMesh& mesh, const BasisPointSet& basis);
/// Serial reference of encode_bps.
BpsFeature encode_bps_serial(const TriangleMesh& mesh, const BasisPointSet& basis);

/// projection * vectors, applied to each coordinate column. `projection` is rows x count.
Eigen::MatrixXd project_geometry(const Eigen::MatrixXd& vectors, const Eigen::MatrixXd& projection);

/// `bps` chunk: schema, seed, radius, rows, then row-major vectors (and the projection if present).
io::Chunk encode_bps_chunk(const BpsFeature& f, const BasisPointSet& basis);
BpsFeature decode_bps_chunk(const io::Chunk& c);

}  // namespace hoigen::geometry
