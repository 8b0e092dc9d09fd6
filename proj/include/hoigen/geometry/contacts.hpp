#pragma once

#include "hoigen/core/motion.hpp"
#include "hoigen/geometry/mesh.hpp"

namespace hoigen::geometry {

inline constexpr double kDefaultContactThreshold = 0.05;

/// Channel k is 1 at frame t iff end-effector k lies closer than `threshold` to the mesh placed at
/// the frame's object pose. The mesh is given in the object's canonical frame.
ContactChannels detect_contacts(const SkeletonSpec& skeleton, const GlobalMotion& motion,
                                const ObjectTrajectory& object, const TriangleMesh& mesh,
                                double threshold = kDefaultContactThreshold);

/// Expresses a world point in the object's canonical frame.
inline Vec3 to_object_frame(const ObjectPose& pose, const Vec3& world) {
  return pose.rotation.transpose() * (world - pose.position);
}

}  // namespace hoigen::geometry
