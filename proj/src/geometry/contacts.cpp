#include "hoigen/geometry/contacts.hpp"

#include "hoigen/core/error.hpp"

namespace hoigen::geometry {

ContactChannels detect_contacts(const SkeletonSpec& skeleton, const GlobalMotion& motion,
                                const ObjectTrajectory& object, const TriangleMesh& mesh, double threshold) {
  if (motion.length() != object.length()) throw ValidationError("detect_contacts: motion and object lengths differ");
  if (!(threshold > 0.0)) throw ValidationError("detect_contacts: threshold must be positive");
  const auto ee = skeleton.end_effectors();
  ContactChannels out;
  out.frames.resize(motion.length());
  for (int t = 0; t < motion.length(); ++t) {
    for (int k = 0; k < 4; ++k) {
      const Vec3 local = to_object_frame(object.poses[t], motion.frames[t].positions[ee[k]]);
      out.frames[t][k] = unsigned_distance(mesh, local) < threshold ? 1.0 : 0.0;
    }
  }
  return out;
}

}  // namespace hoigen::geometry
