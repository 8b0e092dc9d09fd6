#include "hoigen/core/skeleton.hpp"

#include <cmath>
#include <string>

#include "hoigen/core/error.hpp"
#include "hoigen/core/motion.hpp"

namespace hoigen {

std::vector<int> SkeletonSpec::key_joints() const {
  std::vector<int> out;
  for (int j = 0; j < joint_count(); ++j)
    if (j < static_cast<int>(key_joint.size()) && key_joint[j]) out.push_back(j);
  return out;
}

void SkeletonSpec::validate() const {
  const int n = joint_count();
  if (n < 1) throw ValidationError("skeleton: no joints");
  if (static_cast<int>(offsets.size()) != n) throw ValidationError("skeleton: offsets size differs from joint count");
  if (!names.empty() && static_cast<int>(names.size()) != n)
    throw ValidationError("skeleton: names size differs from joint count");
  if (!key_joint.empty() && static_cast<int>(key_joint.size()) != n)
    throw ValidationError("skeleton: key-joint flags size differs from joint count");
  int roots = 0;
  for (int j = 0; j < n; ++j) {
    if (parents[j] < 0) {
      ++roots;
      if (parents[j] != -1) throw ValidationError("skeleton: invalid parent index");
    } else if (parents[j] >= j) {
      throw ValidationError("skeleton: joints must be topologically sorted (parent < child), joint " +
                            std::to_string(j));
    }
  }
  if (roots != 1 || parents[0] != -1 || root != 0) throw ValidationError("skeleton: joint 0 must be the only root");
  for (int e : end_effectors())
    if (e < 0 || e >= n) throw ValidationError("skeleton: hand/foot roles must each name a joint");
  const auto ee = end_effectors();
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      if (ee[a] == ee[b]) throw ValidationError("skeleton: hand/foot roles must be distinct joints");
}

std::vector<double> SkeletonSpec::limb_lengths() const {
  std::vector<double> out;
  out.reserve(offsets.size());
  for (const auto& o : offsets) out.push_back(o.norm());
  return out;
}

SkeletonSpec default_humanoid() {
  SkeletonSpec s;
  auto add = [&](const char* name, int parent, Vec3 offset, bool key) {
    s.names.emplace_back(name);
    s.parents.push_back(parent);
    s.offsets.push_back(offset);
    s.key_joint.push_back(key);
    return static_cast<int>(s.parents.size()) - 1;
  };
  const int pelvis = add("pelvis", -1, Vec3(0, 0, 0.92), true);
  const int spine = add("spine", pelvis, Vec3(0, 0, 0.25), false);
  add("head", spine, Vec3(0, 0, 0.35), true);
  const int ls = add("l_shoulder", spine, Vec3(0, 0.2, 0.22), false);
  const int le = add("l_elbow", ls, Vec3(0, 0, -0.28), false);
  s.left_hand = add("l_hand", le, Vec3(0, 0, -0.26), true);
  const int rs = add("r_shoulder", spine, Vec3(0, -0.2, 0.22), false);
  const int re = add("r_elbow", rs, Vec3(0, 0, -0.28), false);
  s.right_hand = add("r_hand", re, Vec3(0, 0, -0.26), true);
  const int lh = add("l_hip", pelvis, Vec3(0, 0.1, -0.05), false);
  const int lk = add("l_knee", lh, Vec3(0, 0, -0.42), false);
  s.left_foot = add("l_foot", lk, Vec3(0, 0, -0.43), true);
  const int rh = add("r_hip", pelvis, Vec3(0, -0.1, -0.05), false);
  const int rk = add("r_knee", rh, Vec3(0, 0, -0.42), false);
  s.right_foot = add("r_foot", rk, Vec3(0, 0, -0.43), true);
  s.root = pelvis;
  return s;
}

void MotionSequence::validate(const SkeletonSpec& skeleton) const {
  if (frames.size() < 2) throw ValidationError("motion: need at least 2 frames");
  if (!(frame_rate > 0.0)) throw ValidationError("motion: frame rate must be positive");
  const auto j = static_cast<std::size_t>(skeleton.joint_count());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto& f = frames[t];
    if (f.joint_rot6d.size() != j)
      throw ValidationError("motion: frame " + std::to_string(t) + " rotation count does not match skeleton");
    if (f.joint_positions && f.joint_positions->size() != j)
      throw ValidationError("motion: frame " + std::to_string(t) + " position count does not match skeleton");
    if (!f.root_translation.allFinite()) throw ValidationError("motion: non-finite root translation");
    for (const auto& r : f.joint_rot6d)
      for (double v : r)
        if (!std::isfinite(v)) throw ValidationError("motion: non-finite rotation entry");
  }
}

void ObjectTrajectory::validate() const {
  for (std::size_t t = 0; t < poses.size(); ++t) {
    const Mat3& r = poses[t].rotation;
    if (!poses[t].position.allFinite() || !r.allFinite() ||
        (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 || std::abs(r.determinant() - 1.0) > 1e-6)
      throw ValidationError("object: pose " + std::to_string(t) + " rotation is not orthonormal");
  }
}

void ContactChannels::validate() const {
  for (std::size_t t = 0; t < frames.size(); ++t)
    for (double c : frames[t])
      if (!(c >= 0.0 && c <= 1.0)) throw ValidationError("contacts: frame " + std::to_string(t) + " entry outside [0,1]");
}

}  // namespace hoigen
