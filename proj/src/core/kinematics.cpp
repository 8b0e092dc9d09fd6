#include "hoigen/core/kinematics.hpp"

#include <string>

#include "hoigen/core/error.hpp"
#include "hoigen/core/rotation.hpp"

namespace hoigen {

LinkPoses forward_kinematics(const SkeletonSpec& skeleton, const PoseFrame& frame) {
  const int n = skeleton.joint_count();
  if (static_cast<int>(frame.joint_rot6d.size()) != n)
    throw ValidationError("forward_kinematics: rotation count does not match skeleton");
  LinkPoses out;
  out.positions.resize(n);
  out.orientations.resize(n);
  for (int j = 0; j < n; ++j) {
    const Mat3 local = rot6d_to_matrix(frame.joint_rot6d[j]);
    const int p = skeleton.parents[j];
    if (p < 0) {
      out.orientations[j] = local;
      out.positions[j] = frame.root_translation + skeleton.offsets[j];
    } else {
      out.orientations[j] = out.orientations[p] * local;
      out.positions[j] = out.positions[p] + out.orientations[p] * skeleton.offsets[j];
    }
  }
  return out;
}

GlobalMotion relative_to_global(const SkeletonSpec& skeleton, const MotionSequence& motion) {
  skeleton.validate();
  motion.validate(skeleton);
  GlobalMotion g;
  g.frame_rate = motion.frame_rate;
  g.frames.reserve(motion.frames.size());
  for (const auto& f : motion.frames) {
    LinkPoses lp = forward_kinematics(skeleton, f);
    GlobalFrame gf;
    gf.positions = std::move(lp.positions);
    gf.orientations = std::move(lp.orientations);
    g.frames.push_back(std::move(gf));
  }
  fill_velocities(g);
  return g;
}

MotionSequence global_to_relative(const SkeletonSpec& skeleton, const GlobalMotion& global) {
  skeleton.validate();
  const int n = skeleton.joint_count();
  MotionSequence m;
  m.frame_rate = global.frame_rate;
  m.frames.reserve(global.frames.size());
  for (std::size_t t = 0; t < global.frames.size(); ++t) {
    const auto& gf = global.frames[t];
    if (static_cast<int>(gf.positions.size()) != n || static_cast<int>(gf.orientations.size()) != n)
      throw ValidationError("global_to_relative: frame " + std::to_string(t) + " does not match skeleton");
    PoseFrame f;
    f.joint_rot6d.resize(n);
    for (int j = 0; j < n; ++j) {
      if (!is_rotation(gf.orientations[j]))
        throw ValidationError("global_to_relative: orientation is not orthonormal at frame " + std::to_string(t));
      const int p = skeleton.parents[j];
      const Mat3 local = p < 0 ? gf.orientations[j] : Mat3(gf.orientations[p].transpose() * gf.orientations[j]);
      f.joint_rot6d[j] = {local(0, 0), local(1, 0), local(2, 0), local(0, 1), local(1, 1), local(2, 1)};
    }
    f.root_translation = gf.positions[skeleton.root] - skeleton.offsets[skeleton.root];
    m.frames.push_back(std::move(f));
  }
  return m;
}

std::pair<std::vector<Vec3>, std::vector<Vec3>> finite_difference_velocities(std::span<const Vec3> positions,
                                                                             std::span<const Mat3> orientations,
                                                                             double frame_rate) {
  const std::size_t t_count = positions.size();
  if (t_count < 2) throw ValidationError("finite_difference_velocities: need at least 2 frames");
  if (orientations.size() != t_count) throw ValidationError("finite_difference_velocities: length mismatch");
  if (!(frame_rate > 0.0)) throw ValidationError("finite_difference_velocities: frame rate must be positive");
  std::vector<Vec3> v(t_count), w(t_count);
  for (std::size_t t = 0; t + 1 < t_count; ++t) {
    v[t] = (positions[t + 1] - positions[t]) * frame_rate;
    w[t] = rotation_log(orientations[t + 1] * orientations[t].transpose()) * frame_rate;
  }
  v[t_count - 1] = v[t_count - 2];
  w[t_count - 1] = w[t_count - 2];
  return {std::move(v), std::move(w)};
}

void fill_velocities(GlobalMotion& global) {
  const int t_count = global.length();
  if (t_count < 2) throw ValidationError("fill_velocities: need at least 2 frames");
  const int n = global.joint_count();
  for (auto& f : global.frames) {
    f.linear_velocity.assign(n, Vec3::Zero());
    f.angular_velocity.assign(n, Vec3::Zero());
  }
  std::vector<Vec3> p(t_count);
  std::vector<Mat3> r(t_count);
  for (int j = 0; j < n; ++j) {
    for (int t = 0; t < t_count; ++t) {
      p[t] = global.frames[t].positions[j];
      r[t] = global.frames[t].orientations[j];
    }
    auto [v, w] = finite_difference_velocities(p, r, global.frame_rate);
    for (int t = 0; t < t_count; ++t) {
      global.frames[t].linear_velocity[j] = v[t];
      global.frames[t].angular_velocity[j] = w[t];
    }
  }
}

}  // namespace hoigen
