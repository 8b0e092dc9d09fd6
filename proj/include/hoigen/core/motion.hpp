#pragma once

#include <optional>
#include <vector>

#include "hoigen/core/math.hpp"
#include "hoigen/core/skeleton.hpp"

namespace hoigen {

/// One frame of relative pose parameters: root translation plus per-joint local rotations.
struct PoseFrame {
  Vec3 root_translation = Vec3::Zero();
  std::vector<Rot6d> joint_rot6d;                  ///< J entries, local to the parent (root: global)
  std::optional<std::vector<Vec3>> joint_positions;  ///< optional global joint positions
};

struct MotionSequence {
  std::vector<PoseFrame> frames;
  double frame_rate = 30.0;

  int length() const { return static_cast<int>(frames.size()); }
  /// Checks T >= 2 and per-frame dimensions against the skeleton.
  void validate(const SkeletonSpec& skeleton) const;
};

struct ObjectPose {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
};

struct ObjectTrajectory {
  std::vector<ObjectPose> poses;
  double frame_rate = 30.0;

  int length() const { return static_cast<int>(poses.size()); }
  void validate() const;
};

struct ContactChannels {
  std::vector<Contact4> frames;

  int length() const { return static_cast<int>(frames.size()); }
  void validate() const;
};

/// Per-link global state of a whole sequence.
struct GlobalFrame {
  std::vector<Vec3> positions;
  std::vector<Mat3> orientations;
  std::vector<Vec3> linear_velocity;
  std::vector<Vec3> angular_velocity;
};

struct GlobalMotion {
  std::vector<GlobalFrame> frames;
  double frame_rate = 30.0;

  int length() const { return static_cast<int>(frames.size()); }
  int joint_count() const { return frames.empty() ? 0 : static_cast<int>(frames.front().positions.size()); }
};

/// Pose dimension of the generative representation: root translation + 6-DOF rotation per joint.
inline int pose_dimension(const SkeletonSpec& skeleton) { return 3 + 6 * skeleton.joint_count(); }

}  // namespace hoigen
