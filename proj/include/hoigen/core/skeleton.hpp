#pragma once

#include <string>
#include <vector>

#include "hoigen/core/math.hpp"

namespace hoigen {

/// Joint hierarchy with rest-pose offsets. Joint 0 is the root; parents precede children.
struct SkeletonSpec {
  std::vector<int> parents;        ///< -1 for the root
  std::vector<Vec3> offsets;       ///< rest offset from the parent joint (root: from the translation origin)
  std::vector<std::string> names;
  int root = 0;
  int left_hand = -1;
  int right_hand = -1;
  int left_foot = -1;
  int right_foot = -1;
  std::vector<bool> key_joint;     ///< joints tracked by rewards and tracking metrics

  int joint_count() const { return static_cast<int>(parents.size()); }

  /// End-effectors in contact-channel order (left hand, right hand, left foot, right foot).
  std::array<int, 4> end_effectors() const { return {left_hand, right_hand, left_foot, right_foot}; }

  std::vector<int> key_joints() const;

  /// Throws ValidationError if the structural invariants do not hold.
  void validate() const;

  /// Per-joint limb lengths (norm of each offset); the body-shape vector carried by the humanoid state.
  std::vector<double> limb_lengths() const;
};

/// 15-joint humanoid used by the synthetic corpus and the tests. Z is up, X forward, Y left.
SkeletonSpec default_humanoid();

}  // namespace hoigen
