#pragma once

#include <span>
#include <utility>
#include <vector>

#include "hoigen/core/motion.hpp"

namespace hoigen {

/// Global pose of every link for a single frame (no velocities).
struct LinkPoses {
  std::vector<Vec3> positions;
  std::vector<Mat3> orientations;
};

LinkPoses forward_kinematics(const SkeletonSpec& skeleton, const PoseFrame& frame);

/// Relative-to-global conversion with kinematic velocities.
GlobalMotion relative_to_global(const SkeletonSpec& skeleton, const MotionSequence& motion);

/// Inverse of relative_to_global. Joint positions other than the root are implied by the skeleton.
MotionSequence global_to_relative(const SkeletonSpec& skeleton, const GlobalMotion& global);

/// Forward differences scaled by the frame rate; the last frame copies the previous estimate.
/// Angular velocity is the axis-angle of R[t+1] * R[t]^T times the frame rate.
std::pair<std::vector<Vec3>, std::vector<Vec3>> finite_difference_velocities(
    std::span<const Vec3> positions, std::span<const Mat3> orientations, double frame_rate);

/// Fills linear/angular velocities of every link of `global` in place.
void fill_velocities(GlobalMotion& global);

}  // namespace hoigen
