#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hoigen/core/motion.hpp"
#include "hoigen/geometry/mesh.hpp"
#include "hoigen/io/container.hpp"
#include "hoigen/keyaction/windows.hpp"

namespace hoigen::tracking {

struct HumanoidSimState {
  std::vector<Vec3> positions;
  std::vector<Mat3> orientations;
  std::vector<Vec3> linear_velocity;
  std::vector<Vec3> angular_velocity;
  std::vector<double> body_shape;  ///< limb lengths

  int joint_count() const { return static_cast<int>(positions.size()); }
  void validate() const;
};

using ContactFlags = std::array<bool, 4>;

struct ObjectSimState {
  Vec3 position = Vec3::Zero();
  Mat3 orientation = Mat3::Identity();
  Vec3 linear_velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();
  ContactFlags contact{};  ///< actual body-object contact per channel

  void validate() const;
};

struct RewardWeights {
  double joint_position = 1.0;
  double joint_rotation = 1.0;
  double joint_velocity = 1.0;
  double joint_angular_velocity = 1.0;
  double contact = 1.0;
  double object_position = 1.0;
  double object_rotation = 1.0;
  double object_velocity = 1.0;
  double object_angular_velocity = 1.0;
  double alpha = 0.5;            ///< human/object blend
  std::vector<int> key_joints;   ///< joints the human terms are evaluated on

  void validate(int joint_count) const;
  double human_sum() const { return joint_position + joint_rotation + joint_velocity + joint_angular_velocity; }
  double object_sum() const { return object_position + object_rotation + object_velocity + object_angular_velocity; }
};

struct TerminationConfig {
  double object_deviation = 0.5;  ///< m, mean bounding-box corner deviation
  int missing_contact_frames = 10;
  double humanoid_drift = 0.5;    ///< m, mean key-joint deviation

  void validate() const;
};

/// Expected contact: commanded probability of at least 0.5.
ContactFlags expected_contacts(const Contact4& commanded);
/// Per-channel agreement: 1 iff both flags are equal.
std::array<double, 4> contact_xnor(const ContactFlags& expected, const ContactFlags& actual);

/// Observation order (each block over all joints, joint-major): rotation difference ref * sim^T as
/// 6-DOF, ref - sim position, ref - sim linear velocity, ref - sim angular velocity, reference
/// rotation as 6-DOF, reference position. Length 24 J.
Eigen::VectorXd build_humanoid_obs(const HumanoidSimState& sim, const HumanoidSimState& ref_next);

/// Object observation: rotation difference (6), position, linear and angular velocity differences
/// (3 each), XNOR of commanded and actual contacts (4), reference rotation (6), reference position
/// (3) and the commanded contacts (4). Length 32.
Eigen::VectorXd build_object_obs(const ObjectSimState& sim, const ObjectSimState& ref_next, const Contact4& commanded_next);

struct HumanRewardTerms {
  double position = 0.0;
  double rotation = 0.0;
  double velocity = 0.0;
  double angular_velocity = 0.0;
  double contact = 0.0;
  double total = 0.0;
};

struct ObjectRewardTerms {
  double position = 0.0;
  double rotation = 0.0;
  double velocity = 0.0;
  double angular_velocity = 0.0;
  double total = 0.0;
};

/// w_p e^{-100 |dp|} + w_r e^{-10 |dq|} + w_v e^{-0.1 |dv|} + w_w e^{-0.1 |dw|} + w_c |xnor|_2, with the
/// position and velocity norms taken over the concatenated key-joint errors and |dq| the sum of
/// key-joint geodesic angles.
HumanRewardTerms human_tracking_reward(const HumanoidSimState& sim, const HumanoidSimState& ref,
                                       const ContactFlags& actual, const Contact4& commanded, const RewardWeights& w);

/// Object terms with coefficients 100, 10, 5 and 5.
ObjectRewardTerms object_reward(const ObjectSimState& sim, const ObjectSimState& ref, const RewardWeights& w);

/// alpha * human + (1 - alpha) * object.
double total_reward(double human, double object, double alpha);

enum class TerminationReason { none, object_deviation, contact_absence, humanoid_drift };
std::string to_string(TerminationReason r);
TerminationReason termination_reason_from_string(const std::string& s);

struct Termination {
  bool terminated = false;
  int frame = -1;
  TerminationReason reason = TerminationReason::none;
};

struct FrameRecord {
  HumanoidSimState sim;
  HumanoidSimState ref;
  ObjectSimState sim_object;
  ObjectSimState ref_object;
  Contact4 commanded{};
  HumanRewardTerms human;
  ObjectRewardTerms object;
  double reward = 0.0;
};

struct RolloutLog {
  std::vector<FrameRecord> frames;  ///< up to and including the termination frame
  int reference_length = 0;
  double frame_rate = 30.0;
  std::vector<Vec3> object_keypoints;  ///< object frame
  std::vector<int> key_joints;
  Termination termination;

  int length() const { return static_cast<int>(frames.size()); }
};

/// Earliest frame violating any limit. Consecutive-absence counting: a frame counts when some channel
/// is expected but not in contact, and the check fires on the frame where the count exceeds the limit.
/// Ties at one frame resolve as object deviation, then contact absence, then drift.
Termination check_early_termination(std::span<const FrameRecord> prefix, const std::vector<Vec3>& keypoints,
                                    const std::vector<int>& key_joints, const TerminationConfig& cfg);

/// Reference for a rollout: dense human motion, object trajectory, commanded contacts and mesh.
struct RolloutReference {
  SkeletonSpec skeleton;
  GlobalMotion human;
  ObjectTrajectory object;
  ContactChannels commanded;
  geometry::TriangleMesh mesh;

  void validate() const;
};

/// Scripted perturbation active on frames [frame, until] (until < 0: to the end).
struct ScriptedFault {
  enum class Kind { object_offset, contact_drop, humanoid_offset };
  Kind kind = Kind::object_offset;
  int frame = 0;
  int until = -1;
  Vec3 offset = Vec3::Zero();
  int channel = -1;  ///< contact_drop: -1 drops every channel
};

struct NoiseModel {
  double position_sigma = 0.0;  ///< m, per-axis Gaussian jitter on joint and object positions
  std::vector<ScriptedFault> faults;
};

/// Deterministic stand-in for a physics policy: simulated states are the reference perturbed by the
/// noise model, with velocities recomputed by finite differences and actual contacts equal to the
/// expected ones except where dropped. Stops at the first termination.
RolloutLog oracle_rollout(const RolloutReference& ref, const NoiseModel& noise, std::uint64_t seed,
                          const RewardWeights& weights, const TerminationConfig& termination);

/// One rollout per reference, parallel over references; rollout i uses derive_seed(seed, "rollout", i).
std::vector<RolloutLog> oracle_rollouts(std::span<const RolloutReference> refs, const NoiseModel& noise,
                                        std::uint64_t seed, const RewardWeights& weights,
                                        const TerminationConfig& termination);
/// Serial reference of oracle_rollouts.
std::vector<RolloutLog> oracle_rollouts_serial(std::span<const RolloutReference> refs, const NoiseModel& noise,
                                               std::uint64_t seed, const RewardWeights& weights,
                                               const TerminationConfig& termination);

/// Final simulated object position within `radius` of `target` (closed ball).
bool reaches_target(const RolloutLog& log, const Vec3& target, double radius = 0.5);

/// Simulated motion of a log as a sequence bundle (human relative pose, object, actual contacts).
io::MotionBundle executed_motion(const RolloutLog& log, const SkeletonSpec& skeleton);

struct RolloutCandidate {
  const RolloutLog* log = nullptr;
  Vec3 target = Vec3::Zero();
  std::string prompt;
  std::string mesh;
};

struct FilterOptions {
  double target_radius = 0.5;
  keyaction::ExtractionOptions extraction;
  int window_key_count = 8;
  int stride = 4;
};

/// Windows from every rollout that survived to the end and reached its target.
std::vector<keyaction::TrainingWindow> filter_successful_rollouts(std::span<const RolloutCandidate> rollouts,
                                                                  const SkeletonSpec& skeleton,
                                                                  const FilterOptions& options);

/// `rollout` chunk (schema 1) with the full per-frame state and reward breakdown.
io::Chunk encode_rollout(const RolloutLog& log);
RolloutLog decode_rollout(const io::Chunk& c);

}  // namespace hoigen::tracking
