#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hoigen/diffusion/tensor.hpp"
#include "hoigen/io/container.hpp"
#include "hoigen/keyaction/windows.hpp"

namespace hoigen::diffusion {

using Vec2 = Eigen::Vector2d;

/// Per-feature affine map into model space: (x - mean) / scale.
struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Normalizer identity(int features);
  void validate(int features) const;
};

/// Mean and standard deviation over the valid slots of canonicalized windows; scales are floored.
Normalizer fit_normalizer(std::span<const SampleTensor> canonical, int features, double min_scale = 1e-2);

/// Decoded window: human poses, object poses, contact probabilities and per-slot frame offsets.
struct KeyWindow {
  std::vector<PoseFrame> poses;
  std::vector<ObjectPose> objects;
  std::vector<Contact4> contacts;
  std::vector<double> time_offsets;
  std::vector<std::uint8_t> valid;
  int repaired_rotations = 0;  ///< degenerate 6-DOF outputs replaced by the identity

  int slots() const { return static_cast<int>(poses.size()); }
};

/// World-space tensor of a training window; slot 0 is the initial state with time offset 0.
SampleTensor pack_window(const keyaction::TrainingWindow& w, const SampleLayout& layout);

/// Inverse of pack_window up to projection: rotations are re-orthonormalized and contacts clamped to [0, 1].
KeyWindow unpack(const SampleTensor& raw, const SampleLayout& layout);

/// Frames of the valid slots, starting at `start_frame` and strictly increasing.
std::vector<int> key_frames(const KeyWindow& w, int start_frame);

struct GivenSlot {
  PoseFrame pose;
  ObjectPose object;
};
struct SlotWaypoint {
  int slot = 0;
  double x = 0.0;
  double y = 0.0;
};
struct SlotTarget {
  int slot = 0;
  Vec3 position = Vec3::Zero();
};

/// Raw (world-space) condition: the given slots carry full human and object poses, waypoint slots
/// carry object x/y, the target slot carries object x/y/z. Everything else is zero with mask 0.
ConditionBundle build_condition(const Eigen::MatrixXd& geometry, std::span<const GivenSlot> given,
                                std::span<const SlotWaypoint> waypoints, const SlotTarget& target,
                                const Eigen::VectorXd& text, const SampleLayout& layout, int valid_slots);

/// Waypoints every `waypoint_stride` slots between the given slots and the target.
struct ConditionPolicy {
  int waypoint_stride = 2;
};

/// Condition a training window would receive: `given_slots` leading slots revealed, waypoints per
/// the policy and the final valid key as target.
ConditionBundle window_condition(const keyaction::TrainingWindow& w, int given_slots, const Eigen::MatrixXd& geometry,
                                 const Eigen::VectorXd& text, const SampleLayout& layout, const ConditionPolicy& policy);

/// Ground-plane frame of the first slot: root x/y and the heading (yaw) of the root joint.
struct CanonicalFrame {
  Vec2 origin = Vec2::Zero();
  double yaw = 0.0;
};
CanonicalFrame window_origin(const PoseFrame& initial);

/// Canonicalization (move the initial root to the x/y origin facing +x) plus normalization.
class WindowCodec {
 public:
  WindowCodec(SampleLayout layout, Normalizer normalizer);

  const SampleLayout& layout() const { return layout_; }
  const Normalizer& normalizer() const { return norm_; }

  /// World to canonical only (no normalization), and back.
  SampleTensor canonicalize(const SampleTensor& raw, const CanonicalFrame& frame) const;
  SampleTensor uncanonicalize(const SampleTensor& canonical, const CanonicalFrame& frame) const;
  SampleTensor to_model(const SampleTensor& raw, const CanonicalFrame& frame) const;
  SampleTensor to_raw(const SampleTensor& model, const CanonicalFrame& frame) const;
  ConditionBundle to_model(const ConditionBundle& raw, const CanonicalFrame& frame) const;
  /// Frame of a raw condition's first slot.
  CanonicalFrame condition_frame(const ConditionBundle& raw) const;

 private:
  SampleLayout layout_;
  Normalizer norm_;
};

/// `condition` chunk (schema 1); lossless.
io::Chunk encode_condition(const ConditionBundle& c);
ConditionBundle decode_condition(const io::Chunk& c);

}  // namespace hoigen::diffusion
