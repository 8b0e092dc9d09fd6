#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hoigen/core/motion.hpp"
#include "hoigen/io/container.hpp"

namespace hoigen::io {

/// Schema version of the `motion` chunk.
inline constexpr std::int64_t kMotionSchema = 1;

/// Human motion with optional paired object trajectory and contact channels.
struct MotionBundle {
  SkeletonSpec skeleton;
  MotionSequence motion;
  std::optional<ObjectTrajectory> object;
  std::optional<ContactChannels> contacts;

  /// Full container validation: skeleton invariants, frame dimensions, paired lengths,
  /// orthonormal object rotations and contact ranges.
  void validate() const;
};

struct Waypoint {
  int frame = 0;
  double x = 0.0;
  double y = 0.0;
};

/// Task conditions attached to a sequence (`annot` chunk).
struct SequenceAnnotations {
  std::string prompt;
  std::string mesh;  ///< object mesh path, relative to the sequence file
  Vec3 start = Vec3::Zero();   ///< object start position
  std::vector<Waypoint> waypoints;
  int target_frame = 0;
  Vec3 target = Vec3::Zero();  ///< object target position
};

void write_skeleton(ChunkWriter& w, const SkeletonSpec& s);
SkeletonSpec read_skeleton(ChunkReader& r);

/// Writes one frame record; `object` and `contact` may be null when the stream carries none.
void write_frame_record(ChunkWriter& w, const PoseFrame& f, bool positions, const ObjectPose* object,
                        const Contact4* contact);
void read_frame_record(ChunkReader& r, std::size_t joints, bool positions, PoseFrame& f, ObjectPose* object,
                       Contact4* contact);

/// Frame record order: root translation, 6-DOF rotations, [joint positions], [object position +
/// row-major rotation], [contact 4-vector].
Chunk encode_motion(const MotionBundle& b);
MotionBundle decode_motion(const Chunk& c);

Chunk encode_annotations(const SequenceAnnotations& a);
SequenceAnnotations decode_annotations(const Chunk& c);

/// A sequence file: `motion` chunk plus optional `annot` chunk.
struct SequenceFile {
  MotionBundle bundle;
  std::optional<SequenceAnnotations> annotations;
};

void save_sequence(const std::filesystem::path& path, const SequenceFile& s);
SequenceFile load_sequence(const std::filesystem::path& path);

}  // namespace hoigen::io
