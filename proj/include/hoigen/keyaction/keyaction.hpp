#pragma once

#include <span>
#include <vector>

#include "hoigen/core/motion.hpp"
#include "hoigen/io/container.hpp"
#include "hoigen/io/motion_format.hpp"

namespace hoigen::keyaction {

using io::MotionBundle;

/// Importance weight per joint plus one shared weight for the object marker points.
struct JointWeights {
  std::vector<double> joints;
  double object = 1.0;

  /// 1.0 for body joints and `critical` for hands and feet.
  static JointWeights defaults(const SkeletonSpec& s, double critical = 2.0, double object = 1.0);
  void validate(int joint_count) const;
};

/// Rigid marker layout used to measure object reconstruction: the object origin plus the four
/// vertices of a regular tetrahedron of the given radius, all in the object frame.
std::vector<Vec3> object_marker_offsets(double radius = 0.1);

/// Dense frames x points table of global positions.
struct PointTracks {
  int frames = 0;
  int points = 0;
  std::vector<Vec3> data;

  const Vec3& at(int t, int n) const { return data[static_cast<std::size_t>(t) * points + n]; }
  Vec3& at(int t, int n) { return data[static_cast<std::size_t>(t) * points + n]; }
};

/// Global joint positions followed (when present) by the object marker points.
PointTracks tracked_points(const MotionBundle& b);
std::vector<double> point_weights(const JointWeights& w, int joint_count, bool has_object);

struct ReconstructionReport {
  double max_error = 0.0;  ///< meters, weighted
  int argmax_frame = 0;
  int argmax_point = 0;    ///< joint index, or J + marker for object markers
  std::vector<double> segment_errors;  ///< one per key segment when keys are supplied
};

/// max over frames and points of w[n] * |ref - rec|; ties resolve to the smallest frame, then point.
ReconstructionReport reconstruction_error(const PointTracks& ref, const PointTracks& rec, std::span<const double> weights,
                                          std::span<const int> keys = {});
ReconstructionReport reconstruction_error(const MotionBundle& ref, const MotionBundle& rec, const JointWeights& w,
                                          std::span<const int> keys = {});

struct KeyActionSet {
  std::vector<int> indices;
  std::vector<PoseFrame> poses;
  std::vector<ObjectPose> objects;   ///< empty when the source had no object
  std::vector<Contact4> contacts;    ///< empty when the source had no contacts
  int source_length = 0;
  double frame_rate = 30.0;

  int size() const { return static_cast<int>(indices.size()); }
  void validate() const;
};

/// Gathers the frames at `indices` (which must start at 0 and end at T-1).
KeyActionSet select_keys(const MotionBundle& b, std::vector<int> indices);

/// Dense reconstruction: linear translation/position, spherical rotations, contacts held from the
/// left key. Key frames are copied verbatim.
MotionBundle interpolate(const KeyActionSet& keys, const SkeletonSpec& skeleton);

/// Interpolated frame at `t` strictly inside the segment [keys.indices[i], keys.indices[i + 1]].
PoseFrame interpolate_pose(const PoseFrame& a, const PoseFrame& b, double alpha);
ObjectPose interpolate_object(const ObjectPose& a, const ObjectPose& b, double alpha);

/// Weighted error of reconstructing frames (a, b) from the endpoints alone, with the worst frame.
struct SegmentError {
  double error = 0.0;
  int frame = -1;  ///< -1 when the segment has no interior frames
};
SegmentError segment_error(const MotionBundle& b, const PointTracks& ref, std::span<const double> weights, int a,
                           int c);

struct ExtractionOptions {
  double epsilon = 0.05;  ///< meters
  JointWeights weights;
};

/// Recursive minimax splitting: start from {0, T-1}; any segment whose worst weighted error exceeds
/// epsilon is split at that frame (smallest index on ties) until every segment meets epsilon.
KeyActionSet extract_key_actions(const MotionBundle& b, const ExtractionOptions& opt);

/// Corpus-level extraction, parallel over sequences.
std::vector<KeyActionSet> extract_corpus(std::span<const MotionBundle> corpus, const ExtractionOptions& opt);
/// Serial reference of extract_corpus.
std::vector<KeyActionSet> extract_corpus_serial(std::span<const MotionBundle> corpus, const ExtractionOptions& opt);

/// `keyset` chunk: header, skeleton table, index list, then one frame record per key.
io::Chunk encode_keyset(const KeyActionSet& k, const SkeletonSpec& skeleton);
std::pair<KeyActionSet, SkeletonSpec> decode_keyset(const io::Chunk& c);

}  // namespace hoigen::keyaction
