#pragma once

#include <cstdint>
#include <string>

#include "hoigen/geometry/mesh.hpp"
#include "hoigen/io/motion_format.hpp"

namespace hoigen::synth {

/// Procedural "carry the box" sequences on the default humanoid: walk to a box resting at carry
/// height, raise the arms onto it, carry it along a Hermite curve, set it down and stand.
struct SynthConfig {
  int sequences = 200;
  std::uint64_t seed = 7;
  double frame_rate = 30.0;
  double speed_min = 0.8;   ///< m/s
  double speed_max = 1.2;
  double approach_min = 1.0;  ///< walking distance before the pick-up, m
  double approach_max = 2.5;
  double carry_min = 1.5;     ///< straight-line pick-up to set-down distance, m
  double carry_max = 3.5;
  int reach_frames = 15;
  int release_frames = 15;
  int idle_frames = 10;
  int waypoints = 3;
  double contact_threshold = 0.05;

  void validate() const;
};

struct SynthSequence {
  std::string name;  ///< "seq_0000"
  io::SequenceFile file;
  geometry::TriangleMesh mesh;
  int carry_begin = 0;  ///< first frame with the box attached to the hands
  int carry_end = 0;    ///< last attached frame
};

/// Sequence `index` of the corpus; depends only on (config, index).
SynthSequence generate_carry_sequence(const SynthConfig& cfg, int index);

}  // namespace hoigen::synth
