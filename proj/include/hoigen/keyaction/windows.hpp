#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hoigen/keyaction/keyaction.hpp"

namespace hoigen::keyaction {

struct WindowEntry {
  int frame = 0;  ///< frame index in the source sequence
  PoseFrame pose;
  ObjectPose object;
  Contact4 contact{};
};

/// One generator training sample: a dense initial state followed by a fixed number of key actions.
struct TrainingWindow {
  WindowEntry initial;
  std::vector<WindowEntry> keys;
  std::vector<std::uint8_t> valid;  ///< 0 marks padding (a repeat of the final key action)
  std::string prompt;
  std::string mesh;

  int valid_count() const;
  void validate(int joint_count) const;
};

/// Window w starts at key w * stride: its initial state is the dense frame at that key, followed by
/// the next `window_key_count` key actions. Windows are emitted while at least one key action
/// follows the start, stopping after the first window that needs padding.
std::vector<TrainingWindow> build_training_windows(const MotionBundle& sequence, const KeyActionSet& keys,
                                                   int window_key_count, int stride, const std::string& prompt = {},
                                                   const std::string& mesh = {});

/// `windows` chunk: header (schema, count, keys per window, skeleton table) then per window the
/// prompt, mesh, initial entry and key entries with validity flags.
io::Chunk encode_windows(const std::vector<TrainingWindow>& windows, const SkeletonSpec& skeleton, int window_key_count);
struct WindowSet {
  SkeletonSpec skeleton;
  int window_key_count = 0;
  std::vector<TrainingWindow> windows;
};
WindowSet decode_windows(const io::Chunk& c);

}  // namespace hoigen::keyaction
