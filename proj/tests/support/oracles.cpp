#include "support/oracles.hpp"

#include <limits>

#include "hoigen/core/error.hpp"

namespace hoigen::test {

std::vector<int> optimal_key_indices(const io::MotionBundle& b, const keyaction::ExtractionOptions& opt,
                                     int max_frames) {
  const int T = b.motion.length();
  if (T > max_frames) throw ValidationError("optimal_key_indices: sequence too long for the exhaustive oracle");
  const auto ref = keyaction::tracked_points(b);
  const auto w = keyaction::point_weights(opt.weights, b.skeleton.joint_count(), b.object.has_value());
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> best(static_cast<std::size_t>(T), kInf), prev(static_cast<std::size_t>(T), -1);
  best[0] = 1;
  for (int j = 1; j < T; ++j)
    for (int i = 0; i < j; ++i) {
      if (best[static_cast<std::size_t>(i)] == kInf) continue;
      if (keyaction::segment_error(b, ref, w, i, j).error > opt.epsilon) continue;
      if (best[static_cast<std::size_t>(i)] + 1 < best[static_cast<std::size_t>(j)]) {
        best[static_cast<std::size_t>(j)] = best[static_cast<std::size_t>(i)] + 1;
        prev[static_cast<std::size_t>(j)] = i;
      }
    }
  std::vector<int> keys;
  for (int k = T - 1; k >= 0; k = prev[static_cast<std::size_t>(k)]) keys.insert(keys.begin(), k);
  return keys;
}

}  // namespace hoigen::test
