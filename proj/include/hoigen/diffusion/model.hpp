#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hoigen/core/skeleton.hpp"
#include "hoigen/diffusion/codec.hpp"
#include "hoigen/diffusion/denoiser.hpp"
#include "hoigen/diffusion/sampler.hpp"
#include "hoigen/diffusion/schedule.hpp"
#include "hoigen/keyaction/keyaction.hpp"

namespace hoigen::diffusion {

struct ScheduleConfig {
  int steps = 200;
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  bool operator==(const ScheduleConfig&) const = default;
};

/// Where the parameters came from.
struct SeedLineage {
  std::uint64_t root_seed = 0;
  std::uint64_t init_seed = 0;
  std::uint64_t train_seed = 0;
  std::int64_t steps_trained = 0;
  bool operator==(const SeedLineage&) const = default;
};

/// Everything needed to sample: weights, schedule, normalization, skeleton and the basis-point set
/// used to encode geometry.
struct Model {
  DenoiserParams params;
  ScheduleConfig schedule;
  Normalizer normalizer;
  SkeletonSpec skeleton;
  std::uint64_t basis_seed = 0;
  double basis_radius = 1.0;
  int n_over = 2;
  ConditionPolicy policy;
  SeedLineage lineage;

  WindowCodec codec() const { return WindowCodec(params.config.layout, normalizer); }
  NoiseSchedule noise_schedule() const { return build_schedule(schedule.steps, schedule.beta_start, schedule.beta_end); }
  void validate() const;
};

/// Samples one window for a world-space condition and decodes it to world space.
KeyWindow sample(const Model& model, const ConditionBundle& raw_condition, const SamplerOptions& options);
/// Same with an explicit denoiser (tests substitute oracles).
KeyWindow sample(const DenoiseFn& denoiser, const WindowCodec& codec, const NoiseSchedule& schedule,
                 const ConditionBundle& raw_condition, const SamplerOptions& options);

/// Goals of one window: waypoints (slot indices within the window) and the object target at the last slot.
struct WindowGoal {
  std::vector<SlotWaypoint> waypoints;
  Vec3 target = Vec3::Zero();
};

struct LongRequest {
  GivenSlot initial;
  Eigen::MatrixXd geometry;
  Eigen::VectorXd text;
  std::vector<WindowGoal> goals;  ///< one per window; the horizon is goals.size() windows
};

struct GeneratedSequence {
  std::vector<int> frames;  ///< strictly increasing, starting at 0
  std::vector<PoseFrame> poses;
  std::vector<ObjectPose> objects;
  std::vector<Contact4> contacts;
  int windows = 0;
  int repaired_rotations = 0;

  int size() const { return static_cast<int>(frames.size()); }
};

/// Window w > 0 is conditioned on the last `n_over` key actions of window w - 1, which appear once in
/// the output. Window w draws from derive_seed(seed, "window", w), window 0 from the seed itself.
GeneratedSequence autoregressive_generate(const DenoiseFn& denoiser, const WindowCodec& codec,
                                          const NoiseSchedule& schedule, const LongRequest& request, int n_over,
                                          const SamplerOptions& options);
GeneratedSequence autoregressive_generate(const Model& model, const LongRequest& request, int n_over,
                                          const SamplerOptions& options);

/// Key-action set with frames re-based to 0.
keyaction::KeyActionSet to_keyset(const GeneratedSequence& g, double frame_rate);
keyaction::KeyActionSet to_keyset(const KeyWindow& w, double frame_rate);

/// Checkpoint: "HOIGCKPT", u32 version, u64 header length, header (a binary container holding the
/// `model` chunk: dims, schedule, normalizer, skeleton, seed lineage), u64 parameter count, then the
/// parameters as little-endian 64-bit floats.
inline constexpr std::uint32_t kCheckpointVersion = 1;
std::string encode_checkpoint(const Model& m);
Model decode_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path& path, const Model& m);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace hoigen::diffusion
