#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hoigen::cli {

/// Every setting a command may read. Keys in config files, environment variables and flags use
/// the field names below.
struct RunConfig {
  // paths
  std::filesystem::path input;
  std::filesystem::path output;
  std::filesystem::path reference;
  std::filesystem::path checkpoint;
  std::filesystem::path windows;

  std::optional<std::uint64_t> seed;

  // key actions and windows
  double epsilon = 0.05;
  double critical_weight = 2.0;
  double object_weight = 1.0;
  int window_keys = 8;
  int window_stride = 4;
  int waypoint_stride = 2;
  int n_over = 2;

  // denoiser and schedule
  int hidden = 64;
  int mlp = 128;
  int blocks = 2;
  int text_dim = 512;
  int noise_embed_dim = 32;
  int projected_points = 256;
  int basis_points = 1024;
  std::uint64_t basis_seed = 1;
  double basis_radius = 0.6;
  int diffusion_steps = 100;
  double beta_start = 1e-4;
  double beta_end = 2e-2;

  // training
  int train_steps = 5000;
  int train_epochs = 0;  ///< > 0 replaces train_steps by whole passes over the corpus
  int batch_size = 32;
  double learning_rate = 2e-3;
  double finetune_learning_rate = 1e-4;  ///< used instead when starting from a checkpoint
  double final_lr_fraction = 0.1;
  double grad_clip = 1.0;
  int max_given = 2;

  // sampling
  int given_slots = 1;
  bool impose_known = false;
  int long_windows = 0;  ///< 0 covers the reference's key actions

  // synthetic corpus
  int synth_sequences = 200;
  double synth_speed_min = 0.8;
  double synth_speed_max = 1.2;
  double synth_approach_min = 1.0;
  double synth_approach_max = 2.5;
  double synth_carry_min = 1.5;
  double synth_carry_max = 3.5;
  int synth_waypoints = 3;
  double contact_threshold = 0.05;

  // rewards, termination, oracle noise
  double reward_joint_position = 1.0;
  double reward_joint_rotation = 1.0;
  double reward_joint_velocity = 1.0;
  double reward_joint_angular_velocity = 1.0;
  double reward_contact = 1.0;
  double reward_object_position = 1.0;
  double reward_object_rotation = 1.0;
  double reward_object_velocity = 1.0;
  double reward_object_angular_velocity = 1.0;
  double reward_alpha = 0.5;
  double term_object_deviation = 0.5;
  int term_missing_contact_frames = 10;
  double term_humanoid_drift = 0.5;
  double noise_sigma = 0.0;
  std::string faults;  ///< "kind@frame[-until][:args]" entries separated by ';'

  // metrics and reports
  double target_radius = 0.5;
  int min_contact_segment = 5;
  double foot_max_height = 0.05;
  double foot_contact_height = 0.05;
  bool mpjpe_root_relative = true;
  std::string format = "table";
};

struct ConfigField {
  std::string name;
  bool is_path = false;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

/// All keys in declaration order.
const std::vector<ConfigField>& config_fields();

/// Sets one key; unknown keys and unparsable values raise ValidationError.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// `key = value` lines; '#' starts a comment; blank lines are ignored. Relative paths are resolved
/// against `base_dir`.
void apply_config_text(RunConfig& cfg, const std::string& text, const std::filesystem::path& base_dir = {});
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// HOIGEN_<KEY> for path keys only (HOIGEN_INPUT, HOIGEN_OUTPUT, ...).
void apply_environment(RunConfig& cfg);
std::string environment_name(const std::string& key);

/// Canonical `key = value` dump, one line per key.
std::string dump_config(const RunConfig& cfg);

}  // namespace hoigen::cli
