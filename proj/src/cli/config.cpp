#include "hoigen/cli/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <sstream>

#include "hoigen/core/error.hpp"
#include "hoigen/io/container.hpp"

namespace hoigen::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto s = trim(text);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError("config: bad value '" + text + "' for " + key);
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const auto s = trim(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ValidationError("config: bad boolean '" + text + "' for " + key);
}

template <class T>
std::string show(T v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
ConfigField number(const char* name, T RunConfig::*member, const char* help) {
  return {name, false, help,
          [name, member](RunConfig& c, const std::string& v) { c.*member = parse_number<T>(name, v); },
          [member](const RunConfig& c) { return show(c.*member); }};
}

ConfigField flag(const char* name, bool RunConfig::*member, const char* help) {
  return {name, false, help, [name, member](RunConfig& c, const std::string& v) { c.*member = parse_bool(name, v); },
          [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

ConfigField path(const char* name, std::filesystem::path RunConfig::*member, const char* help) {
  return {name, true, help, [member](RunConfig& c, const std::string& v) { c.*member = trim(v); },
          [member](const RunConfig& c) { return (c.*member).string(); }};
}

ConfigField text(const char* name, std::string RunConfig::*member, const char* help) {
  return {name, false, help, [member](RunConfig& c, const std::string& v) { c.*member = trim(v); },
          [member](const RunConfig& c) { return c.*member; }};
}

std::vector<ConfigField> make_fields() {
  std::vector<ConfigField> f;
  f.push_back(path("input", &RunConfig::input, "input file or directory"));
  f.push_back(path("output", &RunConfig::output, "output directory (report: output file)"));
  f.push_back(path("reference", &RunConfig::reference, "ground-truth directory for metrics"));
  f.push_back(path("checkpoint", &RunConfig::checkpoint, "model checkpoint (train: initial weights)"));
  f.push_back(path("windows", &RunConfig::windows, "training-window file for train"));
  f.push_back({"seed", false, "root seed",
               [](RunConfig& c, const std::string& v) {
                 // An empty value clears the seed so dumped configurations read back unchanged.
                 if (v.empty())
                   c.seed.reset();
                 else
                   c.seed = parse_number<std::uint64_t>("seed", v);
               },
               [](const RunConfig& c) { return c.seed ? show(*c.seed) : std::string(); }});

  f.push_back(number("epsilon", &RunConfig::epsilon, "key-action error bound, m"));
  f.push_back(number("critical_weight", &RunConfig::critical_weight, "joint weight of hands and feet"));
  f.push_back(number("object_weight", &RunConfig::object_weight, "weight of object marker points"));
  f.push_back(number("window_keys", &RunConfig::window_keys, "key actions per training window"));
  f.push_back(number("window_stride", &RunConfig::window_stride, "key actions between window starts"));
  f.push_back(number("waypoint_stride", &RunConfig::waypoint_stride, "slots between waypoint conditions"));
  f.push_back(number("n_over", &RunConfig::n_over, "overlapping key actions between long-generation windows"));

  f.push_back(number("hidden", &RunConfig::hidden, "denoiser width"));
  f.push_back(number("mlp", &RunConfig::mlp, "denoiser feed-forward width"));
  f.push_back(number("blocks", &RunConfig::blocks, "denoiser blocks"));
  f.push_back(number("text_dim", &RunConfig::text_dim, "text embedding size"));
  f.push_back(number("noise_embed_dim", &RunConfig::noise_embed_dim, "noise-level embedding size"));
  f.push_back(number("projected_points", &RunConfig::projected_points, "learned geometry projection size"));
  f.push_back(number("basis_points", &RunConfig::basis_points, "basis points of the geometry encoding"));
  f.push_back(number("basis_seed", &RunConfig::basis_seed, "seed of the basis point set"));
  f.push_back(number("basis_radius", &RunConfig::basis_radius, "radius of the basis point ball, m"));
  f.push_back(number("diffusion_steps", &RunConfig::diffusion_steps, "noise levels N"));
  f.push_back(number("beta_start", &RunConfig::beta_start, "first beta of the linear schedule"));
  f.push_back(number("beta_end", &RunConfig::beta_end, "last beta of the linear schedule"));

  f.push_back(number("train_steps", &RunConfig::train_steps, "optimizer steps"));
  f.push_back(number("train_epochs", &RunConfig::train_epochs, "passes over the corpus (overrides train_steps)"));
  f.push_back(number("batch_size", &RunConfig::batch_size, "windows per step"));
  f.push_back(number("learning_rate", &RunConfig::learning_rate, "initial Adam learning rate"));
  f.push_back(number("finetune_learning_rate", &RunConfig::finetune_learning_rate,
                     "initial Adam learning rate when fine-tuning a checkpoint"));
  f.push_back(number("final_lr_fraction", &RunConfig::final_lr_fraction, "learning rate at the end, as a fraction"));
  f.push_back(number("grad_clip", &RunConfig::grad_clip, "global gradient norm limit (<= 0 disables)"));
  f.push_back(number("max_given", &RunConfig::max_given, "most leading slots revealed during training"));

  f.push_back(number("given_slots", &RunConfig::given_slots, "leading slots revealed when sampling"));
  f.push_back(flag("impose_known", &RunConfig::impose_known, "overwrite conditioned entries at every step"));
  f.push_back(number("long_windows", &RunConfig::long_windows, "windows of long generation (0: cover the input)"));

  f.push_back(number("synth_sequences", &RunConfig::synth_sequences, "sequences in the synthetic corpus"));
  f.push_back(number("synth_speed_min", &RunConfig::synth_speed_min, "slowest walking speed, m/s"));
  f.push_back(number("synth_speed_max", &RunConfig::synth_speed_max, "fastest walking speed, m/s"));
  f.push_back(number("synth_approach_min", &RunConfig::synth_approach_min, "shortest approach walk, m"));
  f.push_back(number("synth_approach_max", &RunConfig::synth_approach_max, "longest approach walk, m"));
  f.push_back(number("synth_carry_min", &RunConfig::synth_carry_min, "shortest carry, m"));
  f.push_back(number("synth_carry_max", &RunConfig::synth_carry_max, "longest carry, m"));
  f.push_back(number("synth_waypoints", &RunConfig::synth_waypoints, "annotated waypoints per sequence"));
  f.push_back(number("contact_threshold", &RunConfig::contact_threshold, "contact distance, m"));

  f.push_back(number("reward_joint_position", &RunConfig::reward_joint_position, "human position weight"));
  f.push_back(number("reward_joint_rotation", &RunConfig::reward_joint_rotation, "human rotation weight"));
  f.push_back(number("reward_joint_velocity", &RunConfig::reward_joint_velocity, "human velocity weight"));
  f.push_back(number("reward_joint_angular_velocity", &RunConfig::reward_joint_angular_velocity,
                     "human angular velocity weight"));
  f.push_back(number("reward_contact", &RunConfig::reward_contact, "contact agreement weight"));
  f.push_back(number("reward_object_position", &RunConfig::reward_object_position, "object position weight"));
  f.push_back(number("reward_object_rotation", &RunConfig::reward_object_rotation, "object rotation weight"));
  f.push_back(number("reward_object_velocity", &RunConfig::reward_object_velocity, "object velocity weight"));
  f.push_back(number("reward_object_angular_velocity", &RunConfig::reward_object_angular_velocity,
                     "object angular velocity weight"));
  f.push_back(number("reward_alpha", &RunConfig::reward_alpha, "human share of the blended reward"));
  f.push_back(number("term_object_deviation", &RunConfig::term_object_deviation, "object keypoint limit, m"));
  f.push_back(number("term_missing_contact_frames", &RunConfig::term_missing_contact_frames,
                     "tolerated consecutive frames without expected contact"));
  f.push_back(number("term_humanoid_drift", &RunConfig::term_humanoid_drift, "key-joint drift limit, m"));
  f.push_back(number("noise_sigma", &RunConfig::noise_sigma, "oracle position jitter, m"));
  f.push_back(text("faults", &RunConfig::faults, "scripted oracle faults"));

  f.push_back(number("target_radius", &RunConfig::target_radius, "target success radius, m"));
  f.push_back(number("min_contact_segment", &RunConfig::min_contact_segment, "shortest scored contact run, frames"));
  f.push_back(number("foot_max_height", &RunConfig::foot_max_height, "height scale of foot sliding, m"));
  f.push_back(number("foot_contact_height", &RunConfig::foot_contact_height, "foot contact height, m"));
  f.push_back(flag("mpjpe_root_relative", &RunConfig::mpjpe_root_relative, "root-relative MPJPE"));
  f.push_back(text("format", &RunConfig::format, "report format: table or csv"));
  return f;
}

}  // namespace

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = make_fields();
  return fields;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : config_fields())
    if (f.name == key) {
      f.set(cfg, value);
      return;
    }
  throw ValidationError("config: unknown key '" + key + "'");
}

void apply_config_text(RunConfig& cfg, const std::string& text, const std::filesystem::path& base_dir) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(number) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    set_config_value(cfg, key, value);
    for (const auto& f : config_fields())
      if (f.name == key && f.is_path && !value.empty() && !base_dir.empty()) {
        const std::filesystem::path p(value);
        if (p.is_relative()) f.set(cfg, (base_dir / p).lexically_normal().string());
      }
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_bytes(path);
  } catch (const Error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  apply_config_text(cfg, text, path.parent_path());
}

std::string environment_name(const std::string& key) {
  std::string out = "HOIGEN_";
  for (char c : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

void apply_environment(RunConfig& cfg) {
  for (const auto& f : config_fields()) {
    if (!f.is_path) continue;
    if (const char* v = std::getenv(environment_name(f.name).c_str()); v != nullptr && *v != '\0') f.set(cfg, v);
  }
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : config_fields()) out += f.name + " = " + f.get(cfg) + "\n";
  return out;
}

}  // namespace hoigen::cli
