#include "hoigen/tracking/tracking.hpp"

#include <cmath>
#include <string>

#include "hoigen/core/error.hpp"
#include "hoigen/core/kinematics.hpp"
#include "hoigen/core/rng.hpp"
#include "hoigen/core/rotation.hpp"

namespace hoigen::tracking {

namespace {

constexpr int kRolloutSchema = 1;

void check_finite(const Vec3& v, const char* what) {
  if (!v.allFinite()) throw ValidationError(std::string(what) + ": non-finite value");
}

void put_rot6d(Eigen::VectorXd& out, int& k, const Mat3& r) {
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 3; ++i) out[k++] = r(i, c);
}

void put_vec(Eigen::VectorXd& out, int& k, const Vec3& v) {
  for (int i = 0; i < 3; ++i) out[k++] = v[i];
}

double key_joint_norm(const std::vector<Vec3>& a, const std::vector<Vec3>& b, const std::vector<int>& keys) {
  double s = 0.0;
  for (int j : keys) s += (a[j] - b[j]).squaredNorm();
  return std::sqrt(s);
}

void check_key_joints(const std::vector<int>& keys, int joints) {
  if (keys.empty()) throw ValidationError("tracking: key-joint set is empty");
  for (int j : keys)
    if (j < 0 || j >= joints) throw ValidationError("tracking: key joint " + std::to_string(j) + " out of range");
}

double mean_keypoint_deviation(const ObjectSimState& sim, const ObjectSimState& ref, const std::vector<Vec3>& keypoints) {
  if (keypoints.empty()) return (sim.position - ref.position).norm();
  double s = 0.0;
  for (const auto& k : keypoints)
    s += ((sim.orientation * k + sim.position) - (ref.orientation * k + ref.position)).norm();
  return s / static_cast<double>(keypoints.size());
}

double mean_key_joint_deviation(const HumanoidSimState& sim, const HumanoidSimState& ref, const std::vector<int>& keys) {
  double s = 0.0;
  for (int j : keys) s += (sim.positions[j] - ref.positions[j]).norm();
  return s / static_cast<double>(keys.size());
}

// Incremental termination check, so rollouts and prefix checks share one rule.
class TerminationMonitor {
 public:
  TerminationMonitor(const std::vector<Vec3>& keypoints, const std::vector<int>& key_joints, const TerminationConfig& cfg)
      : keypoints_(keypoints), key_joints_(key_joints), cfg_(cfg) {}

  TerminationReason step(const FrameRecord& f) {
    const ContactFlags expected = expected_contacts(f.commanded);
    bool missing = false;
    for (int k = 0; k < 4; ++k) missing = missing || (expected[k] && !f.sim_object.contact[k]);
    missing_run_ = missing ? missing_run_ + 1 : 0;

    if (mean_keypoint_deviation(f.sim_object, f.ref_object, keypoints_) > cfg_.object_deviation)
      return TerminationReason::object_deviation;
    if (missing_run_ > cfg_.missing_contact_frames) return TerminationReason::contact_absence;
    if (!key_joints_.empty() && mean_key_joint_deviation(f.sim, f.ref, key_joints_) > cfg_.humanoid_drift)
      return TerminationReason::humanoid_drift;
    return TerminationReason::none;
  }

 private:
  const std::vector<Vec3>& keypoints_;
  const std::vector<int>& key_joints_;
  const TerminationConfig& cfg_;
  int missing_run_ = 0;
};

HumanoidSimState humanoid_state(const GlobalFrame& g, const std::vector<double>& shape) {
  return {g.positions, g.orientations, g.linear_velocity, g.angular_velocity, shape};
}

void write_humanoid(io::ChunkWriter& w, const HumanoidSimState& s) {
  w.i64(s.joint_count());
  for (int j = 0; j < s.joint_count(); ++j)
    w.vec3(s.positions[j]).mat3(s.orientations[j]).vec3(s.linear_velocity[j]).vec3(s.angular_velocity[j]);
  w.i64(static_cast<std::int64_t>(s.body_shape.size()));
  for (double b : s.body_shape) w.f64(b);
}

HumanoidSimState read_humanoid(io::ChunkReader& r) {
  HumanoidSimState s;
  const std::size_t n = r.count(4096);
  s.positions.resize(n);
  s.orientations.resize(n);
  s.linear_velocity.resize(n);
  s.angular_velocity.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    s.positions[j] = r.vec3();
    s.orientations[j] = r.mat3();
    s.linear_velocity[j] = r.vec3();
    s.angular_velocity[j] = r.vec3();
  }
  s.body_shape.resize(r.count(4096));
  for (auto& b : s.body_shape) b = r.f64();
  return s;
}

void write_object(io::ChunkWriter& w, const ObjectSimState& s) {
  w.vec3(s.position).mat3(s.orientation).vec3(s.linear_velocity).vec3(s.angular_velocity);
  for (bool c : s.contact) w.i64(c ? 1 : 0);
}

ObjectSimState read_object(io::ChunkReader& r) {
  ObjectSimState s;
  s.position = r.vec3();
  s.orientation = r.mat3();
  s.linear_velocity = r.vec3();
  s.angular_velocity = r.vec3();
  for (auto& c : s.contact) c = r.i64() != 0;
  return s;
}

}  // namespace

void HumanoidSimState::validate() const {
  const auto n = positions.size();
  if (orientations.size() != n || linear_velocity.size() != n || angular_velocity.size() != n)
    throw ValidationError("humanoid state: per-link arrays differ in length");
  for (std::size_t j = 0; j < n; ++j) {
    if (!is_rotation(orientations[j], 1e-6)) throw ValidationError("humanoid state: orientation not orthonormal");
    check_finite(positions[j], "humanoid state");
    check_finite(linear_velocity[j], "humanoid state");
    check_finite(angular_velocity[j], "humanoid state");
  }
}

void ObjectSimState::validate() const {
  if (!is_rotation(orientation, 1e-6)) throw ValidationError("object state: orientation not orthonormal");
  check_finite(position, "object state");
  check_finite(linear_velocity, "object state");
  check_finite(angular_velocity, "object state");
}

void RewardWeights::validate(int joint_count) const {
  for (double w : {joint_position, joint_rotation, joint_velocity, joint_angular_velocity, contact, object_position,
                   object_rotation, object_velocity, object_angular_velocity})
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("reward weights: weights must be finite and nonnegative");
  if (!(human_sum() + contact > 0.0)) throw ValidationError("reward weights: human weights sum to zero");
  if (!(object_sum() > 0.0)) throw ValidationError("reward weights: object weights sum to zero");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("reward weights: alpha outside [0, 1]");
  check_key_joints(key_joints, joint_count);
}

void TerminationConfig::validate() const {
  if (!(object_deviation > 0.0)) throw ValidationError("termination: object deviation limit must be positive");
  if (missing_contact_frames <= 0) throw ValidationError("termination: missing-contact limit must be positive");
  if (!(humanoid_drift > 0.0)) throw ValidationError("termination: humanoid drift limit must be positive");
}

ContactFlags expected_contacts(const Contact4& commanded) {
  ContactFlags out{};
  for (int k = 0; k < 4; ++k) out[k] = commanded[k] >= 0.5;
  return out;
}

std::array<double, 4> contact_xnor(const ContactFlags& expected, const ContactFlags& actual) {
  std::array<double, 4> out{};
  for (int k = 0; k < 4; ++k) out[k] = expected[k] == actual[k] ? 1.0 : 0.0;
  return out;
}

Eigen::VectorXd build_humanoid_obs(const HumanoidSimState& sim, const HumanoidSimState& ref_next) {
  const int J = sim.joint_count();
  if (ref_next.joint_count() != J) throw ValidationError("humanoid observation: joint counts differ");
  sim.validate();
  ref_next.validate();
  Eigen::VectorXd out(24 * J);
  int k = 0;
  for (int j = 0; j < J; ++j) put_rot6d(out, k, rotation_difference(ref_next.orientations[j], sim.orientations[j]));
  for (int j = 0; j < J; ++j) put_vec(out, k, ref_next.positions[j] - sim.positions[j]);
  for (int j = 0; j < J; ++j) put_vec(out, k, ref_next.linear_velocity[j] - sim.linear_velocity[j]);
  for (int j = 0; j < J; ++j) put_vec(out, k, ref_next.angular_velocity[j] - sim.angular_velocity[j]);
  for (int j = 0; j < J; ++j) put_rot6d(out, k, ref_next.orientations[j]);
  for (int j = 0; j < J; ++j) put_vec(out, k, ref_next.positions[j]);
  return out;
}

Eigen::VectorXd build_object_obs(const ObjectSimState& sim, const ObjectSimState& ref_next, const Contact4& commanded_next) {
  sim.validate();
  ref_next.validate();
  Eigen::VectorXd out(32);
  int k = 0;
  put_rot6d(out, k, rotation_difference(ref_next.orientation, sim.orientation));
  put_vec(out, k, ref_next.position - sim.position);
  put_vec(out, k, ref_next.linear_velocity - sim.linear_velocity);
  put_vec(out, k, ref_next.angular_velocity - sim.angular_velocity);
  for (double x : contact_xnor(expected_contacts(commanded_next), sim.contact)) out[k++] = x;
  put_rot6d(out, k, ref_next.orientation);
  put_vec(out, k, ref_next.position);
  for (double c : commanded_next) out[k++] = c;
  return out;
}

HumanRewardTerms human_tracking_reward(const HumanoidSimState& sim, const HumanoidSimState& ref,
                                       const ContactFlags& actual, const Contact4& commanded, const RewardWeights& w) {
  const int J = sim.joint_count();
  if (ref.joint_count() != J) throw ValidationError("human reward: joint counts differ");
  check_key_joints(w.key_joints, J);

  double dq = 0.0;
  for (int j : w.key_joints) dq += rotation_angle(rotation_difference(ref.orientations[j], sim.orientations[j]));

  HumanRewardTerms t;
  t.position = w.joint_position * std::exp(-100.0 * key_joint_norm(sim.positions, ref.positions, w.key_joints));
  t.rotation = w.joint_rotation * std::exp(-10.0 * dq);
  t.velocity = w.joint_velocity * std::exp(-0.1 * key_joint_norm(sim.linear_velocity, ref.linear_velocity, w.key_joints));
  t.angular_velocity =
      w.joint_angular_velocity * std::exp(-0.1 * key_joint_norm(sim.angular_velocity, ref.angular_velocity, w.key_joints));
  double agree = 0.0;
  for (double x : contact_xnor(expected_contacts(commanded), actual)) agree += x * x;
  t.contact = w.contact * std::sqrt(agree);
  t.total = t.position + t.rotation + t.velocity + t.angular_velocity + t.contact;
  return t;
}

ObjectRewardTerms object_reward(const ObjectSimState& sim, const ObjectSimState& ref, const RewardWeights& w) {
  ObjectRewardTerms t;
  t.position = w.object_position * std::exp(-100.0 * (sim.position - ref.position).norm());
  t.rotation = w.object_rotation * std::exp(-10.0 * rotation_angle(rotation_difference(ref.orientation, sim.orientation)));
  t.velocity = w.object_velocity * std::exp(-5.0 * (sim.linear_velocity - ref.linear_velocity).norm());
  t.angular_velocity = w.object_angular_velocity * std::exp(-5.0 * (sim.angular_velocity - ref.angular_velocity).norm());
  t.total = t.position + t.rotation + t.velocity + t.angular_velocity;
  return t;
}

double total_reward(double human, double object, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("total reward: alpha outside [0, 1]");
  return alpha * human + (1.0 - alpha) * object;
}

std::string to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::none: return "none";
    case TerminationReason::object_deviation: return "object-deviation";
    case TerminationReason::contact_absence: return "contact-absence";
    case TerminationReason::humanoid_drift: return "humanoid-drift";
  }
  return "none";
}

TerminationReason termination_reason_from_string(const std::string& s) {
  for (auto r : {TerminationReason::none, TerminationReason::object_deviation, TerminationReason::contact_absence,
                 TerminationReason::humanoid_drift})
    if (to_string(r) == s) return r;
  throw FormatError("unknown termination reason '" + s + "'");
}

Termination check_early_termination(std::span<const FrameRecord> prefix, const std::vector<Vec3>& keypoints,
                                    const std::vector<int>& key_joints, const TerminationConfig& cfg) {
  if (prefix.empty()) throw ValidationError("early termination: empty rollout prefix");
  cfg.validate();
  TerminationMonitor monitor(keypoints, key_joints, cfg);
  for (std::size_t t = 0; t < prefix.size(); ++t) {
    const auto reason = monitor.step(prefix[t]);
    if (reason != TerminationReason::none) return {true, static_cast<int>(t), reason};
  }
  return {};
}

void RolloutReference::validate() const {
  skeleton.validate();
  const int T = human.length();
  if (T < 2) throw ValidationError("rollout reference: need at least two frames");
  if (object.length() != T || commanded.length() != T)
    throw ValidationError("rollout reference: human, object and contact lengths differ");
  if (human.joint_count() != skeleton.joint_count()) throw ValidationError("rollout reference: joint count mismatch");
  object.validate();
  commanded.validate();
}

RolloutLog oracle_rollout(const RolloutReference& ref, const NoiseModel& noise, std::uint64_t seed,
                          const RewardWeights& weights_in, const TerminationConfig& termination) {
  ref.validate();
  termination.validate();
  if (!(noise.position_sigma >= 0.0)) throw ValidationError("noise model: sigma must be nonnegative");
  const int T = ref.human.length();
  const int J = ref.skeleton.joint_count();

  RewardWeights weights = weights_in;
  if (weights.key_joints.empty()) weights.key_joints = ref.skeleton.key_joints();
  weights.validate(J);

  GlobalMotion ref_human = ref.human;
  fill_velocities(ref_human);
  GlobalMotion sim_human = ref_human;
  std::vector<Vec3> ref_obj_pos(T), sim_obj_pos(T);
  std::vector<Mat3> obj_rot(T);
  for (int t = 0; t < T; ++t) {
    ref_obj_pos[t] = sim_obj_pos[t] = ref.object.poses[t].position;
    obj_rot[t] = ref.object.poses[t].rotation;
  }
  std::vector<ContactFlags> actual(T);
  for (int t = 0; t < T; ++t) actual[t] = expected_contacts(ref.commanded.frames[t]);

  if (noise.position_sigma > 0.0) {
    Rng rng(seed);
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < J; ++j)
        for (int a = 0; a < 3; ++a) sim_human.frames[t].positions[j][a] += noise.position_sigma * rng.normal();
      for (int a = 0; a < 3; ++a) sim_obj_pos[t][a] += noise.position_sigma * rng.normal();
    }
  }
  for (const auto& f : noise.faults) {
    if (f.frame < 0 || f.frame >= T) throw ValidationError("noise model: fault frame out of range");
    const int last = f.until < 0 ? T - 1 : std::min(f.until, T - 1);
    if (last < f.frame) throw ValidationError("noise model: fault ends before it starts");
    if (f.kind == ScriptedFault::Kind::contact_drop && (f.channel < -1 || f.channel > 3))
      throw ValidationError("noise model: contact channel out of range");
    for (int t = f.frame; t <= last; ++t) {
      switch (f.kind) {
        case ScriptedFault::Kind::object_offset: sim_obj_pos[t] += f.offset; break;
        case ScriptedFault::Kind::humanoid_offset:
          for (auto& p : sim_human.frames[t].positions) p += f.offset;
          break;
        case ScriptedFault::Kind::contact_drop:
          for (int k = 0; k < 4; ++k)
            if (f.channel < 0 || f.channel == k) actual[t][k] = false;
          break;
      }
    }
  }
  fill_velocities(sim_human);
  const auto [ref_ov, ref_ow] = finite_difference_velocities(ref_obj_pos, obj_rot, ref.object.frame_rate);
  const auto [sim_ov, sim_ow] = finite_difference_velocities(sim_obj_pos, obj_rot, ref.object.frame_rate);

  RolloutLog log;
  log.reference_length = T;
  log.frame_rate = ref.human.frame_rate;
  log.key_joints = weights.key_joints;
  if (!ref.mesh.empty()) {
    const auto corners = ref.mesh.bbox_corners();
    log.object_keypoints.assign(corners.begin(), corners.end());
  }
  const auto shape = ref.skeleton.limb_lengths();
  TerminationMonitor monitor(log.object_keypoints, log.key_joints, termination);
  log.frames.reserve(T);
  for (int t = 0; t < T; ++t) {
    FrameRecord f;
    f.sim = humanoid_state(sim_human.frames[t], shape);
    f.ref = humanoid_state(ref_human.frames[t], shape);
    f.sim_object = {sim_obj_pos[t], obj_rot[t], sim_ov[t], sim_ow[t], actual[t]};
    f.ref_object = {ref_obj_pos[t], obj_rot[t], ref_ov[t], ref_ow[t], expected_contacts(ref.commanded.frames[t])};
    f.commanded = ref.commanded.frames[t];
    f.human = human_tracking_reward(f.sim, f.ref, actual[t], f.commanded, weights);
    f.object = object_reward(f.sim_object, f.ref_object, weights);
    f.reward = total_reward(f.human.total, f.object.total, weights.alpha);
    log.frames.push_back(std::move(f));
    const auto reason = monitor.step(log.frames.back());
    if (reason != TerminationReason::none) {
      log.termination = {true, t, reason};
      break;
    }
  }
  return log;
}

std::vector<RolloutLog> oracle_rollouts(std::span<const RolloutReference> refs, const NoiseModel& noise,
                                        std::uint64_t seed, const RewardWeights& weights,
                                        const TerminationConfig& termination) {
  const auto n = static_cast<std::int64_t>(refs.size());
  std::vector<RolloutLog> out(refs.size());
  std::string error;
  bool failed = false;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[i] = oracle_rollout(refs[i], noise, derive_seed(seed, "rollout", static_cast<std::uint64_t>(i)), weights,
                              termination);
    } catch (const std::exception& e) {
#pragma omp critical(hoigen_rollout_error)
      if (!failed) {
        failed = true;
        error = "rollout " + std::to_string(i) + ": " + e.what();
      }
    }
  }
  if (failed) throw ValidationError(error);
  return out;
}

std::vector<RolloutLog> oracle_rollouts_serial(std::span<const RolloutReference> refs, const NoiseModel& noise,
                                               std::uint64_t seed, const RewardWeights& weights,
                                               const TerminationConfig& termination) {
  std::vector<RolloutLog> out;
  out.reserve(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    try {
      out.push_back(oracle_rollout(refs[i], noise, derive_seed(seed, "rollout", i), weights, termination));
    } catch (const std::exception& e) {
      throw ValidationError("rollout " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

bool reaches_target(const RolloutLog& log, const Vec3& target, double radius) {
  if (log.frames.empty()) throw ValidationError("target check: empty rollout");
  return (log.frames.back().sim_object.position - target).norm() <= radius;
}

io::MotionBundle executed_motion(const RolloutLog& log, const SkeletonSpec& skeleton) {
  if (log.frames.size() < 2) throw ValidationError("executed motion: need at least two frames");
  GlobalMotion g;
  g.frame_rate = log.frame_rate;
  ObjectTrajectory obj;
  obj.frame_rate = log.frame_rate;
  ContactChannels contacts;
  for (const auto& f : log.frames) {
    g.frames.push_back({f.sim.positions, f.sim.orientations, f.sim.linear_velocity, f.sim.angular_velocity});
    obj.poses.push_back({f.sim_object.position, f.sim_object.orientation});
    Contact4 c{};
    for (int k = 0; k < 4; ++k) c[k] = f.sim_object.contact[k] ? 1.0 : 0.0;
    contacts.frames.push_back(c);
  }
  io::MotionBundle b;
  b.skeleton = skeleton;
  b.motion = global_to_relative(skeleton, g);
  b.object = std::move(obj);
  b.contacts = std::move(contacts);
  b.validate();
  return b;
}

std::vector<keyaction::TrainingWindow> filter_successful_rollouts(std::span<const RolloutCandidate> rollouts,
                                                                  const SkeletonSpec& skeleton,
                                                                  const FilterOptions& options) {
  std::vector<keyaction::TrainingWindow> out;
  for (const auto& c : rollouts) {
    if (c.log == nullptr || c.log->termination.terminated) continue;
    if (c.log->length() != c.log->reference_length || c.log->length() < 2) continue;
    if (!reaches_target(*c.log, c.target, options.target_radius)) continue;
    const auto bundle = executed_motion(*c.log, skeleton);
    const auto keys = keyaction::extract_key_actions(bundle, options.extraction);
    auto windows = keyaction::build_training_windows(bundle, keys, options.window_key_count, options.stride, c.prompt,
                                                     c.mesh);
    for (auto& w : windows) out.push_back(std::move(w));
  }
  return out;
}

io::Chunk encode_rollout(const RolloutLog& log) {
  io::ChunkWriter w("rollout");
  w.i64(kRolloutSchema).i64(log.reference_length).f64(log.frame_rate).i64(log.length());
  w.i64(log.termination.terminated ? 1 : 0).i64(log.termination.frame).str(to_string(log.termination.reason));
  w.newline();
  w.i64(static_cast<std::int64_t>(log.key_joints.size()));
  for (int j : log.key_joints) w.i64(j);
  w.i64(static_cast<std::int64_t>(log.object_keypoints.size()));
  for (const auto& k : log.object_keypoints) w.vec3(k);
  w.newline();
  for (const auto& f : log.frames) {
    write_humanoid(w, f.sim);
    write_humanoid(w, f.ref);
    write_object(w, f.sim_object);
    write_object(w, f.ref_object);
    for (double c : f.commanded) w.f64(c);
    w.f64(f.human.position).f64(f.human.rotation).f64(f.human.velocity).f64(f.human.angular_velocity)
        .f64(f.human.contact).f64(f.human.total);
    w.f64(f.object.position).f64(f.object.rotation).f64(f.object.velocity).f64(f.object.angular_velocity)
        .f64(f.object.total);
    w.f64(f.reward);
    w.newline();
  }
  return std::move(w).finish();
}

RolloutLog decode_rollout(const io::Chunk& c) {
  if (c.tag != "rollout") throw FormatError("expected a 'rollout' chunk, got '" + c.tag + "'");
  io::ChunkReader r(c);
  if (r.i64() != kRolloutSchema) throw FormatError("rollout: unsupported schema");
  RolloutLog log;
  log.reference_length = static_cast<int>(r.count(1 << 24));
  log.frame_rate = r.f64();
  const std::size_t n = r.count(static_cast<std::size_t>(log.reference_length));
  log.termination.terminated = r.i64() != 0;
  log.termination.frame = static_cast<int>(r.i64());
  log.termination.reason = termination_reason_from_string(r.str());
  log.key_joints.resize(r.count(4096));
  for (auto& j : log.key_joints) j = static_cast<int>(r.i64());
  log.object_keypoints.resize(r.count(4096));
  for (auto& k : log.object_keypoints) k = r.vec3();
  log.frames.resize(n);
  for (auto& f : log.frames) {
    f.sim = read_humanoid(r);
    f.ref = read_humanoid(r);
    f.sim_object = read_object(r);
    f.ref_object = read_object(r);
    for (auto& x : f.commanded) x = r.f64();
    f.human = {r.f64(), r.f64(), r.f64(), r.f64(), r.f64(), r.f64()};
    f.object = {r.f64(), r.f64(), r.f64(), r.f64(), r.f64()};
    f.reward = r.f64();
  }
  r.expect_done();
  if (log.termination.terminated && log.termination.frame != static_cast<int>(n) - 1)
    throw FormatError("rollout: termination frame is not the last logged frame");
  return log;
}

}  // namespace hoigen::tracking
