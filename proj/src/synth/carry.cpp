#include "hoigen/synth/carry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "hoigen/core/error.hpp"
#include "hoigen/core/kinematics.hpp"
#include "hoigen/core/rng.hpp"
#include "hoigen/core/rotation.hpp"
#include "hoigen/geometry/contacts.hpp"

namespace hoigen::synth {

void SynthConfig::validate() const {
  if (sequences < 1) throw ValidationError("synth: sequences must be >= 1");
  if (!(frame_rate > 0.0)) throw ValidationError("synth: frame rate must be positive");
  if (!(speed_min > 0.0 && speed_min <= speed_max)) throw ValidationError("synth: invalid speed range");
  if (!(approach_min > 0.0 && approach_min <= approach_max)) throw ValidationError("synth: invalid approach range");
  if (!(carry_min > 0.0 && carry_min <= carry_max)) throw ValidationError("synth: invalid carry range");
  if (reach_frames < 2 || release_frames < 2 || idle_frames < 0 || waypoints < 0)
    throw ValidationError("synth: invalid phase lengths");
  if (!(contact_threshold > 0.0)) throw ValidationError("synth: contact threshold must be positive");
}

namespace {

constexpr double kStride = 1.3;  // metres per full gait cycle

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

Mat3 rot_y(double a) { return axis_angle(Vec3::UnitY(), a); }
Mat3 rot_z(double a) { return axis_angle(Vec3::UnitZ(), a); }

/// Body state of one frame before it is turned into joint rotations.
struct BodyState {
  Eigen::Vector2d root = Eigen::Vector2d::Zero();
  double yaw = 0.0;
  double phase = 0.0;
  double gait = 0.0;  // 0 standing, 1 full stride
  double arms = 0.0;  // 0 hanging, 1 carry pose
};

struct ArmPose {
  double shoulder = -0.55;
  double elbow = -0.85;
};

PoseFrame make_pose(const SkeletonSpec& s, const BodyState& b, const ArmPose& carry) {
  std::vector<Mat3> local(static_cast<std::size_t>(s.joint_count()), Mat3::Identity());
  auto set = [&](const char* name, const Mat3& r) {
    for (int j = 0; j < s.joint_count(); ++j)
      if (s.names[static_cast<std::size_t>(j)] == name) {
        local[static_cast<std::size_t>(j)] = r;
        return;
      }
    throw ValidationError(std::string("synth: skeleton lacks joint ") + name);
  };
  const double sp = std::sin(b.phase);
  set("pelvis", rot_z(b.yaw));
  set("l_hip", rot_y(-0.35 * b.gait * sp));
  set("r_hip", rot_y(0.35 * b.gait * sp));
  set("l_knee", rot_y(0.5 * b.gait * std::max(0.0, sp)));
  set("r_knee", rot_y(0.5 * b.gait * std::max(0.0, -sp)));
  const double swing = 0.25 * b.gait * sp;
  set("l_shoulder", rot_y((1.0 - b.arms) * swing + b.arms * carry.shoulder));
  set("r_shoulder", rot_y(-(1.0 - b.arms) * swing + b.arms * carry.shoulder));
  set("l_elbow", rot_y(b.arms * carry.elbow));
  set("r_elbow", rot_y(b.arms * carry.elbow));

  PoseFrame f;
  f.root_translation = Vec3(b.root.x(), b.root.y(), -0.015 * b.gait * std::abs(sp));
  for (const auto& r : local) f.joint_rot6d.push_back(matrix_to_rot6d(r));
  return f;
}

/// Cubic Hermite curve reparameterized by arc length.
struct HermitePath {
  Eigen::Vector2d p0, p1, m0, m1;
  std::vector<double> cum;  // arc length at uniform parameter samples

  HermitePath(Eigen::Vector2d a, Eigen::Vector2d b, Eigen::Vector2d ta, Eigen::Vector2d tb) : p0(a), p1(b) {
    const double L = (b - a).norm();
    m0 = L * ta;
    m1 = L * tb;
    cum.push_back(0.0);
    for (int i = 1; i <= kSamples; ++i) cum.push_back(cum.back() + (at(i / double(kSamples)) - at((i - 1) / double(kSamples))).norm());
  }
  Eigen::Vector2d at(double u) const {
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * p0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * p1 + (u3 - u2) * m1;
  }
  Eigen::Vector2d tangent(double u) const {
    const double u2 = u * u;
    return (6 * u2 - 6 * u) * p0 + (3 * u2 - 4 * u + 1) * m0 + (-6 * u2 + 6 * u) * p1 + (3 * u2 - 2 * u) * m1;
  }
  double length() const { return cum.back(); }
  /// Curve parameter at arc length s.
  double param(double s) const {
    s = std::clamp(s, 0.0, length());
    const auto it = std::lower_bound(cum.begin(), cum.end(), s);
    const auto i = static_cast<int>(std::max<std::ptrdiff_t>(1, it - cum.begin()));
    const double seg = cum[static_cast<std::size_t>(i)] - cum[static_cast<std::size_t>(i - 1)];
    const double t = seg > 0.0 ? (s - cum[static_cast<std::size_t>(i - 1)]) / seg : 0.0;
    return (i - 1 + t) / kSamples;
  }
  static constexpr int kSamples = 400;
};

double heading(const Eigen::Vector2d& v) { return std::atan2(v.y(), v.x()); }

double gait_ramp(int k, int n) {
  const double ramp = 6.0;
  return std::clamp(std::min((k + 1) / ramp, (n - k) / ramp), 0.0, 1.0);
}

const char* kPrompts[] = {"carry the box to the target", "pick up the box and move it", "lift the box and walk",
                          "transport the box to the marked spot"};

}  // namespace

SynthSequence generate_carry_sequence(const SynthConfig& cfg, int index) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, "dataset", static_cast<std::uint64_t>(index)));
  const SkeletonSpec skel = default_humanoid();
  const double fps = cfg.frame_rate;

  const double speed = rng.uniform(cfg.speed_min, cfg.speed_max);
  const Eigen::Vector2d start(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  const double yaw1 = rng.uniform(-kPi, kPi);
  const Eigen::Vector2d h1(std::cos(yaw1), std::sin(yaw1));
  const Eigen::Vector2d pick = start + rng.uniform(cfg.approach_min, cfg.approach_max) * h1;
  const double carry_dir = yaw1 + rng.uniform(-kPi / 3, kPi / 3);
  const Eigen::Vector2d place =
      pick + rng.uniform(cfg.carry_min, cfg.carry_max) * Eigen::Vector2d(std::cos(carry_dir), std::sin(carry_dir));
  const double yaw2 = carry_dir + rng.uniform(-kPi / 6, kPi / 6);
  const Eigen::Vector2d h2(std::cos(yaw2), std::sin(yaw2));
  const Vec3 half(rng.uniform(0.10, 0.20), rng.uniform(0.16, 0.19), rng.uniform(0.08, 0.18));
  ArmPose arms;
  arms.shoulder = rng.uniform(-0.7, -0.4);
  arms.elbow = rng.uniform(-1.0, -0.7);
  const char* prompt = kPrompts[rng.below(std::size(kPrompts))];

  std::vector<BodyState> body;
  std::vector<int> attached;
  double phase = 0.0;
  // approach
  const double d1 = (pick - start).norm();
  const int n1 = std::max(10, static_cast<int>(std::lround(d1 / speed * fps)));
  double prev_s = 0.0;
  for (int k = 0; k < n1; ++k) {
    const double s = d1 * smoothstep(k / double(n1 - 1));
    phase += 2 * kPi * (s - prev_s) / kStride;
    prev_s = s;
    body.push_back({start + s * h1, yaw1, phase, gait_ramp(k, n1), 0.0});
    attached.push_back(0);
  }
  // reach
  for (int k = 1; k <= cfg.reach_frames; ++k) {
    body.push_back({pick, yaw1, phase, 0.0, smoothstep(k / double(cfg.reach_frames))});
    attached.push_back(0);
  }
  // carry
  const HermitePath path(pick, place, h1, h2);
  const int nc = std::max(10, static_cast<int>(std::lround(path.length() / speed * fps)));
  const int carry_begin = static_cast<int>(body.size());
  prev_s = 0.0;
  for (int k = 1; k <= nc; ++k) {
    const double s = path.length() * smoothstep(k / double(nc));
    const double u = path.param(s);
    phase += 2 * kPi * (s - prev_s) / kStride;
    prev_s = s;
    body.push_back({path.at(u), heading(path.tangent(std::max(u, 1e-6))), phase, gait_ramp(k - 1, nc), 1.0});
    attached.push_back(1);
  }
  const int carry_end = static_cast<int>(body.size()) - 1;
  // release and idle
  const BodyState last = body.back();
  for (int k = 1; k <= cfg.release_frames; ++k) {
    body.push_back({last.root, last.yaw, last.phase, 0.0, 1.0 - smoothstep(k / double(cfg.release_frames))});
    attached.push_back(0);
  }
  for (int k = 0; k < cfg.idle_frames; ++k) {
    body.push_back({last.root, last.yaw, last.phase, 0.0, 0.0});
    attached.push_back(0);
  }

  SynthSequence out;
  char name[32];
  std::snprintf(name, sizeof name, "seq_%04d", index);
  out.name = name;
  out.carry_begin = carry_begin;
  out.carry_end = carry_end;
  out.mesh = geometry::make_box(half);

  io::MotionBundle& b = out.file.bundle;
  b.skeleton = skel;
  b.motion.frame_rate = fps;
  for (const auto& st : body) b.motion.frames.push_back(make_pose(skel, st, arms));

  // the box sits between the hands whenever it is held; otherwise it rests where it was left
  const int lh = skel.left_hand, rh = skel.right_hand;
  auto grip = [&](int t) {
    const LinkPoses lp = forward_kinematics(skel, b.motion.frames[static_cast<std::size_t>(t)]);
    return ObjectPose{0.5 * (lp.positions[static_cast<std::size_t>(lh)] + lp.positions[static_cast<std::size_t>(rh)]),
                      rot_z(body[static_cast<std::size_t>(t)].yaw)};
  };
  ObjectTrajectory obj{{}, fps};
  const ObjectPose rest_start = grip(carry_begin);
  const ObjectPose rest_end = grip(carry_end);
  for (int t = 0; t < static_cast<int>(body.size()); ++t) {
    if (attached[static_cast<std::size_t>(t)]) obj.poses.push_back(grip(t));
    else obj.poses.push_back(t < carry_begin ? rest_start : rest_end);
  }
  b.object = obj;
  const GlobalMotion gm = relative_to_global(skel, b.motion);
  b.contacts = geometry::detect_contacts(skel, gm, obj, out.mesh, cfg.contact_threshold);
  b.validate();

  io::SequenceAnnotations a;
  a.prompt = prompt;
  a.mesh = "meshes/box_" + std::string(name + 4) + ".obj";
  a.start = rest_start.position;
  for (int k = 1; k <= cfg.waypoints; ++k) {
    const int t = carry_begin + (carry_end - carry_begin) * k / (cfg.waypoints + 1);
    a.waypoints.push_back({t, obj.poses[static_cast<std::size_t>(t)].position.x(), obj.poses[static_cast<std::size_t>(t)].position.y()});
  }
  a.target_frame = b.motion.length() - 1;
  a.target = rest_end.position;
  out.file.annotations = a;
  return out;
}

}  // namespace hoigen::synth
