#include <cmath>

#include <doctest.h>

#include "hoigen/core/error.hpp"
#include "hoigen/core/kinematics.hpp"
#include "hoigen/core/rng.hpp"
#include "hoigen/core/rotation.hpp"
#include "hoigen/io/container.hpp"
#include "hoigen/keyaction/windows.hpp"
#include "hoigen/synth/carry.hpp"
#include "hoigen/tracking/tracking.hpp"

using namespace hoigen;
using namespace hoigen::tracking;

namespace {

struct Scene {
  synth::SynthSequence seq;
  RolloutReference ref;
};

Scene carry_scene(int index = 0) {
  synth::SynthConfig cfg;
  cfg.sequences = 4;
  Scene s;
  s.seq = synth::generate_carry_sequence(cfg, index);
  const auto& b = s.seq.file.bundle;
  s.ref.skeleton = b.skeleton;
  s.ref.human = relative_to_global(b.skeleton, b.motion);
  s.ref.object = *b.object;
  s.ref.commanded = *b.contacts;
  s.ref.mesh = s.seq.mesh;
  return s;
}

RewardWeights uneven_weights() {
  RewardWeights w;
  w.joint_position = 1.5;
  w.joint_rotation = 0.5;
  w.joint_velocity = 2.0;
  w.joint_angular_velocity = 0.25;
  w.contact = 3.0;
  w.object_position = 0.7;
  w.object_rotation = 1.1;
  w.object_velocity = 0.9;
  w.object_angular_velocity = 1.3;
  w.alpha = 0.3;
  return w;
}

double perfect_reward(const RewardWeights& w) {
  return w.alpha * (w.human_sum() + 2.0 * w.contact) + (1.0 - w.alpha) * w.object_sum();
}

HumanoidSimState still_state(int joints) {
  HumanoidSimState s;
  for (int j = 0; j < joints; ++j) {
    s.positions.emplace_back(0.1 * j, 0.0, 1.0);
    s.orientations.push_back(axis_angle(Vec3::UnitZ(), 0.1 * j));
    s.linear_velocity.push_back(Vec3::Zero());
    s.angular_velocity.push_back(Vec3::Zero());
    s.body_shape.push_back(0.3);
  }
  return s;
}

/// First frame at which some channel is expected for at least `span` frames.
int contact_run_start(const RolloutReference& ref, int span) {
  const int T = ref.commanded.length();
  for (int t = 0; t + span <= T; ++t) {
    bool ok = true;
    for (int k = t; k < t + span && ok; ++k) ok = expected_contacts(ref.commanded.frames[k])[0];
    if (ok) return t;
  }
  return -1;
}

}  // namespace

TEST_SUITE("tracking") {

TEST_CASE("contact agreement") {
  CHECK(expected_contacts({1, 0, 0, 0}) == ContactFlags{true, false, false, false});
  CHECK(expected_contacts({0.5, 0.49, 0.9, 0}) == ContactFlags{true, false, true, false});
  const ContactFlags a{true, false, false, false};
  CHECK(contact_xnor(a, a) == std::array<double, 4>{1, 1, 1, 1});
  CHECK(contact_xnor({true, true, false, false}, {false, true, false, true}) == std::array<double, 4>{0, 1, 1, 0});
  for (int bits = 0; bits < 16; ++bits) {
    ContactFlags c, n;
    for (int k = 0; k < 4; ++k) {
      c[k] = (bits >> k) & 1;
      n[k] = !c[k];
    }
    CHECK(contact_xnor(c, c) == std::array<double, 4>{1, 1, 1, 1});
    CHECK(contact_xnor(c, n) == std::array<double, 4>{0, 0, 0, 0});
  }
}

TEST_CASE("humanoid observation layout") {
  const int J = 5;
  const auto sim = still_state(J);
  auto ref = sim;
  const auto same = build_humanoid_obs(sim, ref);
  REQUIRE(same.size() == 24 * J);
  for (int j = 0; j < J; ++j) {
    const Rot6d id{1, 0, 0, 0, 1, 0};
    for (int k = 0; k < 6; ++k) CHECK(same[6 * j + k] == doctest::Approx(id[k]));
  }
  CHECK(same.segment(6 * J, 9 * J).norm() == 0.0);

  ref.positions[2] += Vec3(0.1, 0, 0);
  const Mat3 turn = axis_angle(Vec3::UnitX(), 0.4);
  ref.orientations[3] = turn * sim.orientations[3];
  const auto obs = build_humanoid_obs(sim, ref);
  CHECK((obs.segment(6 * J + 3 * 2, 3) - Eigen::Vector3d(0.1, 0, 0)).norm() < 1e-15);
  Rot6d r;
  for (int k = 0; k < 6; ++k) r[k] = obs[6 * 3 + k];
  CHECK((rot6d_to_matrix(r) - turn).norm() < 1e-12);
  CHECK((obs.segment(21 * J + 3 * 2, 3) - Eigen::Vector3d(0.3, 0, 1.0)).norm() < 1e-15);
}

TEST_CASE("object observation layout") {
  ObjectSimState sim;
  sim.position = Vec3(1, 2, 3);
  auto ref = sim;
  ref.position += Vec3(0, 0.2, 0);
  sim.contact = {true, false, false, false};
  const auto obs = build_object_obs(sim, ref, {1, 1, 0, 0});
  REQUIRE(obs.size() == 32);
  CHECK((obs.segment(6, 3) - Eigen::Vector3d(0, 0.2, 0)).norm() < 1e-15);
  CHECK(obs.segment(15, 4) == Eigen::Vector4d(1, 0, 1, 1));
  CHECK((obs.segment(25, 3) - Eigen::Vector3d(1, 2.2, 3)).norm() < 1e-15);
  CHECK(obs.segment(28, 4) == Eigen::Vector4d(1, 1, 0, 0));
}

TEST_CASE("human reward at its extremes") {
  const int J = 4;
  const auto s = still_state(J);
  RewardWeights w;
  w.key_joints = {1};
  const Contact4 cmd{1, 0, 0, 0};
  const ContactFlags act{true, false, false, false};

  const auto perfect = human_tracking_reward(s, s, act, cmd, w);
  CHECK(perfect.total == doctest::Approx(w.human_sum() + 2.0 * w.contact).epsilon(1e-15));
  CHECK(perfect.contact == doctest::Approx(2.0));

  auto off = s;
  off.positions[1] += Vec3(0.01, 0, 0);
  CHECK(human_tracking_reward(off, s, act, cmd, w).position == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  off.positions[0] += Vec3(5, 0, 0);  // not a key joint
  CHECK(human_tracking_reward(off, s, act, cmd, w).position == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  auto wild = s;
  wild.positions[1] += Vec3(1e6, 0, 0);
  wild.orientations[1] = axis_angle(Vec3::UnitY(), 3.0) * s.orientations[1];
  wild.linear_velocity[1] = Vec3(1e6, 0, 0);
  wild.angular_velocity[1] = Vec3(0, 1e6, 0);
  const auto gone = human_tracking_reward(wild, s, act, cmd, w);
  CHECK(gone.total == doctest::Approx(2.0 * w.contact).epsilon(1e-9));

  const ContactFlags wrong{false, true, false, false};
  CHECK(human_tracking_reward(s, s, wrong, cmd, w).contact == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("object reward coefficients") {
  ObjectSimState ref;
  RewardWeights w;
  CHECK(object_reward(ref, ref, w).total == doctest::Approx(4.0));
  auto sim = ref;
  sim.position += Vec3(0, 0, 0.01);
  CHECK(object_reward(sim, ref, w).position == doctest::Approx(std::exp(-1.0)));
  sim = ref;
  sim.linear_velocity = Vec3(0.2, 0, 0);
  CHECK(object_reward(sim, ref, w).velocity == doctest::Approx(std::exp(-1.0)));
  sim = ref;
  sim.angular_velocity = Vec3(0, 0.2, 0);
  CHECK(object_reward(sim, ref, w).angular_velocity == doctest::Approx(std::exp(-1.0)));
  sim = ref;
  sim.orientation = axis_angle(Vec3::UnitZ(), 0.1);
  CHECK(object_reward(sim, ref, w).rotation == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("blended reward") {
  CHECK(total_reward(2, 4, 1.0) == 2.0);
  CHECK(total_reward(2, 4, 0.0) == 4.0);
  CHECK(total_reward(2, 4, 0.5) == 3.0);
  CHECK_THROWS_AS(total_reward(2, 4, 1.5), ValidationError);
}

TEST_CASE("rewards are bounded and fall with each error") {
  Rng rng(31);
  const int J = 6;
  const auto ref = still_state(J);
  RewardWeights w = uneven_weights();
  w.key_joints = {0, 2, 5};
  for (int trial = 0; trial < 200; ++trial) {
    auto sim = ref;
    for (int j = 0; j < J; ++j) {
      sim.positions[j] += 0.05 * Vec3(rng.normal(), rng.normal(), rng.normal());
      sim.linear_velocity[j] = Vec3(rng.normal(), rng.normal(), rng.normal());
      sim.angular_velocity[j] = Vec3(rng.normal(), rng.normal(), rng.normal());
      sim.orientations[j] = axis_angle(Vec3(rng.normal(), 1, 0).normalized(), rng.uniform(0, 1)) * ref.orientations[j];
    }
    ContactFlags act;
    for (auto& a : act) a = rng.uniform() < 0.5;
    const Contact4 cmd{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    const auto h = human_tracking_reward(sim, ref, act, cmd, w);
    CHECK(h.total <= w.human_sum() + 2.0 * w.contact);
    CHECK(h.total < w.human_sum() + 2.0 * w.contact);

    auto worse = sim;
    worse.positions[2] += Vec3(0.01, 0.02, 0);
    worse.linear_velocity[5] *= 2.0;
    const auto h2 = human_tracking_reward(worse, ref, act, cmd, w);
    CHECK(h2.velocity <= h.velocity);

    ObjectSimState os, orf;
    os.position = Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.02;
    os.linear_velocity = Vec3(rng.normal(), 0, 0);
    const auto o = object_reward(os, orf, w);
    CHECK(o.total <= w.object_sum());
    auto farther = os;
    farther.position *= 1.5;
    CHECK(object_reward(farther, orf, w).position <= o.position);
  }
}

TEST_CASE("zero-noise rollout earns the perfect reward every frame") {
  const auto scene = carry_scene();
  const auto w = uneven_weights();
  const auto log = oracle_rollout(scene.ref, {}, 0, w, {});
  CHECK_FALSE(log.termination.terminated);
  REQUIRE(log.length() == scene.ref.human.length());
  double worst = 0.0;
  for (const auto& f : log.frames) worst = std::max(worst, std::abs(f.reward - perfect_reward(w)));
  CHECK(worst < 1e-9);
  CHECK(check_early_termination(log.frames, log.object_keypoints, log.key_joints, {}).terminated == false);
}

TEST_CASE("jitter lowers the reward at every frame") {
  const auto scene = carry_scene();
  NoiseModel noise;
  noise.position_sigma = 0.005;
  const auto log = oracle_rollout(scene.ref, noise, 17, {}, {});
  const double top = perfect_reward({});
  for (const auto& f : log.frames) CHECK(f.reward < top);
  const auto again = oracle_rollout(scene.ref, noise, 17, {}, {});
  CHECK(io::encode({{encode_rollout(log)}}, io::Encoding::binary) ==
        io::encode({{encode_rollout(again)}}, io::Encoding::binary));
}

TEST_CASE("scripted faults terminate at the right frame") {
  const auto scene = carry_scene();
  SUBCASE("object deviation") {
    NoiseModel noise;
    noise.faults.push_back({ScriptedFault::Kind::object_offset, 30, -1, Vec3(0.6, 0, 0)});
    const auto log = oracle_rollout(scene.ref, noise, 0, {}, {});
    CHECK(log.termination.terminated);
    CHECK(log.termination.frame == 30);
    CHECK(log.termination.reason == TerminationReason::object_deviation);
    CHECK(log.length() == 31);
  }
  SUBCASE("object deviation below the limit") {
    NoiseModel noise;
    noise.faults.push_back({ScriptedFault::Kind::object_offset, 30, -1, Vec3(0.45, 0, 0)});
    CHECK_FALSE(oracle_rollout(scene.ref, noise, 0, {}, {}).termination.terminated);
  }
  SUBCASE("missing contact") {
    const int start = contact_run_start(scene.ref, 12);
    REQUIRE(start >= 0);
    NoiseModel noise;
    noise.faults.push_back({ScriptedFault::Kind::contact_drop, start, start + 10, Vec3::Zero(), -1});
    const auto log = oracle_rollout(scene.ref, noise, 0, {}, {});
    CHECK(log.termination.reason == TerminationReason::contact_absence);
    CHECK(log.termination.frame == start + 10);

    NoiseModel shorter;
    shorter.faults.push_back({ScriptedFault::Kind::contact_drop, start, start + 9, Vec3::Zero(), -1});
    CHECK_FALSE(oracle_rollout(scene.ref, shorter, 0, {}, {}).termination.terminated);
  }
  SUBCASE("humanoid drift") {
    NoiseModel noise;
    noise.faults.push_back({ScriptedFault::Kind::humanoid_offset, 12, -1, Vec3(0, 0.55, 0)});
    const auto log = oracle_rollout(scene.ref, noise, 0, {}, {});
    CHECK(log.termination.reason == TerminationReason::humanoid_drift);
    CHECK(log.termination.frame == 12);
  }
}

TEST_CASE("prepending clean frames shifts the termination frame") {
  const auto scene = carry_scene();
  const auto clean = oracle_rollout(scene.ref, {}, 0, {}, {});
  for (auto kind : {ScriptedFault::Kind::object_offset, ScriptedFault::Kind::contact_drop}) {
    NoiseModel noise;
    const int at = kind == ScriptedFault::Kind::contact_drop ? contact_run_start(scene.ref, 12) : 40;
    noise.faults.push_back({kind, at, -1, Vec3(0.7, 0, 0), -1});
    const auto log = oracle_rollout(scene.ref, noise, 0, {}, {});
    REQUIRE(log.termination.terminated);
    for (int extra : {1, 5, 13}) {
      std::vector<FrameRecord> frames(clean.frames.begin(), clean.frames.begin() + extra);
      frames.insert(frames.end(), log.frames.begin(), log.frames.end());
      const auto t = check_early_termination(frames, log.object_keypoints, log.key_joints, {});
      CHECK(t.frame == log.termination.frame + extra);
      CHECK(t.reason == log.termination.reason);
    }
  }
}

TEST_CASE("termination reasons print and parse") {
  for (auto r : {TerminationReason::none, TerminationReason::object_deviation, TerminationReason::contact_absence,
                 TerminationReason::humanoid_drift})
    CHECK(termination_reason_from_string(to_string(r)) == r);
  CHECK(to_string(TerminationReason::object_deviation) == "object-deviation");
  CHECK_THROWS_AS(termination_reason_from_string("bogus"), Error);
}

TEST_CASE("parallel rollouts match the serial reference") {
  std::vector<RolloutReference> refs;
  for (int i = 0; i < 3; ++i) refs.push_back(carry_scene(i).ref);
  NoiseModel noise;
  noise.position_sigma = 0.01;
  const auto a = oracle_rollouts(refs, noise, 5, {}, {});
  const auto b = oracle_rollouts_serial(refs, noise, 5, {}, {});
  REQUIRE(a.size() == 3);
  for (int i = 0; i < 3; ++i)
    CHECK(io::encode({{encode_rollout(a[i])}}, io::Encoding::binary) ==
          io::encode({{encode_rollout(b[i])}}, io::Encoding::binary));
}

TEST_CASE("rollout chunk round trip") {
  const auto scene = carry_scene();
  NoiseModel noise;
  noise.position_sigma = 0.003;
  noise.faults.push_back({ScriptedFault::Kind::object_offset, 50, -1, Vec3(0, 0.8, 0)});
  const auto log = oracle_rollout(scene.ref, noise, 2, {}, {});
  const auto back = decode_rollout(encode_rollout(log));
  CHECK(back.termination.frame == log.termination.frame);
  CHECK(back.termination.reason == log.termination.reason);
  CHECK(back.length() == log.length());
  CHECK(back.frames[10].reward == log.frames[10].reward);
  CHECK(io::encode({{encode_rollout(back)}}, io::Encoding::binary) ==
        io::encode({{encode_rollout(log)}}, io::Encoding::binary));
}

TEST_CASE("target success uses a closed ball") {
  const auto scene = carry_scene();
  const auto log = oracle_rollout(scene.ref, {}, 0, {}, {});
  const Vec3 end = log.frames.back().sim_object.position;
  CHECK(reaches_target(log, end + Vec3(0.5, 0, 0), 0.5));
  CHECK_FALSE(reaches_target(log, end + Vec3(0.5 + 1e-9, 0, 0), 0.5));
}

TEST_CASE("filtering successful rollouts") {
  const auto scene = carry_scene();
  const auto& ann = *scene.seq.file.annotations;
  FilterOptions opt;
  opt.extraction.weights = keyaction::JointWeights::defaults(scene.ref.skeleton);

  NoiseModel crash;
  crash.faults.push_back({ScriptedFault::Kind::object_offset, 5, -1, Vec3(1, 0, 0)});
  const auto failed = oracle_rollout(scene.ref, crash, 0, {}, {});
  const RolloutCandidate bad[] = {{&failed, ann.target, ann.prompt, ann.mesh}};
  CHECK(filter_successful_rollouts(bad, scene.ref.skeleton, opt).empty());

  const auto clean = oracle_rollout(scene.ref, {}, 0, {}, {});
  const RolloutCandidate missed[] = {{&clean, ann.target + Vec3(3, 0, 0), ann.prompt, ann.mesh}};
  CHECK(filter_successful_rollouts(missed, scene.ref.skeleton, opt).empty());

  const RolloutCandidate good[] = {{&clean, ann.target, ann.prompt, ann.mesh}};
  const auto windows = filter_successful_rollouts(good, scene.ref.skeleton, opt);
  const auto& b = scene.seq.file.bundle;
  const auto keys = keyaction::extract_key_actions(b, opt.extraction);
  const auto expected = keyaction::build_training_windows(b, keys, opt.window_key_count, opt.stride, ann.prompt, ann.mesh);
  REQUIRE(windows.size() == expected.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    CHECK(windows[i].initial.frame == expected[i].initial.frame);
    CHECK(windows[i].valid == expected[i].valid);
    CHECK(windows[i].prompt == ann.prompt);
    for (std::size_t k = 0; k < windows[i].keys.size(); ++k) {
      CHECK(windows[i].keys[k].frame == expected[i].keys[k].frame);
      CHECK((windows[i].keys[k].pose.root_translation - expected[i].keys[k].pose.root_translation).norm() < 1e-9);
      CHECK((windows[i].keys[k].object.position - expected[i].keys[k].object.position).norm() < 1e-12);
    }
    CHECK_NOTHROW(windows[i].validate(b.skeleton.joint_count()));
  }
}

}  // TEST_SUITE
