#include <cmath>

#include <doctest.h>

#include "hoigen/core/error.hpp"
#include "hoigen/core/kinematics.hpp"
#include "hoigen/core/rng.hpp"
#include "hoigen/core/rotation.hpp"
#include "hoigen/core/skeleton.hpp"
#include "hoigen/geometry/mesh.hpp"
#include "hoigen/metrics/metrics.hpp"
#include "hoigen/synth/carry.hpp"
#include "hoigen/tracking/tracking.hpp"

using namespace hoigen;
using namespace hoigen::metrics;

namespace {

/// Every joint parked at `rest`; callers move the joints they care about.
GlobalMotion parked(const SkeletonSpec& s, int frames, const Vec3& rest = Vec3(0, 0, 1)) {
  GlobalMotion g;
  const auto J = static_cast<std::size_t>(s.joint_count());
  for (int t = 0; t < frames; ++t) {
    GlobalFrame f;
    f.positions.assign(J, rest);
    f.orientations.assign(J, Mat3::Identity());
    f.linear_velocity.assign(J, Vec3::Zero());
    f.angular_velocity.assign(J, Vec3::Zero());
    g.frames.push_back(f);
  }
  return g;
}

ContactChannels hands(std::initializer_list<std::pair<int, int>> frames) {
  ContactChannels c;
  for (auto [l, r] : frames) c.frames.push_back({double(l), double(r), 0.0, 0.0});
  return c;
}

ObjectTrajectory still_object(int frames, const Vec3& p, const Mat3& r = Mat3::Identity()) {
  ObjectTrajectory o;
  o.poses.assign(static_cast<std::size_t>(frames), ObjectPose{p, r});
  return o;
}

tracking::RolloutReference carry_reference(synth::SynthSequence& seq) {
  synth::SynthConfig cfg;
  seq = synth::generate_carry_sequence(cfg, 1);
  const auto& b = seq.file.bundle;
  tracking::RolloutReference ref;
  ref.skeleton = b.skeleton;
  ref.human = relative_to_global(b.skeleton, b.motion);
  ref.object = *b.object;
  ref.commanded = *b.contacts;
  ref.mesh = seq.mesh;
  return ref;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("condition matching") {
  ObjectTrajectory o;
  for (int t = 0; t < 10; ++t) o.poses.push_back({Vec3(0.1 * t, 0, 0.8), Mat3::Identity()});
  const io::Waypoint wp[] = {{4, 0.4, 0.0}};
  const auto exact = condition_matching(o, Vec3(0, 0, 0.8), wp, Vec3(0.9, 0, 0.8));
  CHECK(exact.start == 0.0);
  CHECK(exact.end == doctest::Approx(0.0).epsilon(1e-12));
  REQUIRE(exact.planar.has_value());
  CHECK(*exact.planar == doctest::Approx(0.0));

  const auto off = condition_matching(o, Vec3(0, 0.003, 0.8), wp, Vec3(0.9, 0, 0.8));
  CHECK(off.start == doctest::Approx(3.0));

  o.poses[4].position.z() = 5.0;
  const auto high = condition_matching(o, Vec3(0, 0, 0.8), wp, Vec3(0.9, 0, 0.8));
  CHECK(*high.planar == doctest::Approx(0.0));
  CHECK_FALSE(condition_matching(o, Vec3::Zero(), {}, Vec3::Zero()).planar.has_value());
}

TEST_CASE("foot sliding and height") {
  const auto s = default_humanoid();
  const int T = 12;
  const int feet[] = {s.left_foot, s.right_foot};

  auto still = parked(s, T);
  for (auto& f : still.frames)
    for (int j : feet) f.positions[j] = Vec3(0.3, 0.1 * j, 0.0);
  const auto a = foot_metrics(still, s);
  CHECK(a.sliding == 0.0);
  REQUIRE(a.height.has_value());
  CHECK(*a.height == 0.0);

  auto slide = still;
  for (int t = 0; t < T; ++t)
    for (int j : feet) slide.frames[t].positions[j].x() += 0.01 * t;
  CHECK(foot_metrics(slide, s).sliding == doctest::Approx(10.0));

  auto lifted = slide;
  for (auto& f : lifted.frames)
    for (int j : feet) f.positions[j].z() = 0.025;
  // Half of h_max: weight 2 - sqrt(2).
  CHECK(foot_metrics(lifted, s).sliding == doctest::Approx(10.0 * (2.0 - std::sqrt(2.0))));
  CHECK(*foot_metrics(lifted, s).height == doctest::Approx(25.0));

  auto air = slide;
  for (auto& f : air.frames)
    for (int j : feet) f.positions[j].z() = 0.3;
  const auto flying = foot_metrics(air, s);
  CHECK(flying.sliding == 0.0);
  CHECK_FALSE(flying.height.has_value());
}

TEST_CASE("contact scores") {
  const auto truth = hands({{1, 0}, {1, 0}, {0, 0}, {1, 0}});
  const auto same = contact_metrics(truth, truth);
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f1 == 1.0);
  CHECK(same.percent == doctest::Approx(0.75));

  const auto none = contact_metrics(hands({{0, 0}, {0, 0}, {0, 0}, {0, 0}}), truth);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
  CHECK(none.percent == 0.0);

  const auto mixed = contact_metrics(hands({{1, 0}, {1, 0}, {1, 0}, {0, 0}}), truth);
  CHECK(mixed.precision == doctest::Approx(2.0 / 3.0));
  CHECK(mixed.recall == doctest::Approx(2.0 / 3.0));
  CHECK(mixed.f1 == doctest::Approx(2.0 / 3.0));

  const auto empty = hands({{0, 0}, {0, 0}});
  CHECK(contact_metrics(empty, empty).f1 == 1.0);
  CHECK_THROWS_AS(contact_metrics(empty, truth), ValidationError);
}

TEST_CASE("hand penetration") {
  const auto s = default_humanoid();
  const auto sphere = geometry::make_icosphere(1.0, 3);
  const auto obj = still_object(5, Vec3(0, 0, 0));
  auto outside = parked(s, 5, Vec3(3, 0, 0));
  CHECK(hand_penetration(outside, s, obj, sphere) == 0.0);

  auto inside = outside;
  for (auto& f : inside.frames) {
    f.positions[s.left_hand] = Vec3(0.98, 0, 0);
    f.positions[s.right_hand] = Vec3(0, -0.98, 0);
  }
  const double p = hand_penetration(inside, s, obj, sphere);
  CHECK(p == doctest::Approx(20.0).epsilon(0.5));  // tessellation error under 10 mm
  CHECK(p == hand_penetration_serial(inside, s, obj, sphere));

  const geometry::TriangleMesh open({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {{{0, 1, 2}}});
  CHECK_THROWS_AS(hand_penetration(inside, s, obj, open), ValidationError);
}

TEST_CASE("ground-truth differences") {
  const auto s = default_humanoid();
  Rng rng(3);
  auto gt = parked(s, 6);
  for (auto& f : gt.frames)
    for (auto& p : f.positions) p += Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.1;
  const auto obj = still_object(6, Vec3(1, 0, 0.5));
  const auto same = gt_difference(gt, gt, &obj, &obj);
  CHECK(same.mpjpe == 0.0);
  CHECK(same.root == 0.0);
  CHECK(*same.object == 0.0);
  CHECK(*same.object_orientation == 0.0);

  auto shifted = gt;
  for (auto& f : shifted.frames)
    for (auto& p : f.positions) p += Vec3(0, 0.02, 0);
  const auto d = gt_difference(shifted, gt, nullptr, nullptr);
  CHECK(d.mpjpe == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(d.root == doctest::Approx(20.0));
  CHECK(gt_difference(shifted, gt, nullptr, nullptr, false).mpjpe == doctest::Approx(20.0));
  CHECK_FALSE(d.object.has_value());

  const auto flipped = still_object(6, Vec3(1, 0, 0.5), axis_angle(Vec3::UnitZ(), kPi));
  CHECK(*gt_difference(gt, gt, &flipped, &obj).object_orientation == doctest::Approx(2.0 * std::sqrt(2.0)));
}

TEST_CASE("tracking metrics of scripted rollouts") {
  synth::SynthSequence seq;
  const auto ref = carry_reference(seq);
  const Vec3 target = seq.file.annotations->target;
  const int T = ref.human.length();

  const auto clean = tracking::oracle_rollout(ref, {}, 0, {}, {});
  const auto perfect = tracking_metrics(clean, target);
  CHECK(perfect.contact_success);
  CHECK(perfect.target_success);
  CHECK(perfect.tracked_ratio == 1.0);
  CHECK(perfect.position_error == 0.0);
  CHECK(perfect.object_position_error == 0.0);
  CHECK(perfect.object_velocity_error == 0.0);

  tracking::NoiseModel half;
  half.faults.push_back({tracking::ScriptedFault::Kind::object_offset, T / 2, -1, Vec3(0, 0, 2.0)});
  const auto cut = tracking_metrics(tracking::oracle_rollout(ref, half, 0, {}, {}), target);
  CHECK(cut.tracked_ratio == doctest::Approx(static_cast<double>(T / 2) / T));
  CHECK_FALSE(cut.target_success);

  const Vec3 end = clean.frames.back().sim_object.position;
  CHECK(tracking_metrics(clean, end + Vec3(0, 0.5, 0)).target_success);
  CHECK_FALSE(tracking_metrics(clean, end + Vec3(0, 0.5 + 1e-9, 0)).target_success);

  tracking::NoiseModel drop;
  drop.faults.push_back({tracking::ScriptedFault::Kind::contact_drop, 0, -1, Vec3::Zero(), 0});
  tracking::TerminationConfig lenient;
  lenient.missing_contact_frames = 100000;
  const auto dropped = tracking::oracle_rollout(ref, drop, 0, {}, lenient);
  CHECK_FALSE(tracking_metrics(dropped, target).contact_success);
}

TEST_CASE("reports") {
  GenerationMetrics g;
  g.start_error = 1.25;
  g.end_error = 0.1 + 0.2;
  g.contact_f1 = 2.0 / 3.0;
  const GenerationRecord recs[] = {{"a", g}, {"b,quoted", {}}};
  const auto csv = emit_report(recs, ReportFormat::csv);
  CHECK(csv.rfind("name,T_s_mm,T_e_mm", 0) == 0);
  const auto back = parse_generation_csv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].name == "a");
  CHECK(*back[0].metrics.end_error == 0.1 + 0.2);
  CHECK(*back[0].metrics.contact_f1 == 2.0 / 3.0);
  CHECK_FALSE(back[0].metrics.foot_sliding.has_value());
  CHECK(back[1].name == "b,quoted");
  CHECK_FALSE(back[1].metrics.start_error.has_value());
  CHECK(emit_report(back, ReportFormat::csv) == csv);

  const auto table = emit_report(recs, ReportFormat::table);
  CHECK(table.find("1.25") != std::string::npos);
  CHECK(table.find("0.67") != std::string::npos);
  CHECK(table.find(" -") != std::string::npos);

  const auto mean = mean_metrics(recs);
  CHECK(*mean.start_error == 1.25);
  CHECK_FALSE(mean.foot_height.has_value());

  TrackingMetrics t;
  t.contact_success = true;
  t.tracked_ratio = 0.5;
  t.rotation_error = 0.125;
  const TrackingRecord trecs[] = {{"r", t}};
  const auto tcsv = emit_report(trecs, ReportFormat::csv);
  const auto tback = parse_tracking_csv(tcsv);
  CHECK(tback[0].metrics.contact_success);
  CHECK_FALSE(tback[0].metrics.target_success);
  CHECK(tback[0].metrics.tracked_ratio == 0.5);
  CHECK(emit_report(tback, ReportFormat::csv) == tcsv);

  CHECK(parse_report_format("csv") == ReportFormat::csv);
  CHECK_THROWS_AS(parse_report_format("xml"), ValidationError);
  CHECK_THROWS_AS(parse_generation_csv("name,wrong\nx,1\n"), FormatError);
  CHECK_THROWS_AS(parse_tracking_csv(csv), FormatError);
}

}  // TEST_SUITE
