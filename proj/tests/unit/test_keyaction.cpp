#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "hoigen/core/error.hpp"
#include "hoigen/core/rotation.hpp"
#include "hoigen/keyaction/keyaction.hpp"
#include "hoigen/keyaction/windows.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace hoigen;
using namespace hoigen::keyaction;

namespace {

/// Root with four end-effector links.
SkeletonSpec star() {
  SkeletonSpec s;
  s.parents = {-1, 0, 0, 0, 0};
  s.offsets = {Vec3::Zero(), Vec3(0.3, 0, 0.2), Vec3(-0.3, 0, 0.2), Vec3(0.1, 0, -0.8), Vec3(-0.1, 0, -0.8)};
  s.names = {"root", "l_hand", "r_hand", "l_foot", "r_foot"};
  s.left_hand = 1;
  s.right_hand = 2;
  s.left_foot = 3;
  s.right_foot = 4;
  s.key_joint.assign(5, true);
  return s;
}

Rot6d identity6() { return {1, 0, 0, 0, 1, 0}; }

/// Root follows `path(t)`; every joint keeps the identity rotation.
template <class Path>
io::MotionBundle translating_bundle(int frames, Path path) {
  io::MotionBundle b;
  b.skeleton = star();
  for (int t = 0; t < frames; ++t) {
    PoseFrame f;
    f.root_translation = path(t);
    f.joint_rot6d.assign(5, identity6());
    b.motion.frames.push_back(f);
  }
  return b;
}

io::MotionBundle linear_bundle(int frames) {
  auto b = translating_bundle(frames, [](int t) { return Vec3(0.1 * t, -0.05 * t, 0); });
  b.object = ObjectTrajectory{};
  for (int t = 0; t < frames; ++t) b.object->poses.push_back({Vec3(1 + 0.02 * t, 0, 0.5), Mat3::Identity()});
  return b;
}

io::MotionBundle corner_bundle(int frames, int corner, double deviation) {
  // Straight line from (0,0,0) to (1,0,0) bent at `corner` by `deviation` in y.
  return translating_bundle(frames, [=](int t) {
    const double x = static_cast<double>(t) / (frames - 1);
    const double y = t <= corner ? deviation * t / corner : deviation * (frames - 1 - t) / (frames - 1 - corner);
    return Vec3(x, y, 0);
  });
}

ExtractionOptions options_for(const io::MotionBundle& b, double eps) {
  ExtractionOptions o;
  o.epsilon = eps;
  o.weights = JointWeights::defaults(b.skeleton);
  return o;
}

double post_condition(const io::MotionBundle& b, const KeyActionSet& k, const ExtractionOptions& o) {
  return reconstruction_error(b, interpolate(k, b.skeleton), o.weights).max_error;
}

}  // namespace

TEST_SUITE("keyaction") {

TEST_CASE("linear data keeps only the endpoints") {
  const auto b = linear_bundle(30);
  for (double eps : {1e-6, 0.01, 0.5}) {
    const auto k = extract_key_actions(b, options_for(b, eps));
    CHECK(k.indices == std::vector<int>{0, 29});
  }
  const auto dense = interpolate(select_keys(b, {0, 29}), b.skeleton);
  for (int t = 0; t < 30; ++t)
    CHECK((dense.motion.frames[t].root_translation - b.motion.frames[t].root_translation).norm() < 1e-12);
}

TEST_CASE("a single corner is found") {
  const auto b = corner_bundle(12, 5, 0.5);
  const auto opt = options_for(b, 0.01);
  const auto k = extract_key_actions(b, opt);
  CHECK(k.indices == std::vector<int>{0, 5, 11});
  CHECK(test::optimal_key_indices(b, opt).size() == 3);
}

TEST_CASE("every frame as a key reproduces the input") {
  Rng rng(4);
  const auto b = test::random_bundle(rng, 9, 5, true);
  std::vector<int> all(9);
  for (int i = 0; i < 9; ++i) all[i] = i;
  const auto dense = interpolate(select_keys(b, all), b.skeleton);
  CHECK(reconstruction_error(b, dense, JointWeights::defaults(b.skeleton)).max_error == 0.0);
}

TEST_CASE("rotations are interpolated spherically") {
  auto b = translating_bundle(10, [](int) { return Vec3::Zero(); });
  const Mat3 quarter = axis_angle(Vec3::UnitZ(), kPi / 2);
  for (int t = 0; t < 10; ++t) b.motion.frames[t].joint_rot6d[0] = matrix_to_rot6d(t == 0 ? Mat3::Identity() : quarter);
  const auto dense = interpolate(select_keys(b, {0, 5, 9}), b.skeleton);
  const Mat3 r2 = rot6d_to_matrix(dense.motion.frames[2].joint_rot6d[0]);
  CHECK((r2 - axis_angle(Vec3::UnitZ(), kPi / 5)).norm() < 1e-12);
  const Mat3 r7 = rot6d_to_matrix(dense.motion.frames[7].joint_rot6d[0]);
  CHECK((r7 - quarter).norm() < 1e-12);
}

TEST_CASE("reconstruction error of hand-built tracks") {
  PointTracks ref{1, 1, {Vec3::Zero()}}, rec{1, 1, {Vec3(0.2, 0, 0)}};
  const std::vector<double> one{1.0};
  CHECK(reconstruction_error(ref, ref, one).max_error == 0.0);
  CHECK(reconstruction_error(ref, rec, one).max_error == doctest::Approx(0.2));

  PointTracks r2{1, 2, {Vec3::Zero(), Vec3::Zero()}}, g2{1, 2, {Vec3(0.1, 0, 0), Vec3(0, 0.3, 0)}};
  const std::vector<double> w{4.0, 1.0};
  const auto rep = reconstruction_error(r2, g2, w);
  CHECK(rep.max_error == doctest::Approx(0.4));
  CHECK(rep.argmax_point == 0);
}

TEST_CASE("ties resolve to the smallest frame") {
  PointTracks ref{4, 1, std::vector<Vec3>(4, Vec3::Zero())};
  PointTracks rec{4, 1, {Vec3::Zero(), Vec3(0.1, 0, 0), Vec3(0, 0.1, 0), Vec3::Zero()}};
  const std::vector<double> one{1.0};
  CHECK(reconstruction_error(ref, rec, one).argmax_frame == 1);
}

TEST_CASE("post-condition and endpoints on random sequences") {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const int frames = 10 + static_cast<int>(rng.below(51));
    const auto b = test::random_bundle(rng, frames, 4 + static_cast<int>(rng.below(5)), trial % 2 == 0);
    for (double eps : {0.01, 0.05, 0.1}) {
      const auto opt = options_for(b, eps);
      const auto k = extract_key_actions(b, opt);
      CHECK(k.indices.front() == 0);
      CHECK(k.indices.back() == frames - 1);
      CHECK(std::is_sorted(k.indices.begin(), k.indices.end()));
      CHECK(post_condition(b, k, opt) <= eps);
    }
  }
}

TEST_CASE("a tighter bound never yields fewer keys") {
  Rng rng(88);
  for (int trial = 0; trial < 20; ++trial) {
    const auto b = test::random_bundle(rng, 40, 6, true);
    std::size_t previous = 0;
    for (double eps : {0.2, 0.1, 0.05, 0.02, 0.01}) {
      const auto n = extract_key_actions(b, options_for(b, eps)).indices.size();
      CHECK(n >= previous);
      previous = n;
    }
  }
}

TEST_CASE("the recursive extractor never beats the optimum") {
  Rng rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    const auto b = test::random_bundle(rng, 20, 5, true);
    const auto opt = options_for(b, 0.03);
    const auto k = extract_key_actions(b, opt);
    const auto best = test::optimal_key_indices(b, opt);
    CHECK(k.indices.size() >= best.size());
    CHECK(post_condition(b, select_keys(b, best), opt) <= opt.epsilon);
  }
}

TEST_CASE("interpolation is exact at key frames") {
  Rng rng(5);
  const auto b = test::random_bundle(rng, 30, 6, true);
  const auto k = extract_key_actions(b, options_for(b, 0.05));
  const auto dense = interpolate(k, b.skeleton);
  for (int idx : k.indices) {
    CHECK(dense.motion.frames[idx].root_translation == b.motion.frames[idx].root_translation);
    CHECK(dense.object->poses[idx].position == b.object->poses[idx].position);
    for (int j = 0; j < b.skeleton.joint_count(); ++j) {
      const Mat3 a = rot6d_to_matrix(dense.motion.frames[idx].joint_rot6d[j]);
      const Mat3 e = rot6d_to_matrix(b.motion.frames[idx].joint_rot6d[j]);
      CHECK((a - e).norm() < 1e-9);
    }
  }
}

TEST_CASE("corpus extraction matches the serial reference and is deterministic") {
  Rng rng(6);
  std::vector<io::MotionBundle> corpus;
  for (int i = 0; i < 12; ++i) corpus.push_back(test::random_bundle(rng, 25 + i, 5, true));
  const auto opt = options_for(corpus.front(), 0.04);
  const auto par = extract_corpus(corpus, opt);
  const auto ser = extract_corpus_serial(corpus, opt);
  REQUIRE(par.size() == ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) CHECK(par[i].indices == ser[i].indices);
  CHECK(extract_key_actions(corpus[3], opt).indices == par[3].indices);
}

TEST_CASE("invalid options are rejected") {
  const auto b = linear_bundle(10);
  auto opt = options_for(b, 0.05);
  opt.epsilon = 0.0;
  CHECK_THROWS_AS(extract_key_actions(b, opt), ValidationError);
  opt = options_for(b, 0.05);
  opt.weights.joints.pop_back();
  CHECK_THROWS_AS(extract_key_actions(b, opt), ValidationError);
  CHECK_THROWS_AS(select_keys(b, {1, 9}), ValidationError);
}

TEST_CASE("key sets round trip through their chunk") {
  Rng rng(8);
  const auto b = test::random_bundle(rng, 20, 5, true);
  const auto k = extract_key_actions(b, options_for(b, 0.03));
  const auto [back, skeleton] = decode_keyset(encode_keyset(k, b.skeleton));
  CHECK(back.indices == k.indices);
  CHECK(back.source_length == k.source_length);
  CHECK(skeleton.parents == b.skeleton.parents);
  io::Container a, c;
  a.add(encode_keyset(k, b.skeleton));
  c.add(encode_keyset(back, skeleton));
  CHECK(io::encode(a, io::Encoding::binary) == io::encode(c, io::Encoding::binary));
}

TEST_CASE("window counting and padding") {
  auto b = linear_bundle(10);
  b.contacts = ContactChannels{};
  b.contacts->frames.assign(10, Contact4{});
  const auto five = select_keys(b, {0, 2, 4, 6, 9});

  const auto w = build_training_windows(b, five, 2, 1, "carry", "box.obj");
  REQUIRE(w.size() == 4);
  CHECK(w[3].valid == std::vector<std::uint8_t>{1, 0});
  CHECK(w[3].keys[1].frame == w[3].keys[0].frame);
  CHECK(w[0].valid_count() == 2);
  CHECK(w[1].initial.frame == 2);
  CHECK(w[1].keys[0].frame == 4);
  CHECK(w[1].prompt == "carry");

  const auto single = build_training_windows(b, five, 8, 4);
  REQUIRE(single.size() == 1);
  CHECK(single[0].valid_count() == 4);

  const auto [back_windows, skeleton] = [&] {
    const auto set = decode_windows(encode_windows(w, b.skeleton, 2));
    return std::make_pair(set.windows, set.skeleton);
  }();
  io::Container x, y;
  x.add(encode_windows(w, b.skeleton, 2));
  y.add(encode_windows(back_windows, skeleton, 2));
  CHECK(io::encode(x, io::Encoding::binary) == io::encode(y, io::Encoding::binary));
}

}  // TEST_SUITE
