#include <cmath>

#include <doctest.h>

#include "hoigen/core/error.hpp"
#include "hoigen/core/kinematics.hpp"
#include "hoigen/core/rng.hpp"
#include "hoigen/core/rotation.hpp"
#include "hoigen/core/skeleton.hpp"
#include "support/fixtures.hpp"

using namespace hoigen;

namespace {

Mat3 random_rotation(Rng& rng) {
  const Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  return axis_angle(axis.normalized(), rng.uniform(0.0, kPi));
}

Mat3 rot_z(double a) { return axis_angle(Vec3::UnitZ(), a); }

}  // namespace

TEST_SUITE("core") {

TEST_CASE("rot6d decode of hand-picked inputs") {
  CHECK((rot6d_to_matrix({1, 0, 0, 0, 1, 0}) - Mat3::Identity()).norm() < 1e-15);
  CHECK((rot6d_to_matrix({0, 1, 0, -1, 0, 0}) - rot_z(kPi / 2)).norm() < 1e-12);
  CHECK((rot6d_to_matrix({2, 0, 0, 0, 3, 0}) - Mat3::Identity()).norm() < 1e-15);
}

TEST_CASE("rot6d encode of hand-picked rotations") {
  const Rot6d id = matrix_to_rot6d(Mat3::Identity());
  const Rot6d expect_id{1, 0, 0, 0, 1, 0};
  for (int i = 0; i < 6; ++i) CHECK(id[i] == doctest::Approx(expect_id[i]));
  const Rot6d flip = matrix_to_rot6d(axis_angle(Vec3::UnitX(), kPi));
  const Rot6d expect_flip{1, 0, 0, 0, -1, 0};
  for (int i = 0; i < 6; ++i) CHECK(std::abs(flip[i] - expect_flip[i]) < 1e-12);
}

TEST_CASE("rot6d round trip over random rotations") {
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = random_rotation(rng);
    worst = std::max(worst, (rot6d_to_matrix(matrix_to_rot6d(r)) - r).norm());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("degenerate 6-DOF input is rejected") {
  CHECK_THROWS_AS(rot6d_to_matrix({0, 0, 0, 0, 1, 0}), DegenerateRotationError);
  CHECK_THROWS_AS(rot6d_to_matrix({1, 0, 0, 2, 0, 0}), DegenerateRotationError);
  CHECK_THROWS_AS(rot6d_to_matrix({NAN, 0, 0, 0, 1, 0}), ValidationError);
}

TEST_CASE("rotation difference") {
  Rng rng(7);
  const Mat3 r = random_rotation(rng);
  CHECK((rotation_difference(r, r) - Mat3::Identity()).norm() < 1e-12);
  CHECK((rotation_difference(rot_z(kPi / 2), Mat3::Identity()) - rot_z(kPi / 2)).norm() < 1e-15);
  for (int i = 0; i < 100; ++i) {
    const Mat3 a = random_rotation(rng), b = random_rotation(rng);
    CHECK((rotation_difference(a * b, b) - a).norm() < 1e-9);
    CHECK((rotation_difference(a, b) * b - a).norm() < 1e-9);
  }
}

TEST_CASE("rotation angle, log and slerp") {
  CHECK(rotation_angle(rot_z(0.3)) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(rotation_angle(axis_angle(Vec3::UnitY(), kPi)) == doctest::Approx(kPi));
  CHECK((rotation_log(rot_z(0.7)) - Vec3(0, 0, 0.7)).norm() < 1e-12);
  const Mat3 mid = slerp(Mat3::Identity(), rot_z(kPi / 2), 0.4);
  CHECK((mid - rot_z(0.4 * kPi / 2)).norm() < 1e-12);
  CHECK((slerp(rot_z(0.1), rot_z(1.1), 0.0) - rot_z(0.1)).norm() < 1e-12);
  CHECK((slerp(rot_z(0.1), rot_z(1.1), 1.0) - rot_z(1.1)).norm() < 1e-12);
}

TEST_CASE("projection onto rotations") {
  Rng rng(3);
  Mat3 noisy = random_rotation(rng);
  noisy(0, 1) += 0.05;
  CHECK(is_rotation(project_to_rotation(noisy)));
  CHECK_FALSE(is_rotation(noisy));
}

TEST_CASE("forward kinematics of the rest pose") {
  const SkeletonSpec s = default_humanoid();
  PoseFrame f;
  f.joint_rot6d.assign(s.joint_count(), Rot6d{1, 0, 0, 0, 1, 0});
  const LinkPoses poses = forward_kinematics(s, f);
  for (int j = 0; j < s.joint_count(); ++j) {
    Vec3 expected = Vec3::Zero();
    for (int k = j; k >= 0; k = s.parents[k]) expected += s.offsets[k];
    CHECK((poses.positions[j] - expected).norm() < 1e-12);
  }
}

TEST_CASE("forward kinematics of a rotated two-link chain") {
  SkeletonSpec s;
  s.parents = {-1, 0};
  s.offsets = {Vec3::Zero(), Vec3(1, 0, 0)};
  s.names = {"root", "tip"};
  s.key_joint = {true, true};
  PoseFrame f;
  f.joint_rot6d = {matrix_to_rot6d(rot_z(kPi / 2)), Rot6d{1, 0, 0, 0, 1, 0}};
  const LinkPoses poses = forward_kinematics(s, f);
  CHECK((poses.positions[1] - Vec3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("global and relative representations round trip") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto b = test::random_bundle(rng, 15, 4 + trial % 5, false);
    const GlobalMotion g = relative_to_global(b.skeleton, b.motion);
    const MotionSequence back = global_to_relative(b.skeleton, g);
    REQUIRE(back.length() == b.motion.length());
    double worst = 0.0;
    for (int t = 0; t < back.length(); ++t) {
      worst = std::max(worst, (back.frames[t].root_translation - b.motion.frames[t].root_translation).norm());
      for (int j = 0; j < b.skeleton.joint_count(); ++j) {
        const Mat3 a = rot6d_to_matrix(back.frames[t].joint_rot6d[j]);
        const Mat3 e = rot6d_to_matrix(b.motion.frames[t].joint_rot6d[j]);
        worst = std::max(worst, (a - e).cwiseAbs().maxCoeff());
      }
    }
    CHECK(worst < 1e-6);
    const GlobalMotion again = relative_to_global(b.skeleton, back);
    for (int t = 0; t < back.length(); ++t)
      for (int j = 0; j < b.skeleton.joint_count(); ++j)
        CHECK((again.frames[t].positions[j] - g.frames[t].positions[j]).norm() < 1e-6);
  }
}

TEST_CASE("finite-difference velocities of known trajectories") {
  SUBCASE("static") {
    std::vector<Vec3> p(5, Vec3(1, 2, 3));
    std::vector<Mat3> r(5, rot_z(0.4));
    const auto [v, w] = finite_difference_velocities(p, r, 30.0);
    for (int t = 0; t < 5; ++t) {
      CHECK(v[t].norm() == 0.0);
      CHECK(w[t].norm() < 1e-12);
    }
  }
  SUBCASE("linear translation") {
    const double fps = 30.0;
    std::vector<Vec3> p;
    std::vector<Mat3> r;
    for (int t = 0; t < 8; ++t) {
      p.emplace_back(t / fps, 0, 0);
      r.push_back(Mat3::Identity());
    }
    const auto [v, w] = finite_difference_velocities(p, r, fps);
    for (const auto& x : v) CHECK((x - Vec3(1, 0, 0)).norm() < 1e-12);
  }
  SUBCASE("quarter turn per frame") {
    std::vector<Vec3> p(6, Vec3::Zero());
    std::vector<Mat3> r;
    for (int t = 0; t < 6; ++t) r.push_back(rot_z(t * kPi / 2));
    const auto [v, w] = finite_difference_velocities(p, r, 30.0);
    for (const auto& x : w) CHECK((x - Vec3(0, 0, 30.0 * kPi / 2)).norm() < 1e-9);
  }
  SUBCASE("cubic at 120 Hz within twice the truncation bound") {
    // Forward difference error for p = t^3 is h*|p''|/2 + h^2*|p'''|/6 at worst.
    const double fps = 120.0, h = 1.0 / fps;
    std::vector<Vec3> p;
    std::vector<Mat3> r;
    const int n = 121;
    for (int i = 0; i < n; ++i) {
      const double t = i * h;
      p.emplace_back(t * t * t, 0, 0);
      r.push_back(Mat3::Identity());
    }
    const auto [v, w] = finite_difference_velocities(p, r, fps);
    const double bound = 2.0 * (h * 6.0 / 2.0 + h * h * 6.0 / 6.0);
    for (int i = 0; i < n; ++i) {
      const double t = i * h;
      CHECK(std::abs(v[i].x() - 3 * t * t) <= bound);
    }
  }
}

TEST_CASE("skeleton validation") {
  const SkeletonSpec good = default_humanoid();
  CHECK_NOTHROW(good.validate());
  SkeletonSpec bad = good;
  bad.parents[1] = 5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = good;
  bad.offsets.pop_back();
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("seeded streams are deterministic and distinct") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  CHECK(derive_seed(1, "train") == derive_seed(1, "train"));
  CHECK(derive_seed(1, "train") != derive_seed(1, "eval"));
  CHECK(derive_seed(1, "window", 1) != derive_seed(1, "window", 2));

  Rng n(5);
  double sum = 0.0, sq = 0.0;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) {
    const double z = n.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / draws) < 0.01);
  CHECK(std::abs(sq / draws - 1.0) < 0.01);
}

}  // TEST_SUITE
