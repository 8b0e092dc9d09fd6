#include "support/fixtures.hpp"

#include <cmath>

#include "hoigen/core/rotation.hpp"

namespace hoigen::test {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

diffusion::DenoiserConfig small_denoiser_config() {
  diffusion::DenoiserConfig c;
  c.layout = {3, 4};
  c.hidden = 8;
  c.mlp = 12;
  c.blocks = 2;
  c.text_dim = 16;
  c.noise_embed_dim = 8;
  c.basis_points = 32;
  c.projected_points = 8;
  return c;
}

diffusion::TrainingExample random_example(const diffusion::DenoiserConfig& cfg, Rng& rng) {
  const auto& L = cfg.layout;
  diffusion::TrainingExample ex;
  ex.tau0.values = gaussian_matrix(rng, L.slots, L.feature_dim());
  ex.tau0.valid = VectorXd::Ones(L.slots);
  ex.tau0.valid[L.slots - 1] = 0.0;
  ex.tau0.values.row(L.slots - 1).setZero();
  auto& c = ex.condition;
  c.geometry = 0.3 * gaussian_matrix(rng, cfg.basis_points, 3);
  c.motion = gaussian_matrix(rng, L.slots, L.condition_dim());
  c.mask = MatrixXd::Zero(L.slots, L.condition_dim());
  for (Eigen::Index s = 0; s < c.mask.rows(); ++s)
    for (Eigen::Index j = 0; j < c.mask.cols(); ++j) c.mask(s, j) = rng.uniform() < 0.4 ? 1.0 : 0.0;
  c.slot_valid = ex.tau0.valid;
  c.text = gaussian_matrix(rng, cfg.text_dim, 1).col(0).normalized();
  return ex;
}

SkeletonSpec random_skeleton(Rng& rng, int joints) {
  if (joints < 4) throw ValidationError("random_skeleton: need at least 4 joints");
  SkeletonSpec s;
  for (int j = 0; j < joints; ++j) {
    s.parents.push_back(j == 0 ? -1 : static_cast<int>(rng.below(static_cast<std::uint64_t>(j))));
    if (j == 0) {
      s.offsets.push_back(Vec3(0, 0, 0.9));
    } else {
      const Vec3 dir(rng.normal(), rng.normal(), rng.normal());
      s.offsets.push_back(dir.normalized() * rng.uniform(0.1, 0.4));
    }
    s.names.push_back("j" + std::to_string(j));
  }
  s.left_hand = joints - 4;
  s.right_hand = joints - 3;
  s.left_foot = joints - 2;
  s.right_foot = joints - 1;
  s.key_joint.assign(static_cast<std::size_t>(joints), false);
  s.key_joint[0] = true;
  for (int e : s.end_effectors()) s.key_joint[static_cast<std::size_t>(e)] = true;
  return s;
}

namespace {

/// Sum of three random sinusoids evaluated at t.
struct Wave {
  double a[3], w[3], p[3];
  explicit Wave(Rng& rng, double amp, double max_freq) {
    for (int k = 0; k < 3; ++k) {
      a[k] = amp * rng.uniform(-1.0, 1.0);
      w[k] = rng.uniform(0.1, max_freq);
      p[k] = rng.uniform(0.0, 2.0 * kPi);
    }
  }
  double operator()(double t) const {
    double v = 0.0;
    for (int k = 0; k < 3; ++k) v += a[k] * std::sin(w[k] * t + p[k]);
    return v;
  }
};

}  // namespace

io::MotionBundle random_bundle(Rng& rng, int frames, int joints, bool with_object) {
  io::MotionBundle b;
  b.skeleton = random_skeleton(rng, joints);
  b.motion.frame_rate = 30.0;
  std::vector<Vec3> axes;
  std::vector<Wave> angle;
  for (int j = 0; j < joints; ++j) {
    axes.push_back(Vec3(rng.normal(), rng.normal(), rng.normal()).normalized());
    angle.emplace_back(rng, 0.8, 6.0);
  }
  Wave rx(rng, 0.8, 2.0), ry(rng, 0.8, 2.0), rz(rng, 0.05, 3.0);
  Wave ox(rng, 0.3, 3.0), oy(rng, 0.3, 3.0), oz(rng, 0.2, 3.0), oyaw(rng, 1.0, 3.0);
  std::vector<ObjectPose> obj;
  for (int t = 0; t < frames; ++t) {
    const double s = t / 30.0;
    PoseFrame f;
    f.root_translation = Vec3(rx(s), ry(s), rz(s));
    for (int j = 0; j < joints; ++j)
      f.joint_rot6d.push_back(matrix_to_rot6d(axis_angle(axes[static_cast<std::size_t>(j)], angle[static_cast<std::size_t>(j)](s))));
    b.motion.frames.push_back(std::move(f));
    ObjectPose o;
    o.position = Vec3(rx(s) + 0.5 + ox(s), ry(s) + oy(s), 0.8 + oz(s));
    o.rotation = axis_angle(Vec3::UnitZ(), oyaw(s));
    obj.push_back(o);
  }
  if (with_object) {
    b.object = ObjectTrajectory{obj, 30.0};
    ContactChannels c;
    for (int t = 0; t < frames; ++t) {
      const double v = (t / 10) % 2 == 0 ? 1.0 : 0.0;
      c.frames.push_back({v, v, 0.0, 0.0});
    }
    b.contacts = c;
  }
  b.validate();
  return b;
}

}  // namespace hoigen::test
