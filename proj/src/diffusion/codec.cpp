#include "hoigen/diffusion/codec.hpp"

#include <algorithm>
#include <cmath>

#include "hoigen/core/rotation.hpp"

namespace hoigen::diffusion {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Normalizer Normalizer::identity(int features) {
  return {VectorXd::Zero(features), VectorXd::Ones(features)};
}

void Normalizer::validate(int features) const {
  if (mean.size() != features || scale.size() != features)
    throw ValidationError("normalizer: expected " + std::to_string(features) + " features");
  if (!mean.allFinite() || !scale.allFinite() || (scale.array() <= 0.0).any())
    throw ValidationError("normalizer: scales must be finite and positive");
}

Normalizer fit_normalizer(std::span<const SampleTensor> canonical, int features, double min_scale) {
  VectorXd sum = VectorXd::Zero(features), sq = VectorXd::Zero(features);
  double count = 0.0;
  for (const auto& t : canonical) {
    require_shape(t.values, t.valid.size(), features, "fit_normalizer");
    for (Index s = 0; s < t.values.rows(); ++s) {
      if (t.valid[s] == 0.0) continue;
      sum += t.values.row(s).transpose();
      sq += t.values.row(s).transpose().cwiseAbs2();
      count += 1.0;
    }
  }
  if (count == 0.0) throw ValidationError("fit_normalizer: no valid slots");
  Normalizer n;
  n.mean = sum / count;
  n.scale = (sq / count - n.mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt().cwiseMax(min_scale);
  return n;
}

SampleTensor pack_window(const keyaction::TrainingWindow& w, const SampleLayout& L) {
  w.validate(L.joints);
  if (static_cast<int>(w.keys.size()) + 1 != L.slots)
    throw ValidationError("pack_window: window has " + std::to_string(w.keys.size() + 1) + " slots, layout expects " +
                          std::to_string(L.slots));
  SampleTensor t{MatrixXd::Zero(L.slots, L.feature_dim()), VectorXd::Zero(L.slots)};
  for (int s = 0; s < L.slots; ++s) {
    if (s > 0 && !w.valid[static_cast<std::size_t>(s - 1)]) continue;
    const auto& e = s == 0 ? w.initial : w.keys[static_cast<std::size_t>(s - 1)];
    auto row = t.values.row(s);
    row.segment<3>(0) = e.pose.root_translation.transpose();
    for (int j = 0; j < L.joints; ++j)
      for (int k = 0; k < 6; ++k) row[3 + 6 * j + k] = e.pose.joint_rot6d[static_cast<std::size_t>(j)][k];
    const int o = L.object_offset();
    row.segment<3>(o) = e.object.position.transpose();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) row[o + 3 + 3 * r + c] = e.object.rotation(r, c);
    for (int k = 0; k < 4; ++k) row[L.contact_offset() + k] = e.contact[static_cast<std::size_t>(k)];
    row[L.time_offset()] = static_cast<double>(e.frame - w.initial.frame);
    t.valid[s] = 1.0;
  }
  return t;
}

KeyWindow unpack(const SampleTensor& raw, const SampleLayout& L) {
  require_shape(raw.values, L.slots, L.feature_dim(), "unpack");
  if (!raw.values.allFinite()) throw NumericError("unpack: non-finite sample");
  KeyWindow w;
  for (int s = 0; s < L.slots; ++s) {
    const auto row = raw.values.row(s);
    const bool valid = raw.valid[s] != 0.0;
    PoseFrame p;
    p.root_translation = row.segment<3>(0).transpose();
    for (int j = 0; j < L.joints; ++j) {
      Rot6d r;
      for (int k = 0; k < 6; ++k) r[static_cast<std::size_t>(k)] = row[3 + 6 * j + k];
      try {
        r = matrix_to_rot6d(rot6d_to_matrix(r));
      } catch (const DegenerateRotationError&) {
        r = matrix_to_rot6d(Mat3::Identity());
        if (valid) ++w.repaired_rotations;
      }
      p.joint_rot6d.push_back(r);
    }
    const int o = L.object_offset();
    ObjectPose op;
    op.position = row.segment<3>(o).transpose();
    Mat3 m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = row[o + 3 + 3 * r + c];
    op.rotation = m.norm() > 1e-12 ? project_to_rotation(m) : Mat3::Identity();
    Contact4 h{};
    for (int k = 0; k < 4; ++k) h[static_cast<std::size_t>(k)] = std::clamp(row[L.contact_offset() + k], 0.0, 1.0);
    w.poses.push_back(std::move(p));
    w.objects.push_back(op);
    w.contacts.push_back(h);
    w.time_offsets.push_back(s == 0 ? 0.0 : row[L.time_offset()]);
    w.valid.push_back(valid ? 1 : 0);
  }
  return w;
}

std::vector<int> key_frames(const KeyWindow& w, int start_frame) {
  std::vector<int> frames;
  for (int s = 0; s < w.slots(); ++s) {
    if (!w.valid[static_cast<std::size_t>(s)]) continue;
    int f = start_frame + static_cast<int>(std::lround(w.time_offsets[static_cast<std::size_t>(s)]));
    if (frames.empty()) f = start_frame;
    else f = std::max(f, frames.back() + 1);
    frames.push_back(f);
  }
  return frames;
}

namespace {

void write_condition_row(MatrixXd& motion, MatrixXd& mask, int s, const GivenSlot& g, const SampleLayout& L) {
  auto row = motion.row(s);
  row.segment<3>(0) = g.object.position.transpose();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) row[3 + 3 * r + c] = g.object.rotation(r, c);
  row.segment<3>(12) = g.pose.root_translation.transpose();
  if (static_cast<int>(g.pose.joint_rot6d.size()) != L.joints)
    throw ValidationError("build_condition: given pose has wrong joint count");
  for (int j = 0; j < L.joints; ++j)
    for (int k = 0; k < 6; ++k) row[15 + 6 * j + k] = g.pose.joint_rot6d[static_cast<std::size_t>(j)][k];
  mask.row(s).setOnes();
}

}  // namespace

ConditionBundle build_condition(const MatrixXd& geometry, std::span<const GivenSlot> given,
                                std::span<const SlotWaypoint> waypoints, const SlotTarget& target,
                                const VectorXd& text, const SampleLayout& L, int valid_slots) {
  const int g = static_cast<int>(given.size());
  if (valid_slots < 2 || valid_slots > L.slots) throw ValidationError("build_condition: invalid slot count");
  if (g < 1 || g >= valid_slots) throw ValidationError("build_condition: need between 1 and valid_slots - 1 given slots");
  int prev = -1;
  for (const auto& w : waypoints) {
    if (w.slot < g || w.slot >= valid_slots)
      throw ValidationError("build_condition: waypoint index " + std::to_string(w.slot) + " out of window");
    if (w.slot <= prev) throw ValidationError("build_condition: waypoints must be sorted by slot");
    prev = w.slot;
  }
  if (target.slot < g || target.slot >= valid_slots)
    throw ValidationError("build_condition: target index " + std::to_string(target.slot) + " out of window");

  ConditionBundle c;
  c.geometry = geometry;
  c.text = text;
  c.motion = MatrixXd::Zero(L.slots, L.condition_dim());
  c.mask = MatrixXd::Zero(L.slots, L.condition_dim());
  c.slot_valid = VectorXd::Zero(L.slots);
  c.slot_valid.head(valid_slots).setOnes();
  for (int s = 0; s < g; ++s) write_condition_row(c.motion, c.mask, s, given[static_cast<std::size_t>(s)], L);
  for (const auto& w : waypoints) {
    c.motion(w.slot, 0) = w.x;
    c.motion(w.slot, 1) = w.y;
    c.mask(w.slot, 0) = c.mask(w.slot, 1) = 1.0;
  }
  c.motion.row(target.slot).head<3>() = target.position.transpose();
  c.mask.row(target.slot).head<3>().setOnes();
  return c;
}

ConditionBundle window_condition(const keyaction::TrainingWindow& w, int given_slots, const MatrixXd& geometry,
                                 const VectorXd& text, const SampleLayout& L, const ConditionPolicy& policy) {
  if (policy.waypoint_stride < 1) throw ValidationError("condition policy: waypoint stride must be >= 1");
  const int target = w.valid_count();
  if (target < 1) throw ValidationError("window_condition: window has no key actions");
  const int g = std::clamp(given_slots, 1, target);
  auto entry = [&](int s) -> const keyaction::WindowEntry& {
    return s == 0 ? w.initial : w.keys[static_cast<std::size_t>(s - 1)];
  };
  std::vector<GivenSlot> given;
  for (int s = 0; s < g; ++s) given.push_back({entry(s).pose, entry(s).object});
  std::vector<SlotWaypoint> wps;
  for (int s = g; s < target; ++s)
    if (s % policy.waypoint_stride == 0) wps.push_back({s, entry(s).object.position.x(), entry(s).object.position.y()});
  return build_condition(geometry, given, wps, {target, entry(target).object.position}, text, L, target + 1);
}

namespace {

double heading_of(const Rot6d& root) {
  const Mat3 r = rot6d_to_matrix(root);
  return std::atan2(r(1, 0), r(0, 0));
}

/// Applies p -> R^T (p - o) (forward) or p -> R p + o (inverse) to the ground-plane quantities of a
/// row laid out with the given column offsets. Rotation blocks are left-multiplied by R^T or R.
struct PlanarMap {
  Mat3 rot;  // rotation applied to vectors
  Vec2 shift_before = Vec2::Zero();
  Vec2 shift_after = Vec2::Zero();

  static PlanarMap forward(const CanonicalFrame& f) {
    return {axis_angle(Vec3::UnitZ(), -f.yaw), -f.origin, Vec2::Zero()};
  }
  static PlanarMap inverse(const CanonicalFrame& f) {
    return {axis_angle(Vec3::UnitZ(), f.yaw), Vec2::Zero(), f.origin};
  }
  template <class Row>
  void point(Row&& row, int col) const {
    const Vec2 p = Vec2(row[col], row[col + 1]) + shift_before;
    const Vec2 q = rot.topLeftCorner<2, 2>() * p + shift_after;
    row[col] = q.x();
    row[col + 1] = q.y();
  }
  template <class Row>
  void column_vector(Row&& row, int col) const {
    const Vec3 v = rot * Vec3(row[col], row[col + 1], row[col + 2]);
    for (int k = 0; k < 3; ++k) row[col + k] = v[k];
  }
  /// Row-major 3x3 block.
  template <class Row>
  void matrix(Row&& row, int col) const {
    Mat3 m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = row[col + 3 * r + c];
    m = rot * m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) row[col + 3 * r + c] = m(r, c);
  }
  /// Sample row: root translation, root 6-DOF columns, object position and rotation.
  template <class Row>
  void sample_row(Row&& row, const SampleLayout& L) const {
    point(row, 0);
    column_vector(row, 3);
    column_vector(row, 6);
    point(row, L.object_offset());
    matrix(row, L.object_offset() + 3);
  }
};

}  // namespace

CanonicalFrame window_origin(const PoseFrame& initial) {
  if (initial.joint_rot6d.empty()) throw ValidationError("window_origin: pose has no joints");
  return {initial.root_translation.head<2>(), heading_of(initial.joint_rot6d.front())};
}

WindowCodec::WindowCodec(SampleLayout layout, Normalizer normalizer) : layout_(layout), norm_(std::move(normalizer)) {
  norm_.validate(layout_.feature_dim());
}

namespace {
SampleTensor map_rows(const SampleTensor& in, const SampleLayout& L, const PlanarMap& m) {
  require_shape(in.values, L.slots, L.feature_dim(), "canonicalize");
  SampleTensor t = in;
  for (int s = 0; s < L.slots; ++s)
    if (t.valid[s] != 0.0) m.sample_row(t.values.row(s), L);
  return t;
}
}  // namespace

SampleTensor WindowCodec::canonicalize(const SampleTensor& raw, const CanonicalFrame& frame) const {
  return map_rows(raw, layout_, PlanarMap::forward(frame));
}

SampleTensor WindowCodec::uncanonicalize(const SampleTensor& canonical, const CanonicalFrame& frame) const {
  return map_rows(canonical, layout_, PlanarMap::inverse(frame));
}

SampleTensor WindowCodec::to_model(const SampleTensor& raw, const CanonicalFrame& frame) const {
  SampleTensor t = canonicalize(raw, frame);
  for (int s = 0; s < layout_.slots; ++s)
    if (t.valid[s] != 0.0)
      t.values.row(s) = ((t.values.row(s).transpose() - norm_.mean).cwiseQuotient(norm_.scale)).transpose();
  return t;
}

SampleTensor WindowCodec::to_raw(const SampleTensor& model, const CanonicalFrame& frame) const {
  require_shape(model.values, layout_.slots, layout_.feature_dim(), "to_raw");
  SampleTensor t = model;
  for (int s = 0; s < layout_.slots; ++s)
    if (t.valid[s] != 0.0)
      t.values.row(s) = (t.values.row(s).transpose().cwiseProduct(norm_.scale) + norm_.mean).transpose();
  return uncanonicalize(t, frame);
}

CanonicalFrame WindowCodec::condition_frame(const ConditionBundle& raw) const {
  require_shape(raw.motion, layout_.slots, layout_.condition_dim(), "condition motion");
  if (raw.mask.row(0).minCoeff() == 0.0) throw ValidationError("condition: slot 0 must be fully given");
  Rot6d r;
  for (int k = 0; k < 6; ++k) r[static_cast<std::size_t>(k)] = raw.motion(0, 15 + k);
  return {Vec2(raw.motion(0, 12), raw.motion(0, 13)), heading_of(r)};
}

ConditionBundle WindowCodec::to_model(const ConditionBundle& raw, const CanonicalFrame& frame) const {
  require_shape(raw.motion, layout_.slots, layout_.condition_dim(), "condition motion");
  require_shape(raw.mask, layout_.slots, layout_.condition_dim(), "condition mask");
  const PlanarMap m = PlanarMap::forward(frame);
  ConditionBundle c = raw;
  for (int s = 0; s < layout_.slots; ++s) {
    auto row = c.motion.row(s);
    auto mask = c.mask.row(s);
    // entries come in groups that are given together
    if (mask[0] != 0.0 && mask[1] != 0.0) m.point(row, 0);
    if (mask[3] != 0.0) m.matrix(row, 3);
    if (mask[12] != 0.0 && mask[13] != 0.0) m.point(row, 12);
    if (mask[15] != 0.0) {
      m.column_vector(row, 15);
      m.column_vector(row, 18);
    }
    for (int j = 0; j < layout_.condition_dim(); ++j) {
      if (mask[j] == 0.0) {
        row[j] = 0.0;
        continue;
      }
      const int col = layout_.sample_column_of_condition(j);
      row[j] = (row[j] - norm_.mean[col]) / norm_.scale[col];
    }
  }
  return c;
}

namespace {

void write_matrix(io::ChunkWriter& w, const MatrixXd& m) {
  w.i64(m.rows()).i64(m.cols());
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) w.f64(m(r, c));
    w.newline();
  }
}

MatrixXd read_matrix(io::ChunkReader& r) {
  const auto rows = static_cast<Index>(r.count(1u << 20));
  const auto cols = static_cast<Index>(r.count(1u << 20));
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = r.f64();
  return m;
}

}  // namespace

io::Chunk encode_condition(const ConditionBundle& c) {
  io::ChunkWriter w("condition");
  w.i64(1).newline();
  write_matrix(w, c.geometry);
  write_matrix(w, c.motion);
  write_matrix(w, c.mask);
  write_matrix(w, c.slot_valid);
  write_matrix(w, c.text);
  return std::move(w).finish();
}

ConditionBundle decode_condition(const io::Chunk& chunk) {
  io::ChunkReader r(chunk);
  if (r.i64() != 1) throw FormatError("condition: unsupported schema");
  ConditionBundle c;
  c.geometry = read_matrix(r);
  c.motion = read_matrix(r);
  c.mask = read_matrix(r);
  const MatrixXd valid = read_matrix(r);
  const MatrixXd text = read_matrix(r);
  r.expect_done();
  if (valid.cols() != 1 || text.cols() != 1) throw FormatError("condition: vectors must have one column");
  c.slot_valid = valid.col(0);
  c.text = text.col(0);
  if (c.motion.rows() != c.mask.rows() || c.motion.cols() != c.mask.cols() || c.slot_valid.size() != c.motion.rows())
    throw FormatError("condition: inconsistent shapes");
  return c;
}

}  // namespace hoigen::diffusion
