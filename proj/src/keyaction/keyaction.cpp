#include "hoigen/keyaction/keyaction.hpp"

#include <cmath>
#include <string>

#include "hoigen/core/error.hpp"
#include "hoigen/core/kinematics.hpp"
#include "hoigen/core/rotation.hpp"

namespace hoigen::keyaction {

JointWeights JointWeights::defaults(const SkeletonSpec& s, double critical, double object) {
  JointWeights w;
  w.joints.assign(s.joint_count(), 1.0);
  for (int e : s.end_effectors())
    if (e >= 0 && e < s.joint_count()) w.joints[e] = critical;
  w.object = object;
  return w;
}

void JointWeights::validate(int joint_count) const {
  if (static_cast<int>(joints.size()) != joint_count)
    throw ValidationError("weights: expected " + std::to_string(joint_count) + " joint weights, got " +
                          std::to_string(joints.size()));
  bool positive = object > 0.0;
  if (!(object >= 0.0)) throw ValidationError("weights: object weight must be nonnegative");
  for (double w : joints) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("weights: joint weights must be nonnegative");
    positive = positive || w > 0.0;
  }
  if (!positive) throw ValidationError("weights: at least one weight must be positive");
}

std::vector<Vec3> object_marker_offsets(double radius) {
  const double s = radius / std::sqrt(3.0);
  return {Vec3::Zero(), Vec3(s, s, s), Vec3(s, -s, -s), Vec3(-s, s, -s), Vec3(-s, -s, s)};
}

namespace {

void fill_frame_points(const SkeletonSpec& skeleton, const PoseFrame& f, const ObjectPose* obj,
                       const std::vector<Vec3>& markers, Vec3* out) {
  const LinkPoses lp = forward_kinematics(skeleton, f);
  const int j = skeleton.joint_count();
  for (int n = 0; n < j; ++n) out[n] = lp.positions[n];
  if (obj)
    for (std::size_t m = 0; m < markers.size(); ++m) out[j + m] = obj->position + obj->rotation * markers[m];
}

}  // namespace

PointTracks tracked_points(const MotionBundle& b) {
  const auto markers = object_marker_offsets();
  PointTracks pt;
  pt.frames = b.motion.length();
  pt.points = b.skeleton.joint_count() + (b.object ? static_cast<int>(markers.size()) : 0);
  pt.data.resize(static_cast<std::size_t>(pt.frames) * pt.points);
  for (int t = 0; t < pt.frames; ++t)
    fill_frame_points(b.skeleton, b.motion.frames[t], b.object ? &b.object->poses[t] : nullptr, markers, &pt.at(t, 0));
  return pt;
}

std::vector<double> point_weights(const JointWeights& w, int joint_count, bool has_object) {
  w.validate(joint_count);
  std::vector<double> out = w.joints;
  if (has_object) out.insert(out.end(), object_marker_offsets().size(), w.object);
  return out;
}

ReconstructionReport reconstruction_error(const PointTracks& ref, const PointTracks& rec, std::span<const double> weights,
                                          std::span<const int> keys) {
  if (ref.frames != rec.frames) throw ValidationError("reconstruction_error: sequence lengths differ");
  if (ref.points != rec.points) throw ValidationError("reconstruction_error: point counts differ");
  if (static_cast<int>(weights.size()) != ref.points) throw ValidationError("reconstruction_error: weight count mismatch");
  ReconstructionReport rep;
  std::vector<double> frame_err(ref.frames, 0.0);
  for (int t = 0; t < ref.frames; ++t) {
    for (int n = 0; n < ref.points; ++n) {
      const double e = weights[n] * (ref.at(t, n) - rec.at(t, n)).norm();
      if (e > frame_err[t]) frame_err[t] = e;
      if (e > rep.max_error) {
        rep.max_error = e;
        rep.argmax_frame = t;
        rep.argmax_point = n;
      }
    }
  }
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    double m = 0.0;
    for (int t = keys[i]; t <= keys[i + 1] && t < ref.frames; ++t) m = std::max(m, frame_err[t]);
    rep.segment_errors.push_back(m);
  }
  return rep;
}

ReconstructionReport reconstruction_error(const MotionBundle& ref, const MotionBundle& rec, const JointWeights& w,
                                          std::span<const int> keys) {
  if (ref.motion.length() != rec.motion.length()) throw ValidationError("reconstruction_error: sequence lengths differ");
  if (ref.object.has_value() != rec.object.has_value())
    throw ValidationError("reconstruction_error: object presence differs");
  const auto weights = point_weights(w, ref.skeleton.joint_count(), ref.object.has_value());
  return reconstruction_error(tracked_points(ref), tracked_points(rec), weights, keys);
}

void KeyActionSet::validate() const {
  const int k = size();
  if (k < 2) throw ValidationError("key set: need at least 2 keys");
  if (indices.front() != 0 || indices.back() != source_length - 1)
    throw ValidationError("key set: first and last frames must be keys");
  for (int i = 1; i < k; ++i)
    if (indices[i] <= indices[i - 1]) throw ValidationError("key set: indices must be strictly increasing");
  if (static_cast<int>(poses.size()) != k) throw ValidationError("key set: pose count differs from index count");
  if (!objects.empty() && static_cast<int>(objects.size()) != k)
    throw ValidationError("key set: object count differs from index count");
  if (!contacts.empty() && static_cast<int>(contacts.size()) != k)
    throw ValidationError("key set: contact count differs from index count");
}

KeyActionSet select_keys(const MotionBundle& b, std::vector<int> indices) {
  KeyActionSet k;
  k.source_length = b.motion.length();
  k.frame_rate = b.motion.frame_rate;
  for (int i : indices) {
    if (i < 0 || i >= k.source_length) throw ValidationError("select_keys: index out of range");
    k.poses.push_back(b.motion.frames[i]);
    if (b.object) k.objects.push_back(b.object->poses[i]);
    if (b.contacts) k.contacts.push_back(b.contacts->frames[i]);
  }
  k.indices = std::move(indices);
  k.validate();
  return k;
}

PoseFrame interpolate_pose(const PoseFrame& a, const PoseFrame& b, double alpha) {
  PoseFrame f;
  f.root_translation = (1.0 - alpha) * a.root_translation + alpha * b.root_translation;
  f.joint_rot6d.resize(a.joint_rot6d.size());
  for (std::size_t j = 0; j < a.joint_rot6d.size(); ++j) {
    const Mat3 r = slerp(rot6d_to_matrix(a.joint_rot6d[j]), rot6d_to_matrix(b.joint_rot6d[j]), alpha);
    f.joint_rot6d[j] = {r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1)};
  }
  if (a.joint_positions && b.joint_positions) {
    f.joint_positions.emplace(a.joint_positions->size());
    for (std::size_t j = 0; j < a.joint_positions->size(); ++j)
      (*f.joint_positions)[j] = (1.0 - alpha) * (*a.joint_positions)[j] + alpha * (*b.joint_positions)[j];
  }
  return f;
}

ObjectPose interpolate_object(const ObjectPose& a, const ObjectPose& b, double alpha) {
  ObjectPose o;
  o.position = (1.0 - alpha) * a.position + alpha * b.position;
  o.rotation = slerp(a.rotation, b.rotation, alpha);
  return o;
}

namespace {
double alpha_at(int a, int c, int t) { return static_cast<double>(t - a) / static_cast<double>(c - a); }
}  // namespace

MotionBundle interpolate(const KeyActionSet& keys, const SkeletonSpec& skeleton) {
  keys.validate();
  MotionBundle out;
  out.skeleton = skeleton;
  out.motion.frame_rate = keys.frame_rate;
  out.motion.frames.resize(keys.source_length);
  const bool has_obj = !keys.objects.empty();
  const bool has_contact = !keys.contacts.empty();
  if (has_obj) {
    out.object.emplace();
    out.object->frame_rate = keys.frame_rate;
    out.object->poses.resize(keys.source_length);
  }
  if (has_contact) out.contacts.emplace().frames.resize(keys.source_length);
  for (int i = 0; i + 1 < keys.size(); ++i) {
    const int a = keys.indices[i];
    const int c = keys.indices[i + 1];
    out.motion.frames[a] = keys.poses[i];
    if (has_obj) out.object->poses[a] = keys.objects[i];
    if (has_contact) out.contacts->frames[a] = keys.contacts[i];
    for (int t = a + 1; t < c; ++t) {
      const double alpha = alpha_at(a, c, t);
      out.motion.frames[t] = interpolate_pose(keys.poses[i], keys.poses[i + 1], alpha);
      if (has_obj) out.object->poses[t] = interpolate_object(keys.objects[i], keys.objects[i + 1], alpha);
      if (has_contact) out.contacts->frames[t] = keys.contacts[i];
    }
  }
  const int last = keys.size() - 1;
  out.motion.frames[keys.indices[last]] = keys.poses[last];
  if (has_obj) out.object->poses[keys.indices[last]] = keys.objects[last];
  if (has_contact) out.contacts->frames[keys.indices[last]] = keys.contacts[last];
  return out;
}

SegmentError segment_error(const MotionBundle& b, const PointTracks& ref, std::span<const double> weights, int a, int c) {
  SegmentError se;
  const auto markers = object_marker_offsets();
  std::vector<Vec3> pts(ref.points);
  for (int t = a + 1; t < c; ++t) {
    const double alpha = alpha_at(a, c, t);
    const PoseFrame f = interpolate_pose(b.motion.frames[a], b.motion.frames[c], alpha);
    ObjectPose op;
    if (b.object) op = interpolate_object(b.object->poses[a], b.object->poses[c], alpha);
    fill_frame_points(b.skeleton, f, b.object ? &op : nullptr, markers, pts.data());
    for (int n = 0; n < ref.points; ++n) {
      const double e = weights[n] * (ref.at(t, n) - pts[n]).norm();
      if (e > se.error) {
        se.error = e;
        se.frame = t;
      }
    }
  }
  return se;
}

KeyActionSet extract_key_actions(const MotionBundle& b, const ExtractionOptions& opt) {
  b.validate();
  if (!(opt.epsilon > 0.0)) throw ValidationError("extract_key_actions: epsilon must be positive");
  const auto weights = point_weights(opt.weights, b.skeleton.joint_count(), b.object.has_value());
  const PointTracks ref = tracked_points(b);
  const int t_count = b.motion.length();

  std::vector<char> is_key(t_count, 0);
  is_key[0] = is_key[t_count - 1] = 1;
  std::vector<std::pair<int, int>> pending{{0, t_count - 1}};
  while (!pending.empty()) {
    const auto [a, c] = pending.back();
    pending.pop_back();
    const SegmentError se = segment_error(b, ref, weights, a, c);
    if (se.frame < 0 || se.error <= opt.epsilon) continue;
    is_key[se.frame] = 1;
    pending.emplace_back(se.frame, c);
    pending.emplace_back(a, se.frame);
  }
  std::vector<int> idx;
  for (int t = 0; t < t_count; ++t)
    if (is_key[t]) idx.push_back(t);
  return select_keys(b, std::move(idx));
}

std::vector<KeyActionSet> extract_corpus(std::span<const MotionBundle> corpus, const ExtractionOptions& opt) {
  std::vector<KeyActionSet> out(corpus.size());
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = extract_key_actions(corpus[i], opt);
    } catch (...) {
#pragma omp critical(hoigen_extract_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<KeyActionSet> extract_corpus_serial(std::span<const MotionBundle> corpus, const ExtractionOptions& opt) {
  std::vector<KeyActionSet> out;
  out.reserve(corpus.size());
  for (const auto& b : corpus) out.push_back(extract_key_actions(b, opt));
  return out;
}

namespace {
constexpr std::int64_t kKeysetSchema = 1;
enum : std::int64_t { kHasObject = 2, kHasContacts = 4 };
}  // namespace

io::Chunk encode_keyset(const KeyActionSet& k, const SkeletonSpec& skeleton) {
  k.validate();
  io::ChunkWriter w("keyset");
  std::int64_t flags = 0;
  if (!k.objects.empty()) flags |= kHasObject;
  if (!k.contacts.empty()) flags |= kHasContacts;
  w.i64(kKeysetSchema).i64(k.source_length).i64(k.size()).i64(skeleton.joint_count()).f64(k.frame_rate).i64(flags);
  w.newline();
  io::write_skeleton(w, skeleton);
  for (int i : k.indices) w.i64(i);
  w.newline();
  for (int i = 0; i < k.size(); ++i)
    io::write_frame_record(w, k.poses[i], false, k.objects.empty() ? nullptr : &k.objects[i],
                           k.contacts.empty() ? nullptr : &k.contacts[i]);
  return std::move(w).finish();
}

std::pair<KeyActionSet, SkeletonSpec> decode_keyset(const io::Chunk& c) {
  io::ChunkReader r(c);
  if (r.i64() != kKeysetSchema) throw FormatError("keyset chunk: unsupported schema version");
  KeyActionSet k;
  k.source_length = static_cast<int>(r.count(10'000'000));
  const auto n = r.count(static_cast<std::size_t>(k.source_length));
  const auto joints = r.count(4096);
  k.frame_rate = r.f64();
  const auto flags = r.i64();
  SkeletonSpec s = io::read_skeleton(r);
  if (static_cast<std::size_t>(s.joint_count()) != joints) throw FormatError("keyset chunk: skeleton size mismatch");
  for (std::size_t i = 0; i < n; ++i) k.indices.push_back(static_cast<int>(r.i64()));
  for (std::size_t i = 0; i < n; ++i) {
    PoseFrame f;
    ObjectPose op;
    Contact4 cc{};
    io::read_frame_record(r, joints, false, f, (flags & kHasObject) ? &op : nullptr, (flags & kHasContacts) ? &cc : nullptr);
    k.poses.push_back(std::move(f));
    if (flags & kHasObject) k.objects.push_back(op);
    if (flags & kHasContacts) k.contacts.push_back(cc);
  }
  r.expect_done();
  try {
    k.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("keyset chunk: ") + e.what());
  }
  return {std::move(k), std::move(s)};
}

}  // namespace hoigen::keyaction
