#include "hoigen/io/motion_format.hpp"

#include <string>

#include "hoigen/core/error.hpp"

namespace hoigen::io {
namespace {

constexpr std::size_t kMaxJoints = 4096;
constexpr std::size_t kMaxFrames = 10'000'000;
constexpr std::int64_t kAnnotSchema = 1;

enum : std::int64_t { kHasPositions = 1, kHasObject = 2, kHasContacts = 4 };

}  // namespace

void MotionBundle::validate() const {
  skeleton.validate();
  motion.validate(skeleton);
  if (object) {
    if (object->length() != motion.length()) throw ValidationError("bundle: object trajectory length differs from motion");
    object->validate();
  }
  if (contacts) {
    if (contacts->length() != motion.length()) throw ValidationError("bundle: contact length differs from motion");
    contacts->validate();
  }
}

void write_skeleton(ChunkWriter& w, const SkeletonSpec& s) {
  w.i64(s.joint_count()).newline();
  for (int j = 0; j < s.joint_count(); ++j) {
    w.str(j < static_cast<int>(s.names.size()) ? s.names[j] : "joint" + std::to_string(j));
    w.i64(s.parents[j]).vec3(s.offsets[j]);
    w.i64(j < static_cast<int>(s.key_joint.size()) && s.key_joint[j] ? 1 : 0).newline();
  }
  w.i64(s.root).i64(s.left_hand).i64(s.right_hand).i64(s.left_foot).i64(s.right_foot).newline();
}

SkeletonSpec read_skeleton(ChunkReader& r) {
  SkeletonSpec s;
  const auto n = r.count(kMaxJoints);
  for (std::size_t j = 0; j < n; ++j) {
    s.names.push_back(r.str());
    s.parents.push_back(static_cast<int>(r.i64()));
    s.offsets.push_back(r.vec3());
    s.key_joint.push_back(r.i64() != 0);
  }
  s.root = static_cast<int>(r.i64());
  s.left_hand = static_cast<int>(r.i64());
  s.right_hand = static_cast<int>(r.i64());
  s.left_foot = static_cast<int>(r.i64());
  s.right_foot = static_cast<int>(r.i64());
  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("skeleton table: ") + e.what());
  }
  return s;
}

void write_frame_record(ChunkWriter& w, const PoseFrame& f, bool positions, const ObjectPose* object,
                        const Contact4* contact) {
  w.vec3(f.root_translation);
  for (const auto& r : f.joint_rot6d)
    for (double v : r) w.f64(v);
  if (positions)
    for (const auto& p : *f.joint_positions) w.vec3(p);
  if (object) w.vec3(object->position).mat3(object->rotation);
  if (contact)
    for (double c : *contact) w.f64(c);
  w.newline();
}

void read_frame_record(ChunkReader& r, std::size_t joints, bool positions, PoseFrame& f, ObjectPose* object,
                       Contact4* contact) {
  f.root_translation = r.vec3();
  f.joint_rot6d.resize(joints);
  for (auto& rot : f.joint_rot6d)
    for (double& v : rot) v = r.f64();
  if (positions) {
    f.joint_positions.emplace(joints);
    for (auto& p : *f.joint_positions) p = r.vec3();
  }
  if (object) {
    object->position = r.vec3();
    object->rotation = r.mat3();
  }
  if (contact)
    for (double& v : *contact) v = r.f64();
}

Chunk encode_motion(const MotionBundle& b) {
  b.validate();
  ChunkWriter w("motion");
  const bool positions = b.motion.frames.front().joint_positions.has_value();
  std::int64_t flags = 0;
  if (positions) flags |= kHasPositions;
  if (b.object) flags |= kHasObject;
  if (b.contacts) flags |= kHasContacts;
  w.i64(kMotionSchema).i64(b.motion.length()).i64(b.skeleton.joint_count()).f64(b.motion.frame_rate).i64(flags).newline();
  write_skeleton(w, b.skeleton);
  for (int t = 0; t < b.motion.length(); ++t) {
    const auto& f = b.motion.frames[t];
    if (positions != f.joint_positions.has_value())
      throw ValidationError("bundle: joint positions present on some frames only");
    write_frame_record(w, f, positions, b.object ? &b.object->poses[t] : nullptr,
                       b.contacts ? &b.contacts->frames[t] : nullptr);
  }
  return std::move(w).finish();
}

MotionBundle decode_motion(const Chunk& c) {
  ChunkReader r(c);
  const auto schema = r.i64();
  if (schema != kMotionSchema) throw FormatError("motion chunk: unsupported schema version " + std::to_string(schema));
  const auto t_count = r.count(kMaxFrames);
  const auto j_count = r.count(kMaxJoints);
  MotionBundle b;
  b.motion.frame_rate = r.f64();
  const auto flags = r.i64();
  if (flags < 0 || flags > 7) throw FormatError("motion chunk: unknown flags");
  b.skeleton = read_skeleton(r);
  if (static_cast<std::size_t>(b.skeleton.joint_count()) != j_count)
    throw FormatError("motion chunk: skeleton table size differs from header J");
  if (flags & kHasObject) b.object.emplace().frame_rate = b.motion.frame_rate;
  if (flags & kHasContacts) b.contacts.emplace();
  b.motion.frames.resize(t_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    ObjectPose op;
    Contact4 cc{};
    read_frame_record(r, j_count, flags & kHasPositions, b.motion.frames[t], b.object ? &op : nullptr,
                      b.contacts ? &cc : nullptr);
    if (b.object) b.object->poses.push_back(op);
    if (b.contacts) b.contacts->frames.push_back(cc);
  }
  r.expect_done();
  try {
    b.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("motion chunk: ") + e.what());
  }
  return b;
}

Chunk encode_annotations(const SequenceAnnotations& a) {
  ChunkWriter w("annot");
  w.i64(kAnnotSchema).str(a.prompt).str(a.mesh).newline();
  w.vec3(a.start).i64(a.target_frame).vec3(a.target).newline();
  w.i64(static_cast<std::int64_t>(a.waypoints.size())).newline();
  for (const auto& wp : a.waypoints) w.i64(wp.frame).f64(wp.x).f64(wp.y).newline();
  return std::move(w).finish();
}

SequenceAnnotations decode_annotations(const Chunk& c) {
  ChunkReader r(c);
  if (r.i64() != kAnnotSchema) throw FormatError("annot chunk: unsupported schema version");
  SequenceAnnotations a;
  a.prompt = r.str();
  a.mesh = r.str();
  a.start = r.vec3();
  a.target_frame = static_cast<int>(r.i64());
  a.target = r.vec3();
  const auto n = r.count(kMaxFrames);
  for (std::size_t i = 0; i < n; ++i) {
    Waypoint wp;
    wp.frame = static_cast<int>(r.i64());
    wp.x = r.f64();
    wp.y = r.f64();
    a.waypoints.push_back(wp);
  }
  r.expect_done();
  return a;
}

void save_sequence(const std::filesystem::path& path, const SequenceFile& s) {
  Container c;
  c.add(encode_motion(s.bundle));
  if (s.annotations) c.add(encode_annotations(*s.annotations));
  write_file(path, c, encoding_for(path));
}

SequenceFile load_sequence(const std::filesystem::path& path) {
  const Container c = read_file(path);
  SequenceFile s;
  try {
    s.bundle = decode_motion(c.require("motion"));
    if (const auto* a = c.find("annot")) s.annotations = decode_annotations(*a);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return s;
}

}  // namespace hoigen::io
