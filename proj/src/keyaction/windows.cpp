#include "hoigen/keyaction/windows.hpp"

#include <string>

#include "hoigen/core/error.hpp"

namespace hoigen::keyaction {
namespace {

constexpr std::int64_t kWindowsSchema = 1;

WindowEntry entry_at(const MotionBundle& b, int frame) {
  WindowEntry e;
  e.frame = frame;
  e.pose = b.motion.frames[frame];
  e.pose.joint_positions.reset();
  if (b.object) e.object = b.object->poses[frame];
  if (b.contacts) e.contact = b.contacts->frames[frame];
  return e;
}

void write_entry(io::ChunkWriter& w, const WindowEntry& e) {
  w.i64(e.frame);
  io::write_frame_record(w, e.pose, false, &e.object, &e.contact);
}

WindowEntry read_entry(io::ChunkReader& r, std::size_t joints) {
  WindowEntry e;
  e.frame = static_cast<int>(r.i64());
  io::read_frame_record(r, joints, false, e.pose, &e.object, &e.contact);
  return e;
}

}  // namespace

int TrainingWindow::valid_count() const {
  int n = 0;
  for (auto v : valid) n += v ? 1 : 0;
  return n;
}

void TrainingWindow::validate(int joint_count) const {
  if (keys.empty()) throw ValidationError("window: no key actions");
  if (valid.size() != keys.size()) throw ValidationError("window: validity mask size differs from key count");
  if (!valid.front()) throw ValidationError("window: first key action must be valid");
  int prev = initial.frame;
  bool padding = false;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (static_cast<int>(keys[i].pose.joint_rot6d.size()) != joint_count)
      throw ValidationError("window: key pose does not match skeleton");
    if (!valid[i]) {
      padding = true;
      continue;
    }
    if (padding) throw ValidationError("window: valid entry after padding");
    if (keys[i].frame <= prev) throw ValidationError("window: key frames must be increasing");
    prev = keys[i].frame;
  }
  if (static_cast<int>(initial.pose.joint_rot6d.size()) != joint_count)
    throw ValidationError("window: initial pose does not match skeleton");
}

std::vector<TrainingWindow> build_training_windows(const MotionBundle& sequence, const KeyActionSet& keys,
                                                   int window_key_count, int stride, const std::string& prompt,
                                                   const std::string& mesh) {
  if (keys.size() == 0) throw ValidationError("build_training_windows: empty key set");
  keys.validate();
  if (window_key_count < 1) throw ValidationError("build_training_windows: window_key_count must be >= 1");
  if (stride < 1) throw ValidationError("build_training_windows: stride must be >= 1");
  if (keys.source_length != sequence.motion.length())
    throw ValidationError("build_training_windows: key set does not belong to this sequence");
  const int k = keys.size();
  std::vector<TrainingWindow> out;
  for (int start = 0; start < k - 1; start += stride) {
    TrainingWindow w;
    w.prompt = prompt;
    w.mesh = mesh;
    w.initial = entry_at(sequence, keys.indices[start]);
    bool padded = false;
    for (int i = 1; i <= window_key_count; ++i) {
      const int ki = start + i;
      if (ki < k) {
        w.keys.push_back(entry_at(sequence, keys.indices[ki]));
        w.valid.push_back(1);
      } else {
        w.keys.push_back(w.keys.back());
        w.valid.push_back(0);
        padded = true;
      }
    }
    out.push_back(std::move(w));
    if (padded) break;
  }
  return out;
}

io::Chunk encode_windows(const std::vector<TrainingWindow>& windows, const SkeletonSpec& skeleton, int window_key_count) {
  io::ChunkWriter w("windows");
  w.i64(kWindowsSchema).i64(static_cast<std::int64_t>(windows.size())).i64(window_key_count).newline();
  io::write_skeleton(w, skeleton);
  for (const auto& win : windows) {
    win.validate(skeleton.joint_count());
    if (static_cast<int>(win.keys.size()) != window_key_count)
      throw ValidationError("encode_windows: window size differs from declared key count");
    w.str(win.prompt).str(win.mesh).newline();
    write_entry(w, win.initial);
    for (std::size_t i = 0; i < win.keys.size(); ++i) {
      w.i64(win.valid[i]);
      write_entry(w, win.keys[i]);
    }
  }
  return std::move(w).finish();
}

WindowSet decode_windows(const io::Chunk& c) {
  io::ChunkReader r(c);
  if (r.i64() != kWindowsSchema) throw FormatError("windows chunk: unsupported schema version");
  WindowSet ws;
  const auto n = r.count(100'000'000);
  ws.window_key_count = static_cast<int>(r.count(100'000));
  ws.skeleton = io::read_skeleton(r);
  const auto joints = static_cast<std::size_t>(ws.skeleton.joint_count());
  for (std::size_t i = 0; i < n; ++i) {
    TrainingWindow w;
    w.prompt = r.str();
    w.mesh = r.str();
    w.initial = read_entry(r, joints);
    for (int k = 0; k < ws.window_key_count; ++k) {
      w.valid.push_back(r.i64() != 0 ? 1 : 0);
      w.keys.push_back(read_entry(r, joints));
    }
    try {
      w.validate(ws.skeleton.joint_count());
    } catch (const ValidationError& e) {
      throw FormatError(std::string("windows chunk: ") + e.what());
    }
    ws.windows.push_back(std::move(w));
  }
  r.expect_done();
  return ws;
}

}  // namespace hoigen::keyaction
