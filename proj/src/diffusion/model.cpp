#include "hoigen/diffusion/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "hoigen/core/rng.hpp"
#include "hoigen/io/motion_format.hpp"

namespace hoigen::diffusion {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void Model::validate() const {
  params.validate();
  skeleton.validate();
  if (skeleton.joint_count() != params.config.layout.joints)
    throw ValidationError("model: skeleton joint count does not match the denoiser layout");
  normalizer.validate(params.config.layout.feature_dim());
  if (n_over < 1 || n_over >= params.config.layout.slots) throw ValidationError("model: n_over must be in [1, slots)");
  if (policy.waypoint_stride < 1) throw ValidationError("model: waypoint stride must be >= 1");
  build_schedule(schedule.steps, schedule.beta_start, schedule.beta_end);
}

KeyWindow sample(const DenoiseFn& denoiser, const WindowCodec& codec, const NoiseSchedule& schedule,
                 const ConditionBundle& raw_condition, const SamplerOptions& options) {
  const auto& L = codec.layout();
  require_shape(raw_condition.motion, L.slots, L.condition_dim(), "condition motion");
  const CanonicalFrame frame = codec.condition_frame(raw_condition);
  const ConditionBundle model_cond = codec.to_model(raw_condition, frame);
  const SampleTensor t = sample_tensor(denoiser, model_cond, schedule, L, options);
  return unpack(codec.to_raw(t, frame), L);
}

KeyWindow sample(const Model& model, const ConditionBundle& raw_condition, const SamplerOptions& options) {
  return sample(network_denoiser(model.params), model.codec(), model.noise_schedule(), raw_condition, options);
}

GeneratedSequence autoregressive_generate(const DenoiseFn& denoiser, const WindowCodec& codec,
                                          const NoiseSchedule& schedule, const LongRequest& req, int n_over,
                                          const SamplerOptions& options) {
  const auto& L = codec.layout();
  const int S = L.slots;
  if (req.goals.empty()) throw ValidationError("autoregressive_generate: horizon must cover at least one window");
  if (n_over < 1 || n_over > S - 1) throw ValidationError("autoregressive_generate: n_over must be in [1, slots - 1]");
  for (std::size_t w = 0; w < req.goals.size(); ++w) {
    const int first_free = w == 0 ? 1 : n_over;
    for (const auto& wp : req.goals[w].waypoints)
      if (wp.slot < first_free || wp.slot >= S - 1)
        throw ValidationError("autoregressive_generate: waypoint slot " + std::to_string(wp.slot) + " of window " +
                              std::to_string(w) + " lies beyond the window horizon");
  }

  GeneratedSequence out;
  for (std::size_t w = 0; w < req.goals.size(); ++w) {
    std::vector<GivenSlot> given;
    int start_frame = 0;
    if (w == 0) {
      given.push_back(req.initial);
    } else {
      const int first = out.size() - n_over;
      start_frame = out.frames[static_cast<std::size_t>(first)];
      for (int i = first; i < out.size(); ++i)
        given.push_back({out.poses[static_cast<std::size_t>(i)], out.objects[static_cast<std::size_t>(i)]});
    }
    const auto& goal = req.goals[w];
    const ConditionBundle cond =
        build_condition(req.geometry, given, goal.waypoints, {S - 1, goal.target}, req.text, L, S);
    SamplerOptions o = options;
    if (w > 0) o.seed = derive_seed(options.seed, "window", w);
    const KeyWindow kw = sample(denoiser, codec, schedule, cond, o);
    out.repaired_rotations += kw.repaired_rotations;

    const int skip = w == 0 ? 0 : n_over;  // overlap slots already in the output
    for (int s = skip; s < S; ++s) {
      int f = start_frame + static_cast<int>(std::lround(kw.time_offsets[static_cast<std::size_t>(s)]));
      if (s == 0) f = start_frame;
      if (!out.frames.empty()) f = std::max(f, out.frames.back() + 1);
      out.frames.push_back(f);
      out.poses.push_back(kw.poses[static_cast<std::size_t>(s)]);
      out.objects.push_back(kw.objects[static_cast<std::size_t>(s)]);
      out.contacts.push_back(kw.contacts[static_cast<std::size_t>(s)]);
    }
    ++out.windows;
  }
  return out;
}

GeneratedSequence autoregressive_generate(const Model& model, const LongRequest& request, int n_over,
                                          const SamplerOptions& options) {
  return autoregressive_generate(network_denoiser(model.params), model.codec(), model.noise_schedule(), request,
                                 n_over, options);
}

keyaction::KeyActionSet to_keyset(const GeneratedSequence& g, double frame_rate) {
  if (g.size() < 2) throw ValidationError("to_keyset: need at least two key actions");
  keyaction::KeyActionSet k;
  const int base = g.frames.front();
  for (int f : g.frames) k.indices.push_back(f - base);
  k.poses = g.poses;
  k.objects = g.objects;
  k.contacts = g.contacts;
  k.source_length = k.indices.back() + 1;
  k.frame_rate = frame_rate;
  k.validate();
  return k;
}

keyaction::KeyActionSet to_keyset(const KeyWindow& w, double frame_rate) {
  GeneratedSequence g;
  g.frames = key_frames(w, 0);
  for (int s = 0; s < w.slots(); ++s) {
    if (!w.valid[static_cast<std::size_t>(s)]) continue;
    g.poses.push_back(w.poses[static_cast<std::size_t>(s)]);
    g.objects.push_back(w.objects[static_cast<std::size_t>(s)]);
    g.contacts.push_back(w.contacts[static_cast<std::size_t>(s)]);
  }
  return to_keyset(g, frame_rate);
}

namespace {

constexpr char kMagic[8] = {'H', 'O', 'I', 'G', 'C', 'K', 'P', 'T'};

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::string_view in, std::size_t& pos, int bytes) {
  if (pos + static_cast<std::size_t>(bytes) > in.size()) throw FormatError("checkpoint: truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += static_cast<std::size_t>(bytes);
  return v;
}

std::int64_t as_i64(std::uint64_t v) { return std::bit_cast<std::int64_t>(v); }
std::uint64_t as_u64(std::int64_t v) { return std::bit_cast<std::uint64_t>(v); }

io::Chunk encode_header(const Model& m) {
  const auto& c = m.params.config;
  io::ChunkWriter w("model");
  w.i64(1).newline();
  w.i64(c.layout.joints).i64(c.layout.slots).i64(c.hidden).i64(c.mlp).i64(c.blocks).i64(c.text_dim)
      .i64(c.noise_embed_dim).i64(c.basis_points).i64(c.projected_points).newline();
  w.i64(m.schedule.steps).f64(m.schedule.beta_start).f64(m.schedule.beta_end).newline();
  w.i64(m.n_over).i64(m.policy.waypoint_stride).i64(as_i64(m.basis_seed)).f64(m.basis_radius).newline();
  w.i64(as_i64(m.lineage.root_seed)).i64(as_i64(m.lineage.init_seed)).i64(as_i64(m.lineage.train_seed))
      .i64(m.lineage.steps_trained).newline();
  w.i64(m.normalizer.mean.size());
  for (Eigen::Index i = 0; i < m.normalizer.mean.size(); ++i) w.f64(m.normalizer.mean[i]).f64(m.normalizer.scale[i]);
  w.newline();
  io::write_skeleton(w, m.skeleton);
  return std::move(w).finish();
}

Model decode_header(const io::Chunk& chunk) {
  io::ChunkReader r(chunk);
  if (r.i64() != 1) throw FormatError("checkpoint: unsupported header schema");
  Model m;
  auto& c = m.params.config;
  auto as_int = [&r] { return static_cast<int>(r.count(1u << 24)); };
  c.layout.joints = as_int();
  c.layout.slots = as_int();
  c.hidden = as_int();
  c.mlp = as_int();
  c.blocks = as_int();
  c.text_dim = as_int();
  c.noise_embed_dim = as_int();
  c.basis_points = as_int();
  c.projected_points = as_int();
  m.schedule.steps = as_int();
  m.schedule.beta_start = r.f64();
  m.schedule.beta_end = r.f64();
  m.n_over = as_int();
  m.policy.waypoint_stride = as_int();
  m.basis_seed = as_u64(r.i64());
  m.basis_radius = r.f64();
  m.lineage.root_seed = as_u64(r.i64());
  m.lineage.init_seed = as_u64(r.i64());
  m.lineage.train_seed = as_u64(r.i64());
  m.lineage.steps_trained = r.i64();
  const auto f = static_cast<Eigen::Index>(r.count(1u << 24));
  m.normalizer.mean.resize(f);
  m.normalizer.scale.resize(f);
  for (Eigen::Index i = 0; i < f; ++i) {
    m.normalizer.mean[i] = r.f64();
    m.normalizer.scale[i] = r.f64();
  }
  m.skeleton = io::read_skeleton(r);
  r.expect_done();
  return m;
}

}  // namespace

std::string encode_checkpoint(const Model& m) {
  m.validate();
  io::Container header;
  header.add(encode_header(m));
  const std::string hb = io::encode(header, io::Encoding::binary);
  std::string out(kMagic, sizeof kMagic);
  put_le(out, kCheckpointVersion, 4);
  put_le(out, hb.size(), 8);
  out += hb;
  put_le(out, static_cast<std::uint64_t>(m.params.values.size()), 8);
  for (Eigen::Index i = 0; i < m.params.values.size(); ++i) put_le(out, std::bit_cast<std::uint64_t>(m.params.values[i]), 8);
  return out;
}

Model decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw FormatError("checkpoint: bad magic");
  std::size_t pos = sizeof kMagic;
  const auto version = get_le(bytes, pos, 4);
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  const auto hlen = get_le(bytes, pos, 8);
  if (pos + hlen > bytes.size()) throw FormatError("checkpoint: truncated header");
  const io::Container header = io::decode(bytes.substr(pos, hlen));
  pos += hlen;
  Model m = decode_header(header.require("model"));
  const auto count = get_le(bytes, pos, 8);
  if (bytes.size() - pos != count * 8) throw FormatError("checkpoint: parameter block length mismatch");
  m.params.values.resize(static_cast<Eigen::Index>(count));
  for (std::uint64_t i = 0; i < count; ++i)
    m.params.values[static_cast<Eigen::Index>(i)] = std::bit_cast<double>(get_le(bytes, pos, 8));
  try {
    m.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const Model& m) { io::write_bytes(path, encode_checkpoint(m)); }

Model load_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(io::read_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace hoigen::diffusion
