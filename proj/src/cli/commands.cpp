#include "hoigen/cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

#include "hoigen/core/error.hpp"
#include "hoigen/core/kinematics.hpp"
#include "hoigen/core/rng.hpp"
#include "hoigen/diffusion/model.hpp"
#include "hoigen/diffusion/text.hpp"
#include "hoigen/diffusion/trainer.hpp"
#include "hoigen/geometry/bps.hpp"
#include "hoigen/keyaction/keyaction.hpp"
#include "hoigen/keyaction/windows.hpp"
#include "hoigen/metrics/metrics.hpp"
#include "hoigen/synth/carry.hpp"
#include "hoigen/tracking/tracking.hpp"

namespace hoigen::cli {

namespace fs = std::filesystem;
using diffusion::Model;

namespace {

std::vector<fs::path> list_inputs(const fs::path& p, const char* what) {
  if (p.empty()) throw ValidationError(std::string(what) + " path is not set");
  if (fs::is_regular_file(p)) return {p};
  if (!fs::is_directory(p)) throw ValidationError(std::string(what) + " '" + p.string() + "' does not exist");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(p)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".hoi" || ext == ".hoit")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw ValidationError("no .hoi or .hoit files in '" + p.string() + "'");
  return out;
}

void require_file(const fs::path& p, const char* what) {
  if (p.empty()) throw ValidationError(std::string(what) + " path is not set");
  if (!fs::is_regular_file(p)) throw ValidationError(std::string(what) + " '" + p.string() + "' does not exist");
}

/// File name without the container extension and the pipeline suffix.
std::string base_name(const fs::path& p) {
  std::string s = p.stem().string();
  for (const char* suffix : {".keys", ".dense", ".rollout"}) {
    const std::size_t n = std::strlen(suffix);
    if (s.size() > n && s.compare(s.size() - n, n, suffix) == 0) s.erase(s.size() - n);
  }
  return s;
}

const fs::path& output_path(const RunConfig& cfg) {
  if (cfg.output.empty()) throw ValidationError("output path is not set");
  return cfg.output;
}

void make_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error("cannot create directory '" + p.string() + "': " + ec.message());
}

std::uint64_t require_seed(const RunConfig& cfg, const char* command) {
  if (!cfg.seed) throw ValidationError(std::string(command) + ": seed is required");
  return *cfg.seed;
}

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string relative_path(const fs::path& from_dir, const fs::path& target) {
  const auto a = fs::absolute(target).lexically_normal();
  const auto b = fs::absolute(from_dir).lexically_normal();
  const auto rel = a.lexically_relative(b);
  return rel.empty() ? a.generic_string() : rel.generic_string();
}

struct LoadedSequence {
  fs::path path;
  std::string name;
  io::SequenceFile file;

  const io::MotionBundle& bundle() const { return file.bundle; }
};

std::vector<LoadedSequence> load_sequences(const std::vector<fs::path>& paths) {
  std::vector<LoadedSequence> out;
  for (const auto& p : paths) {
    LoadedSequence s{p, base_name(p), io::load_sequence(p)};
    try {
      s.file.bundle.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(p.string() + ": " + e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

const io::SequenceAnnotations& require_annotations(const LoadedSequence& s) {
  if (!s.file.annotations) throw ValidationError(s.path.string() + ": missing annotations");
  return *s.file.annotations;
}

fs::path mesh_file(const fs::path& owner, const std::string& mesh) {
  if (mesh.empty()) throw ValidationError(owner.string() + ": no mesh recorded");
  return owner.parent_path() / mesh;
}

geometry::TriangleMesh load_mesh(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw ValidationError("missing mesh '" + p.string() + "'");
  return geometry::load_obj(p).mesh;
}

/// Annotations with the mesh path rewritten for a file stored in `to_dir`.
io::SequenceAnnotations relocate(io::SequenceAnnotations a, const fs::path& owner, const fs::path& to_dir) {
  if (!a.mesh.empty()) a.mesh = relative_path(to_dir, owner.parent_path() / a.mesh);
  return a;
}

keyaction::ExtractionOptions extraction_options(const RunConfig& cfg, const SkeletonSpec& skeleton) {
  if (!(cfg.epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  keyaction::ExtractionOptions opt;
  opt.epsilon = cfg.epsilon;
  opt.weights = keyaction::JointWeights::defaults(skeleton, cfg.critical_weight, cfg.object_weight);
  opt.weights.validate(skeleton.joint_count());
  return opt;
}

/// Distinct geometry features keyed by mesh path.
class GeometryCache {
 public:
  explicit GeometryCache(geometry::BasisPointSet basis) : basis_(std::move(basis)) {}

  int index(const fs::path& mesh) {
    const auto key = fs::absolute(mesh).lexically_normal().string();
    if (const auto it = index_.find(key); it != index_.end()) return it->second;
    features_.push_back(geometry::encode_bps(load_mesh(mesh), basis_).vectors);
    return index_[key] = static_cast<int>(features_.size()) - 1;
  }
  const Eigen::MatrixXd& at(int i) const { return features_[static_cast<std::size_t>(i)]; }
  std::vector<Eigen::MatrixXd>& features() { return features_; }

 private:
  geometry::BasisPointSet basis_;
  std::map<std::string, int> index_;
  std::vector<Eigen::MatrixXd> features_;
};

geometry::BasisPointSet model_basis(const Model& m) {
  return geometry::sample_basis_points(m.basis_seed, m.params.config.basis_points, m.basis_radius);
}

void write_container(const fs::path& path, std::vector<io::Chunk> chunks) {
  io::Container c;
  for (auto& ch : chunks) c.add(std::move(ch));
  io::write_file(path, c, io::encoding_for(path));
}

io::SequenceFile sequence_file(io::MotionBundle b, std::optional<io::SequenceAnnotations> a) {
  return {std::move(b), std::move(a)};
}

/// Annotations whose mesh path is absolute, for files written elsewhere later.
io::SequenceAnnotations anchor_mesh(io::SequenceAnnotations a, const fs::path& owner) {
  if (!a.mesh.empty()) a.mesh = fs::absolute(owner.parent_path() / a.mesh).lexically_normal().generic_string();
  return a;
}

/// Writes <out>/keys/<name>.keys.hoi and <out>/dense/<name>.dense.hoi; `ann` carries an absolute mesh path.
void write_keys_and_dense(const fs::path& out, const std::string& name, const keyaction::KeyActionSet& keys,
                          const SkeletonSpec& skeleton, const io::SequenceAnnotations& ann) {
  auto dense = keyaction::interpolate(keys, skeleton);
  dense.validate();
  auto placed = [&](const fs::path& dir) {
    auto a = ann;
    if (!a.mesh.empty()) a.mesh = relative_path(dir, a.mesh);
    return a;
  };
  write_container(out / "keys" / (name + ".keys.hoi"),
                  {keyaction::encode_keyset(keys, skeleton), io::encode_annotations(placed(out / "keys"))});
  io::save_sequence(out / "dense" / (name + ".dense.hoi"), sequence_file(std::move(dense), placed(out / "dense")));
}

Model load_model(const RunConfig& cfg) {
  require_file(cfg.checkpoint, "checkpoint");
  Model m = diffusion::load_checkpoint(cfg.checkpoint);
  m.validate();
  return m;
}

std::vector<tracking::ScriptedFault> parse_faults(const std::string& text) {
  std::vector<tracking::ScriptedFault> out;
  std::stringstream all(text);
  std::string entry;
  auto bad = [&](const std::string& e) { return ValidationError("faults: cannot parse '" + e + "'"); };
  auto to_int = [&](const std::string& s, const std::string& e) {
    int v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) throw bad(e);
    return v;
  };
  auto to_double = [&](const std::string& s, const std::string& e) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) throw bad(e);
    return v;
  };
  while (std::getline(all, entry, ';')) {
    entry.erase(std::remove_if(entry.begin(), entry.end(), [](unsigned char c) { return std::isspace(c); }), entry.end());
    if (entry.empty()) continue;
    const auto at = entry.find('@');
    if (at == std::string::npos) throw bad(entry);
    tracking::ScriptedFault f;
    const auto kind = entry.substr(0, at);
    if (kind == "object_offset")
      f.kind = tracking::ScriptedFault::Kind::object_offset;
    else if (kind == "humanoid_offset")
      f.kind = tracking::ScriptedFault::Kind::humanoid_offset;
    else if (kind == "contact_drop")
      f.kind = tracking::ScriptedFault::Kind::contact_drop;
    else
      throw bad(entry);
    std::string rest = entry.substr(at + 1), args;
    if (const auto colon = rest.find(':'); colon != std::string::npos) {
      args = rest.substr(colon + 1);
      rest.erase(colon);
    }
    if (const auto dash = rest.find('-'); dash != std::string::npos) {
      f.frame = to_int(rest.substr(0, dash), entry);
      f.until = to_int(rest.substr(dash + 1), entry);
    } else {
      f.frame = to_int(rest, entry);
    }
    if (f.kind == tracking::ScriptedFault::Kind::contact_drop) {
      if (!args.empty()) f.channel = to_int(args, entry);
    } else {
      std::stringstream xs(args);
      std::string x;
      int k = 0;
      while (std::getline(xs, x, ',')) {
        if (k > 2) throw bad(entry);
        f.offset[k++] = to_double(x, entry);
      }
      if (k != 3) throw bad(entry);
    }
    out.push_back(f);
  }
  return out;
}

int auto_window_count(int keys, int slots, int n_over) {
  const int fresh = slots - n_over;
  const int extra = std::max(0, keys - slots);
  return 1 + (extra + fresh - 1) / fresh;
}

}  // namespace

void cmd_extract(const RunConfig& cfg, std::ostream& log) {
  const auto seqs = load_sequences(list_inputs(cfg.input, "input"));
  const auto& out = output_path(cfg);

  std::vector<keyaction::KeyActionSet> keys;
  std::vector<double> errors;
  for (const auto& s : seqs) {
    const auto opt = extraction_options(cfg, s.bundle().skeleton);
    keys.push_back(keyaction::extract_key_actions(s.bundle(), opt));
    const auto rec = keyaction::interpolate(keys.back(), s.bundle().skeleton);
    errors.push_back(keyaction::reconstruction_error(s.bundle(), rec, opt.weights).max_error);
    const auto& idx = keys.back().indices;
    if (errors.back() > cfg.epsilon || idx.front() != 0 || idx.back() != s.bundle().motion.length() - 1)
      throw Error(s.name + ": key-action post-condition failed (error " + num(errors.back()) + " m)");
  }

  make_dir(out);
  std::string summary = "name,frames,keys,max_error_m,epsilon_m\n";
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const auto& s = seqs[i];
    std::vector<io::Chunk> chunks = {keyaction::encode_keyset(keys[i], s.bundle().skeleton)};
    if (s.file.annotations) chunks.push_back(io::encode_annotations(relocate(*s.file.annotations, s.path, out)));
    write_container(out / (s.name + ".keys.hoi"), std::move(chunks));
    summary += s.name + "," + std::to_string(s.bundle().motion.length()) + "," + std::to_string(keys[i].size()) + "," +
               num(errors[i]) + "," + num(cfg.epsilon) + "\n";
    log << s.name << ": " << keys[i].size() << " keys of " << s.bundle().motion.length() << " frames, max error "
        << num(errors[i]) << " m\n";
  }
  io::write_bytes(out / "extract_summary.csv", summary);
}

void cmd_interp(const RunConfig& cfg, std::ostream& log) {
  const auto paths = list_inputs(cfg.input, "input");
  const auto& out = output_path(cfg);
  struct Item {
    std::string name;
    io::MotionBundle dense;
    std::optional<io::SequenceAnnotations> annotations;
  };
  std::vector<Item> items;
  for (const auto& p : paths) {
    const auto c = io::read_file(p);
    auto [keys, skeleton] = keyaction::decode_keyset(c.require("keyset"));
    Item it{base_name(p), keyaction::interpolate(keys, skeleton), std::nullopt};
    it.dense.validate();
    if (const auto* a = c.find("annot")) it.annotations = relocate(io::decode_annotations(*a), p, out);
    items.push_back(std::move(it));
  }
  make_dir(out);
  for (auto& it : items) {
    log << it.name << ": " << it.dense.motion.length() << " frames\n";
    io::save_sequence(out / (it.name + ".dense.hoi"), sequence_file(std::move(it.dense), it.annotations));
  }
}

void cmd_synth(const RunConfig& cfg, std::ostream& log) {
  synth::SynthConfig sc;
  sc.seed = require_seed(cfg, "synth");
  sc.sequences = cfg.synth_sequences;
  sc.speed_min = cfg.synth_speed_min;
  sc.speed_max = cfg.synth_speed_max;
  sc.approach_min = cfg.synth_approach_min;
  sc.approach_max = cfg.synth_approach_max;
  sc.carry_min = cfg.synth_carry_min;
  sc.carry_max = cfg.synth_carry_max;
  sc.waypoints = cfg.synth_waypoints;
  sc.contact_threshold = cfg.contact_threshold;
  sc.validate();
  const auto& out = output_path(cfg);

  std::vector<synth::SynthSequence> seqs(static_cast<std::size_t>(sc.sequences));
  std::string error;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < sc.sequences; ++i) {
    try {
      seqs[static_cast<std::size_t>(i)] = synth::generate_carry_sequence(sc, i);
      seqs[static_cast<std::size_t>(i)].file.bundle.validate();
    } catch (const std::exception& e) {
#pragma omp critical(hoigen_synth_error)
      if (error.empty()) error = e.what();
    }
  }
  if (!error.empty()) throw Error("synth: " + error);

  make_dir(out / "meshes");
  std::string manifest = "name,frames,carry_begin,carry_end,prompt\n";
  for (const auto& s : seqs) {
    io::save_sequence(out / (s.name + ".hoi"), s.file);
    geometry::save_obj(out / s.file.annotations->mesh, s.mesh);
    manifest += s.name + "," + std::to_string(s.file.bundle.motion.length()) + "," + std::to_string(s.carry_begin) +
                "," + std::to_string(s.carry_end) + "," + s.file.annotations->prompt + "\n";
  }
  io::write_bytes(out / "manifest.csv", manifest);
  log << "wrote " << seqs.size() << " sequences to " << out.string() << "\n";
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
  const std::uint64_t seed = require_seed(cfg, "train");
  const auto& out = output_path(cfg);
  if (cfg.input.empty() && cfg.windows.empty()) throw ValidationError("train: set input (sequences) and/or windows");
  if (cfg.batch_size < 1) throw ValidationError("train: batch_size must be positive");

  std::optional<Model> init;
  if (!cfg.checkpoint.empty()) init = load_model(cfg);
  const int window_keys = init ? init->params.config.layout.slots - 1 : cfg.window_keys;
  if (window_keys < 1) throw ValidationError("train: window_keys must be positive");

  GeometryCache geometry(init ? model_basis(*init)
                              : geometry::sample_basis_points(cfg.basis_seed, cfg.basis_points, cfg.basis_radius));
  const int text_dim = init ? init->params.config.text_dim : cfg.text_dim;
  diffusion::TrainingCorpus corpus;
  std::optional<SkeletonSpec> skeleton;
  auto add_window = [&](keyaction::TrainingWindow w, const fs::path& mesh) {
    corpus.geometry_index.push_back(geometry.index(mesh));
    corpus.texts.push_back(diffusion::toy_text_embed(w.prompt, text_dim));
    corpus.windows.push_back(std::move(w));
  };
  auto check_skeleton = [&](const SkeletonSpec& s, const std::string& where) {
    if (!skeleton) skeleton = s;
    if (s.joint_count() != skeleton->joint_count()) throw ValidationError(where + ": skeleton differs from the corpus");
  };

  if (!cfg.input.empty()) {
    for (const auto& s : load_sequences(list_inputs(cfg.input, "input"))) {
      const auto& ann = require_annotations(s);
      check_skeleton(s.bundle().skeleton, s.path.string());
      const auto keys = keyaction::extract_key_actions(s.bundle(), extraction_options(cfg, s.bundle().skeleton));
      for (auto& w : keyaction::build_training_windows(s.bundle(), keys, window_keys, cfg.window_stride, ann.prompt,
                                                       ann.mesh))
        add_window(std::move(w), mesh_file(s.path, ann.mesh));
    }
  }
  if (!cfg.windows.empty()) {
    require_file(cfg.windows, "windows");
    const auto set = keyaction::decode_windows(io::read_file(cfg.windows).require("windows"));
    check_skeleton(set.skeleton, cfg.windows.string());
    if (set.window_key_count != window_keys)
      throw ValidationError("train: windows hold " + std::to_string(set.window_key_count) + " key actions, model needs " +
                            std::to_string(window_keys));
    for (const auto& w : set.windows) add_window(w, mesh_file(cfg.windows, w.mesh));
  }
  if (corpus.size() == 0) throw ValidationError("train: the corpus has no windows");
  corpus.geometries = std::move(geometry.features());

  Model model;
  if (init) {
    model = *init;
    if (model.skeleton.joint_count() != skeleton->joint_count())
      throw ValidationError("train: checkpoint skeleton differs from the corpus");
  } else {
    diffusion::DenoiserConfig dc;
    dc.layout = {skeleton->joint_count(), window_keys + 1};
    dc.hidden = cfg.hidden;
    dc.mlp = cfg.mlp;
    dc.blocks = cfg.blocks;
    dc.text_dim = cfg.text_dim;
    dc.noise_embed_dim = cfg.noise_embed_dim;
    dc.basis_points = cfg.basis_points;
    dc.projected_points = cfg.projected_points;
    dc.validate();
    model.lineage.root_seed = seed;
    model.lineage.init_seed = derive_seed(seed, "init");
    model.params = diffusion::DenoiserParams::initialize(dc, model.lineage.init_seed);
    model.schedule = {cfg.diffusion_steps, cfg.beta_start, cfg.beta_end};
    model.skeleton = *skeleton;
    model.basis_seed = cfg.basis_seed;
    model.basis_radius = cfg.basis_radius;
    model.n_over = cfg.n_over;
    model.policy.waypoint_stride = cfg.waypoint_stride;
    model.normalizer = diffusion::fit_corpus_normalizer(corpus, dc.layout);
  }
  model.validate();
  corpus.validate(model.params.config);

  diffusion::TrainOptions opt;
  const int steps_per_epoch = (corpus.size() + cfg.batch_size - 1) / cfg.batch_size;
  opt.steps = cfg.train_epochs > 0 ? cfg.train_epochs * steps_per_epoch : cfg.train_steps;
  opt.batch_size = cfg.batch_size;
  opt.learning_rate = cfg.checkpoint.empty() ? cfg.learning_rate : cfg.finetune_learning_rate;
  opt.final_lr_fraction = cfg.final_lr_fraction;
  opt.grad_clip = cfg.grad_clip;
  opt.max_given_slots = cfg.max_given;
  opt.policy = model.policy;
  opt.seed = derive_seed(seed, "train");
  if (opt.steps < 1) throw ValidationError("train: no optimizer steps requested");

  const auto codec = model.codec();
  const auto schedule = model.noise_schedule();
  const auto eval_seed = derive_seed(seed, "eval");
  const double before =
      diffusion::evaluate_loss(model.params, corpus, codec, schedule, opt.policy, opt.max_given_slots, eval_seed);
  log << "train: " << corpus.size() << " windows, " << opt.steps << " steps, loss before " << num(before) << "\n";

  diffusion::AdamState state;
  std::string loss_csv = "step,loss,learning_rate,grad_norm\n";
  diffusion::train(model.params, state, corpus, codec, schedule, opt, [&](const diffusion::StepLog& s) {
    loss_csv += std::to_string(s.step) + "," + num(s.loss) + "," + num(s.learning_rate) + "," + num(s.grad_norm) + "\n";
    if ((s.step + 1) % 500 == 0) log << "  step " << s.step + 1 << " loss " << num(s.loss) << "\n";
  });
  model.lineage.train_seed = opt.seed;
  model.lineage.steps_trained += opt.steps;
  const double after =
      diffusion::evaluate_loss(model.params, corpus, codec, schedule, opt.policy, opt.max_given_slots, eval_seed);
  log << "train: loss after " << num(after) << "\n";

  make_dir(out);
  diffusion::save_checkpoint(out / "model.ckpt", model);
  io::write_bytes(out / "loss.csv", loss_csv);
  io::write_bytes(out / "train_summary.csv", "windows,steps,eval_loss_before,eval_loss_after\n" +
                                                 std::to_string(corpus.size()) + "," + std::to_string(opt.steps) + "," +
                                                 num(before) + "," + num(after) + "\n");
}

void cmd_sample(const RunConfig& cfg, std::ostream& log) {
  const std::uint64_t seed = require_seed(cfg, "sample");
  const Model model = load_model(cfg);
  const auto& out = output_path(cfg);
  const auto paths = list_inputs(cfg.input, "input");
  const auto& L = model.params.config.layout;
  GeometryCache geometry(model_basis(model));

  struct Item {
    std::string name;
    diffusion::ConditionBundle condition;
    io::SequenceAnnotations annotations;
    double frame_rate = 30.0;
  };
  std::vector<Item> items;
  for (const auto& p : paths) {
    const auto c = io::read_file(p);
    Item it;
    it.name = base_name(p);
    if (const auto* cond = c.find("condition")) {
      it.condition = diffusion::decode_condition(*cond);
    } else {
      LoadedSequence s{p, it.name, io::load_sequence(p)};
      s.file.bundle.validate();
      const auto& ann = require_annotations(s);
      const auto keys = keyaction::extract_key_actions(s.bundle(), extraction_options(cfg, s.bundle().skeleton));
      const auto windows =
          keyaction::build_training_windows(s.bundle(), keys, L.slots - 1, cfg.window_stride, ann.prompt, ann.mesh);
      if (windows.empty()) throw ValidationError(p.string() + ": too short for a window");
      const int given = cfg.given_slots;
      if (given < 1 || given >= windows.front().valid_count() + 1)
        throw ValidationError("sample: given_slots out of range for " + p.string());
      it.condition = diffusion::window_condition(windows.front(), given, geometry.at(geometry.index(mesh_file(p, ann.mesh))),
                                                 diffusion::toy_text_embed(ann.prompt, model.params.config.text_dim),
                                                 L, model.policy);
      it.annotations = anchor_mesh(ann, p);
      it.frame_rate = s.bundle().motion.frame_rate;
    }
    diffusion::require_shape(it.condition.motion, L.slots, L.condition_dim(), "sample condition");
    items.push_back(std::move(it));
  }

  make_dir(out / "keys");
  make_dir(out / "dense");
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto& it = items[i];
    diffusion::SamplerOptions so;
    so.seed = derive_seed(seed, "sampling", i);
    so.impose_known = cfg.impose_known;
    const auto kw = diffusion::sample(model, it.condition, so);
    const auto keys = diffusion::to_keyset(kw, it.frame_rate);

    const auto& c = it.condition;
    const int given = c.given_slot_count();
    int target = 0;
    for (int s = 0; s < L.slots; ++s)
      if (c.slot_valid[s] > 0.5) target = s;
    auto& ann = it.annotations;
    ann.start = c.motion.row(0).segment<3>(0).transpose();
    ann.target = c.motion.row(target).segment<3>(0).transpose();
    ann.target_frame = keys.indices[static_cast<std::size_t>(target)];
    ann.waypoints.clear();
    for (int s = given; s < target; ++s)
      if (c.mask(s, 0) > 0.5)
        ann.waypoints.push_back({keys.indices[static_cast<std::size_t>(s)], c.motion(s, 0), c.motion(s, 1)});
    write_keys_and_dense(out, it.name, keys, model.skeleton, ann);
    log << it.name << ": " << keys.size() << " key actions over " << keys.source_length << " frames\n";
  }
}

void cmd_genlong(const RunConfig& cfg, std::ostream& log) {
  const std::uint64_t seed = require_seed(cfg, "genlong");
  const Model model = load_model(cfg);
  const auto& out = output_path(cfg);
  const auto seqs = load_sequences(list_inputs(cfg.input, "input"));
  const int S = model.params.config.layout.slots;
  const int n_over = cfg.n_over;
  if (n_over < 1 || n_over > S - 1) throw ValidationError("genlong: n_over must lie in [1, slots - 1]");
  if (cfg.long_windows < 0) throw ValidationError("genlong: long_windows must be nonnegative");
  const int stride = std::max(1, model.policy.waypoint_stride);
  GeometryCache geometry(model_basis(model));

  struct Item {
    std::string name;
    diffusion::LongRequest request;
    io::SequenceAnnotations annotations;
    double frame_rate = 30.0;
  };
  std::vector<Item> items;
  for (const auto& s : seqs) {
    const auto& ann = require_annotations(s);
    const auto& b = s.bundle();
    if (!b.object) throw ValidationError(s.path.string() + ": no object trajectory");
    if (b.skeleton.joint_count() != model.skeleton.joint_count())
      throw ValidationError(s.path.string() + ": skeleton differs from the model");
    const auto keys = keyaction::extract_key_actions(b, extraction_options(cfg, b.skeleton));
    const int K = keys.size();
    const int windows = cfg.long_windows > 0 ? cfg.long_windows : auto_window_count(K, S, n_over);
    auto key_object = [&](int global) { return keys.objects[static_cast<std::size_t>(std::min(global, K - 1))].position; };

    Item it{s.name, {}, anchor_mesh(ann, s.path), b.motion.frame_rate};
    auto& req = it.request;
    req.initial = {b.motion.frames.front(), b.object->poses.front()};
    req.geometry = geometry.at(geometry.index(mesh_file(s.path, ann.mesh)));
    req.text = diffusion::toy_text_embed(ann.prompt, model.params.config.text_dim);
    for (int w = 0; w < windows; ++w) {
      diffusion::WindowGoal g;
      const int offset = w * (S - n_over);
      for (int slot = w == 0 ? 1 : n_over; slot < S - 1; ++slot)
        if (slot % stride == 0) {
          const Vec3 p = key_object(slot + offset);
          g.waypoints.push_back({slot, p.x(), p.y()});
        }
      g.target = key_object(S - 1 + offset);
      req.goals.push_back(std::move(g));
    }
    items.push_back(std::move(it));
  }

  make_dir(out / "keys");
  make_dir(out / "dense");
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto& it = items[i];
    diffusion::SamplerOptions so;
    so.seed = derive_seed(seed, "sampling", i);
    so.impose_known = cfg.impose_known;
    const auto gen = diffusion::autoregressive_generate(model, it.request, n_over, so);
    const auto keys = diffusion::to_keyset(gen, it.frame_rate);

    auto& ann = it.annotations;
    ann.start = it.request.initial.object.position;
    ann.target = it.request.goals.back().target;
    ann.target_frame = keys.indices.back();
    ann.waypoints.clear();
    for (std::size_t w = 0; w < it.request.goals.size(); ++w)
      for (const auto& wp : it.request.goals[w].waypoints) {
        const int global = wp.slot + static_cast<int>(w) * (S - n_over);
        ann.waypoints.push_back({keys.indices[static_cast<std::size_t>(global)], wp.x, wp.y});
      }
    write_keys_and_dense(out, it.name, keys, model.skeleton, ann);
    log << it.name << ": " << gen.windows << " windows, " << keys.size() << " key actions over " << keys.source_length
        << " frames\n";
  }
}

void cmd_rollout(const RunConfig& cfg, std::ostream& log) {
  const auto seqs = load_sequences(list_inputs(cfg.input, "input"));
  const auto& out = output_path(cfg);
  tracking::NoiseModel noise;
  noise.position_sigma = cfg.noise_sigma;
  noise.faults = parse_faults(cfg.faults);
  if (!(cfg.noise_sigma >= 0.0)) throw ValidationError("rollout: noise_sigma must be nonnegative");
  const std::uint64_t seed = cfg.noise_sigma > 0.0 ? require_seed(cfg, "rollout") : cfg.seed.value_or(0);

  tracking::RewardWeights weights;
  weights.joint_position = cfg.reward_joint_position;
  weights.joint_rotation = cfg.reward_joint_rotation;
  weights.joint_velocity = cfg.reward_joint_velocity;
  weights.joint_angular_velocity = cfg.reward_joint_angular_velocity;
  weights.contact = cfg.reward_contact;
  weights.object_position = cfg.reward_object_position;
  weights.object_rotation = cfg.reward_object_rotation;
  weights.object_velocity = cfg.reward_object_velocity;
  weights.object_angular_velocity = cfg.reward_object_angular_velocity;
  weights.alpha = cfg.reward_alpha;
  tracking::TerminationConfig term{cfg.term_object_deviation, cfg.term_missing_contact_frames, cfg.term_humanoid_drift};
  term.validate();

  std::vector<tracking::RolloutReference> refs;
  std::vector<io::SequenceAnnotations> anns;
  const SkeletonSpec& skeleton = seqs.front().bundle().skeleton;
  for (const auto& s : seqs) {
    const auto& b = s.bundle();
    const auto& ann = require_annotations(s);
    if (!b.object) throw ValidationError(s.path.string() + ": no object trajectory");
    if (b.skeleton.joint_count() != skeleton.joint_count())
      throw ValidationError(s.path.string() + ": skeleton differs from the first input");
    tracking::RolloutReference r;
    r.skeleton = b.skeleton;
    r.human = relative_to_global(b.skeleton, b.motion);
    r.object = *b.object;
    if (b.contacts)
      r.commanded = *b.contacts;
    else
      r.commanded.frames.assign(static_cast<std::size_t>(b.motion.length()), Contact4{});
    r.mesh = load_mesh(mesh_file(s.path, ann.mesh));
    refs.push_back(std::move(r));
    anns.push_back(relocate(ann, s.path, out));
  }
  for (const auto& f : noise.faults)
    for (const auto& r : refs)
      if (f.frame >= r.human.length()) throw ValidationError("rollout: fault frame beyond a reference sequence");
  weights.key_joints = skeleton.key_joints();
  weights.validate(skeleton.joint_count());

  const auto logs = tracking::oracle_rollouts(refs, noise, seed, weights, term);
  std::vector<metrics::TrackingRecord> records;
  std::vector<tracking::RolloutCandidate> candidates;
  metrics::TrackingOptions mo{cfg.target_radius, cfg.min_contact_segment};
  for (std::size_t i = 0; i < logs.size(); ++i) {
    records.push_back({seqs[i].name, metrics::tracking_metrics(logs[i], anns[i].target, mo)});
    candidates.push_back({&logs[i], anns[i].target, anns[i].prompt, anns[i].mesh});
  }
  tracking::FilterOptions fo;
  fo.target_radius = cfg.target_radius;
  fo.extraction = extraction_options(cfg, skeleton);
  fo.window_key_count = cfg.window_keys;
  fo.stride = cfg.window_stride;
  const auto windows = tracking::filter_successful_rollouts(candidates, skeleton, fo);

  make_dir(out);
  std::string terminations = "name,terminated,frame,reason,frames,reference_frames\n";
  for (std::size_t i = 0; i < logs.size(); ++i) {
    write_container(out / (seqs[i].name + ".rollout.hoi"), {tracking::encode_rollout(logs[i])});
    const auto& t = logs[i].termination;
    terminations += seqs[i].name + "," + (t.terminated ? "1" : "0") + "," + std::to_string(t.frame) + "," +
                    tracking::to_string(t.reason) + "," + std::to_string(logs[i].length()) + "," +
                    std::to_string(logs[i].reference_length) + "\n";
  }
  io::write_bytes(out / "terminations.csv", terminations);
  io::write_bytes(out / "tracking.csv", metrics::emit_report(records, metrics::ReportFormat::csv));
  write_container(out / "finetune_windows.hoi", {keyaction::encode_windows(windows, skeleton, cfg.window_keys)});
  log << metrics::emit_report(records, metrics::ReportFormat::table);
  int cont = 0, tgt = 0;
  for (const auto& r : records) cont += r.metrics.contact_success, tgt += r.metrics.target_success;
  const double n = static_cast<double>(records.size());
  log << "success rates: contact " << num(100.0 * cont / n) << "%, target " << num(100.0 * tgt / n) << "%\n";
  log << "kept " << windows.size() << " fine-tuning windows\n";
}

void cmd_metrics(const RunConfig& cfg, std::ostream& log) {
  const auto gen = load_sequences(list_inputs(cfg.input, "input"));
  const auto ref = load_sequences(list_inputs(cfg.reference, "reference"));
  const auto& out = output_path(cfg);
  const auto format = metrics::parse_report_format(cfg.format);
  std::map<std::string, const LoadedSequence*> by_name;
  for (const auto& r : ref) by_name[r.name] = &r;

  std::vector<metrics::GenerationRecord> records;
  for (const auto& g : gen) {
    const auto it = by_name.find(g.name);
    if (it == by_name.end()) throw ValidationError("corpus mismatch: no reference for '" + g.name + "'");
    const auto& r = *it->second;
    const auto& gb = g.bundle();
    const auto& rb = r.bundle();
    if (gb.skeleton.joint_count() != rb.skeleton.joint_count())
      throw ValidationError("corpus mismatch: skeletons differ for '" + g.name + "'");
    const bool aligned = gb.motion.length() == rb.motion.length();
    const auto gg = relative_to_global(gb.skeleton, gb.motion);

    metrics::GenerationMetrics m;
    const LoadedSequence* annotated = g.file.annotations ? &g : (aligned && r.file.annotations ? &r : nullptr);
    if (annotated && gb.object) {
      const auto& a = *annotated->file.annotations;
      const auto cm = metrics::condition_matching(*gb.object, a.start, a.waypoints, a.target);
      m.start_error = cm.start;
      m.end_error = cm.end;
      m.waypoint_error = cm.planar;
    }
    // Contact channels describe body-object contact, so ground contact is labeled by height.
    const auto feet = metrics::foot_metrics(gg, gb.skeleton, nullptr, {cfg.foot_max_height, cfg.foot_contact_height});
    m.foot_height = feet.height;
    m.foot_sliding = feet.sliding;
    if (gb.contacts && rb.contacts && aligned) {
      const auto cs = metrics::contact_metrics(*gb.contacts, *rb.contacts);
      m.contact_precision = cs.precision;
      m.contact_recall = cs.recall;
      m.contact_f1 = cs.f1;
      m.contact_percent = cs.percent;
    }
    if (annotated && gb.object && !annotated->file.annotations->mesh.empty()) {
      const auto mesh = load_mesh(mesh_file(annotated->path, annotated->file.annotations->mesh));
      if (mesh.watertight()) m.hand_penetration = metrics::hand_penetration(gg, gb.skeleton, *gb.object, mesh);
    }
    if (aligned) {
      const auto rg = relative_to_global(rb.skeleton, rb.motion);
      const auto d = metrics::gt_difference(gg, rg, gb.object ? &*gb.object : nullptr, rb.object ? &*rb.object : nullptr,
                                            cfg.mpjpe_root_relative);
      m.mpjpe = d.mpjpe;
      m.root_error = d.root;
      m.object_error = d.object;
      m.object_orientation_error = d.object_orientation;
    }
    records.push_back({g.name, m});
  }

  make_dir(out);
  io::write_bytes(out / "generation.csv", metrics::emit_report(records, metrics::ReportFormat::csv));
  auto with_mean = records;
  with_mean.push_back({"mean", metrics::mean_metrics(records)});
  const auto report = metrics::emit_report(with_mean, format);
  io::write_bytes(out / (format == metrics::ReportFormat::csv ? "generation_report.csv" : "generation_report.txt"),
                  report);
  log << report;
}

void cmd_report(const RunConfig& cfg, std::ostream& log) {
  require_file(cfg.input, "input");
  const auto format = metrics::parse_report_format(cfg.format);
  const auto text = io::read_bytes(cfg.input);
  std::string report;
  if (text.rfind("name,T_s_mm", 0) == 0) {
    report = metrics::emit_report(metrics::parse_generation_csv(text), format);
  } else if (text.rfind("name,Succ_cont", 0) == 0) {
    report = metrics::emit_report(metrics::parse_tracking_csv(text), format);
  } else {
    throw FormatError(cfg.input.string() + ": not a generation or tracking metrics CSV");
  }
  if (cfg.output.empty()) {
    log << report;
  } else {
    if (cfg.output.has_parent_path()) make_dir(cfg.output.parent_path());
    io::write_bytes(cfg.output, report);
  }
}

}  // namespace hoigen::cli
