#include "hoigen/diffusion/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hoigen/core/rng.hpp"

namespace hoigen::diffusion {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void TrainingCorpus::validate(const DenoiserConfig& cfg) const {
  if (windows.empty()) throw ValidationError("training corpus is empty");
  if (geometry_index.size() != windows.size() || texts.size() != windows.size())
    throw ValidationError("training corpus: per-window tables have mismatched lengths");
  for (std::size_t i = 0; i < windows.size(); ++i) {
    windows[i].validate(cfg.layout.joints);
    if (static_cast<int>(windows[i].keys.size()) + 1 != cfg.layout.slots)
      throw ValidationError("training corpus: window " + std::to_string(i) + " does not match the slot count");
    const int g = geometry_index[i];
    if (g < 0 || g >= static_cast<int>(geometries.size()))
      throw ValidationError("training corpus: bad geometry index");
    if (texts[i].size() != cfg.text_dim) throw ValidationError("training corpus: text dimension mismatch");
  }
  for (const auto& g : geometries) require_shape(g, cfg.basis_points, 3, "training geometry");
}

TrainingExample make_example(const TrainingCorpus& corpus, int i, int given_slots, const WindowCodec& codec,
                             const ConditionPolicy& policy) {
  const auto& w = corpus.windows[static_cast<std::size_t>(i)];
  const CanonicalFrame frame = window_origin(w.initial.pose);
  const auto& L = codec.layout();
  ConditionBundle raw = window_condition(w, given_slots, corpus.geometries[static_cast<std::size_t>(corpus.geometry_index[static_cast<std::size_t>(i)])],
                                         corpus.texts[static_cast<std::size_t>(i)], L, policy);
  return {codec.to_model(pack_window(w, L), frame), codec.to_model(raw, frame)};
}

Normalizer fit_corpus_normalizer(const TrainingCorpus& corpus, const SampleLayout& layout) {
  const WindowCodec plain(layout, Normalizer::identity(layout.feature_dim()));
  std::vector<SampleTensor> canon;
  canon.reserve(corpus.windows.size());
  for (const auto& w : corpus.windows) canon.push_back(plain.canonicalize(pack_window(w, layout), window_origin(w.initial.pose)));
  return fit_normalizer(canon, layout.feature_dim());
}

namespace {

constexpr int kReductionChunks = 8;

std::vector<LossItem> loss_items(std::span<const BatchItem> items) {
  std::vector<LossItem> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back({&it.example.tau0, it.step, &it.example.condition, &it.noise});
  return out;
}

}  // namespace

LossResult batch_loss(const DenoiserParams& params, std::span<const BatchItem> items, const NoiseSchedule& schedule) {
  if (items.empty()) throw ValidationError("batch_loss: empty batch");
  return batched_loss(params, loss_items(items), schedule, kReductionChunks, true);
}

LossResult batch_loss_serial(const DenoiserParams& params, std::span<const BatchItem> items,
                             const NoiseSchedule& schedule) {
  if (items.empty()) throw ValidationError("batch_loss: empty batch");
  LossResult total{0.0, VectorXd::Zero(params.values.size())};
  for (const auto& it : items) {
    const LossResult r = training_loss(params, it.example.tau0, it.step, it.example.condition, it.noise, schedule);
    total.loss += r.loss;
    total.gradient += r.gradient;
  }
  const double n = static_cast<double>(items.size());
  total.loss /= n;
  total.gradient /= n;
  return total;
}

void adam_update(VectorXd& params, AdamState& st, const VectorXd& grad, double lr, const TrainOptions& opt) {
  if (st.m.size() != params.size()) {
    st.m = VectorXd::Zero(params.size());
    st.v = VectorXd::Zero(params.size());
  }
  ++st.t;
  st.m = opt.beta1 * st.m + (1.0 - opt.beta1) * grad;
  st.v = opt.beta2 * st.v + (1.0 - opt.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(st.t));
  params.array() -= lr * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + opt.adam_eps);
}

namespace {

MatrixXd gaussian(Rng& rng, Index rows, Index cols) {
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

BatchItem draw_item(const TrainingCorpus& corpus, int i, Rng& rng, const WindowCodec& codec,
                    const NoiseSchedule& schedule, const ConditionPolicy& policy, int max_given) {
  const int given = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, max_given))));
  const int step = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(schedule.steps)));
  const auto& L = codec.layout();
  MatrixXd noise = gaussian(rng, L.slots, L.feature_dim());
  return {make_example(corpus, i, given, codec, policy), step, std::move(noise)};
}

}  // namespace

std::vector<StepLog> train(DenoiserParams& params, AdamState& state, const TrainingCorpus& corpus,
                           const WindowCodec& codec, const NoiseSchedule& schedule, const TrainOptions& opt,
                           const std::function<void(const StepLog&)>& on_step) {
  params.validate();
  if (!(codec.layout() == params.config.layout)) throw ValidationError("train: codec and model layouts differ");
  corpus.validate(params.config);
  if (opt.steps < 0 || opt.batch_size < 1 || !(opt.learning_rate > 0.0))
    throw ValidationError("train: steps >= 0, batch_size >= 1 and learning_rate > 0 required");

  const int n = corpus.size();
  const int batch = std::min(opt.batch_size, n);
  std::vector<int> order(static_cast<std::size_t>(n));
  int epoch = -1;
  std::vector<StepLog> logs;
  for (int k = 0; k < opt.steps; ++k) {
    const std::int64_t global_step = state.t;
    // position in the epoch stream is a function of the global step so resumed runs line up
    const std::int64_t first = global_step * batch;
    std::vector<BatchItem> items;
    items.reserve(static_cast<std::size_t>(batch));
    Rng draw(derive_seed(opt.seed, "train-step", static_cast<std::uint64_t>(global_step)));
    for (int b = 0; b < batch; ++b) {
      const std::int64_t pos = first + b;
      const int e = static_cast<int>(pos / n);
      if (e != epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle(derive_seed(opt.seed, "epoch", static_cast<std::uint64_t>(e)));
        for (int i = n - 1; i > 0; --i)
          std::swap(order[static_cast<std::size_t>(i)], order[shuffle.below(static_cast<std::uint64_t>(i) + 1)]);
        epoch = e;
      }
      items.push_back(draw_item(corpus, order[static_cast<std::size_t>(pos % n)], draw, codec, schedule, opt.policy,
                                opt.max_given_slots));
    }
    LossResult r = batch_loss(params, items, schedule);
    const double norm = r.gradient.norm();
    if (opt.grad_clip > 0.0 && norm > opt.grad_clip) r.gradient *= opt.grad_clip / norm;
    const double frac = opt.steps > 1 ? static_cast<double>(k) / (opt.steps - 1) : 0.0;
    const double lr = opt.learning_rate * (1.0 - (1.0 - opt.final_lr_fraction) * frac);
    adam_update(params.values, state, r.gradient, lr, opt);
    if (!params.values.allFinite()) throw NumericError("train: parameters became non-finite at step " + std::to_string(global_step));
    StepLog log{static_cast<int>(global_step), r.loss, lr, norm};
    logs.push_back(log);
    if (on_step) on_step(log);
  }
  return logs;
}

double evaluate_loss(const DenoiserParams& params, const TrainingCorpus& corpus, const WindowCodec& codec,
                     const NoiseSchedule& schedule, const ConditionPolicy& policy, int max_given_slots,
                     std::uint64_t seed) {
  corpus.validate(params.config);
  std::vector<BatchItem> items;
  for (int i = 0; i < corpus.size(); ++i) {
    Rng rng(derive_seed(seed, "eval", static_cast<std::uint64_t>(i)));
    items.push_back(draw_item(corpus, i, rng, codec, schedule, policy, max_given_slots));
  }
  double total = 0.0;
  for (const auto& it : items)
    total += training_loss_value(params, it.example.tau0, it.step, it.example.condition, it.noise, schedule);
  return total / static_cast<double>(items.size());
}

}  // namespace hoigen::diffusion
