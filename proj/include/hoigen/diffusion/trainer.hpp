#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hoigen/diffusion/codec.hpp"
#include "hoigen/diffusion/denoiser.hpp"
#include "hoigen/diffusion/schedule.hpp"

namespace hoigen::diffusion {

/// Windows plus the per-window geometry and text they are conditioned on.
struct TrainingCorpus {
  std::vector<keyaction::TrainingWindow> windows;
  std::vector<Eigen::MatrixXd> geometries;  ///< distinct BPS feature matrices
  std::vector<int> geometry_index;          ///< per window
  std::vector<Eigen::VectorXd> texts;       ///< per window

  int size() const { return static_cast<int>(windows.size()); }
  void validate(const DenoiserConfig& cfg) const;
};

/// Model-space example.
struct TrainingExample {
  SampleTensor tau0;
  ConditionBundle condition;
};

/// Canonicalize + normalize window `i` with `given_slots` leading slots revealed.
TrainingExample make_example(const TrainingCorpus& corpus, int i, int given_slots, const WindowCodec& codec,
                             const ConditionPolicy& policy);

/// Normalizer fitted on the canonicalized corpus windows.
Normalizer fit_corpus_normalizer(const TrainingCorpus& corpus, const SampleLayout& layout);

struct BatchItem {
  TrainingExample example;
  int step = 1;  ///< diffusion step n
  Eigen::MatrixXd noise;
};

/// Mean loss and gradient over a batch. Items are split into a fixed number of contiguous chunks that
/// are evaluated concurrently and summed in chunk order, so results do not depend on the thread count.
LossResult batch_loss(const DenoiserParams& params, std::span<const BatchItem> items, const NoiseSchedule& schedule);
/// Straight sequential accumulation; reference for batch_loss.
LossResult batch_loss_serial(const DenoiserParams& params, std::span<const BatchItem> items,
                             const NoiseSchedule& schedule);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t t = 0;
};

struct TrainOptions {
  int steps = 1000;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double final_lr_fraction = 0.1;  ///< linear decay target
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;          ///< global norm; <= 0 disables
  int max_given_slots = 2;         ///< revealed leading slots are drawn from 1..max
  ConditionPolicy policy;
  std::uint64_t seed = 0;
};

struct StepLog {
  int step = 0;
  double loss = 0.0;
  double learning_rate = 0.0;
  double grad_norm = 0.0;
};

void adam_update(Eigen::VectorXd& params, AdamState& state, const Eigen::VectorXd& grad, double lr,
                 const TrainOptions& opt);

/// Runs `opt.steps` optimizer steps starting at optimizer step `state.t`. Batches follow a per-epoch
/// permutation of the corpus drawn from the seed.
std::vector<StepLog> train(DenoiserParams& params, AdamState& state, const TrainingCorpus& corpus,
                           const WindowCodec& codec, const NoiseSchedule& schedule, const TrainOptions& opt,
                           const std::function<void(const StepLog&)>& on_step = {});

/// Mean loss over every window with draws (step, noise, revealed slots) fixed by `seed`.
double evaluate_loss(const DenoiserParams& params, const TrainingCorpus& corpus, const WindowCodec& codec,
                     const NoiseSchedule& schedule, const ConditionPolicy& policy, int max_given_slots,
                     std::uint64_t seed);

}  // namespace hoigen::diffusion
