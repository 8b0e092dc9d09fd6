#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hoigen/diffusion/schedule.hpp"
#include "hoigen/diffusion/tensor.hpp"

namespace hoigen::diffusion {

struct DenoiserConfig {
  SampleLayout layout;
  int hidden = 64;
  int mlp = 128;
  int blocks = 2;
  int text_dim = 512;
  int noise_embed_dim = 32;
  int basis_points = 1024;
  int projected_points = 256;

  void validate() const;
  bool operator==(const DenoiserConfig&) const = default;
};

/// One named tensor inside the flat parameter vector (column-major rows x cols).
struct TensorSlot {
  std::string name;
  std::string group;
  int rows = 0;
  int cols = 0;
  Eigen::Index offset = 0;
  Eigen::Index size() const { return static_cast<Eigen::Index>(rows) * cols; }
};

class ParamLayout {
 public:
  explicit ParamLayout(const DenoiserConfig& cfg);
  const std::vector<TensorSlot>& tensors() const { return tensors_; }
  /// Group names in layout order.
  std::vector<std::string> groups() const;
  /// Flat indices belonging to a group.
  std::vector<Eigen::Index> group_indices(const std::string& group) const;
  const TensorSlot& find(const std::string& name) const;
  Eigen::Index size() const { return size_; }

 private:
  void add(std::string name, std::string group, int rows, int cols);
  std::vector<TensorSlot> tensors_;
  Eigen::Index size_ = 0;
};

struct DenoiserParams {
  DenoiserConfig config;
  Eigen::VectorXd values;

  /// Scaled-normal initialization; residual branches start small.
  static DenoiserParams initialize(const DenoiserConfig& cfg, std::uint64_t seed);
  void validate() const;
};

/// Sinusoidal embedding of the step index.
Eigen::VectorXd noise_level_features(int n, int dim);

/// Predicts the clean window from a noisy one. Rows of `x_n` are slots. Output rows of invalid
/// slots are zero and their inputs are ignored.
Eigen::MatrixXd denoise(const DenoiserParams& params, const Eigen::MatrixXd& x_n, int n, const ConditionBundle& c);

struct LossResult {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

/// Mean absolute error between the prediction and `tau0` over valid slots, with its exact gradient.
/// The noisy input is sqrt(abar_n) tau0 + sqrt(1 - abar_n) noise.
LossResult training_loss(const DenoiserParams& params, const SampleTensor& tau0, int n, const ConditionBundle& c,
                         const Eigen::MatrixXd& noise, const NoiseSchedule& schedule);

/// One term of a batched loss; the pointees must outlive the call.
struct LossItem {
  const SampleTensor* tau0 = nullptr;
  int step = 1;
  const ConditionBundle* condition = nullptr;
  const Eigen::MatrixXd* noise = nullptr;
};

/// Mean of training_loss over the items. The geometry projection of all items is one matrix product.
/// Items are split into `chunks` contiguous groups, evaluated concurrently when `parallel` is set and
/// summed in group order, so the result is independent of the thread count.
LossResult batched_loss(const DenoiserParams& params, std::span<const LossItem> items, const NoiseSchedule& schedule,
                        int chunks, bool parallel);

/// Loss only, no gradient.
double training_loss_value(const DenoiserParams& params, const SampleTensor& tau0, int n, const ConditionBundle& c,
                           const Eigen::MatrixXd& noise, const NoiseSchedule& schedule);

/// Shape checks for a (tau0, condition) pair against the config.
void check_example(const DenoiserConfig& cfg, const SampleTensor& tau0, const ConditionBundle& c);

}  // namespace hoigen::diffusion
