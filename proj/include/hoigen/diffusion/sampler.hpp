#pragma once

#include <cstdint>
#include <functional>

#include "hoigen/diffusion/denoiser.hpp"
#include "hoigen/diffusion/schedule.hpp"
#include "hoigen/diffusion/tensor.hpp"

namespace hoigen::diffusion {

/// Any clean-window predictor: (x_n, n, condition) -> tau0 estimate.
using DenoiseFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, int, const ConditionBundle&)>;

/// Wraps the network; `params` must outlive the returned function.
DenoiseFn network_denoiser(const DenoiserParams& params);

/// tau_{n-1} = posterior mean from (tau0_hat, tau_n) + sqrt(posterior variance) * noise; no noise at n = 1.
Eigen::MatrixXd reverse_step(const DenoiseFn& denoiser, const Eigen::MatrixXd& tau_n, int n, const ConditionBundle& c,
                             const NoiseSchedule& schedule, const Eigen::MatrixXd& noise);

struct SamplerOptions {
  std::uint64_t seed = 0;
  bool zero_noise = false;    ///< start from zeros and skip the stochastic term
  bool impose_known = false;  ///< overwrite given condition entries in each clean estimate (in-filling)
};

/// Full reverse chain in model space. Invalid slots stay zero throughout.
SampleTensor sample_tensor(const DenoiseFn& denoiser, const ConditionBundle& c, const NoiseSchedule& schedule,
                           const SampleLayout& layout, const SamplerOptions& options);

}  // namespace hoigen::diffusion
