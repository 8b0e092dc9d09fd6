#include "hoigen/diffusion/sampler.hpp"

#include <cmath>
#include <string>

#include "hoigen/core/rng.hpp"

namespace hoigen::diffusion {

using Eigen::Index;
using Eigen::MatrixXd;

DenoiseFn network_denoiser(const DenoiserParams& params) {
  return [&params](const MatrixXd& x, int n, const ConditionBundle& c) { return denoise(params, x, n, c); };
}

MatrixXd reverse_step(const DenoiseFn& denoiser, const MatrixXd& tau_n, int n, const ConditionBundle& c,
                      const NoiseSchedule& schedule, const MatrixXd& noise) {
  if (n < 1 || n > schedule.steps)
    throw ValidationError("reverse_step: step " + std::to_string(n) + " outside [1, " + std::to_string(schedule.steps) +
                          "]");
  const MatrixXd tau0_hat = denoiser(tau_n, n, c);
  if (tau0_hat.rows() != tau_n.rows() || tau0_hat.cols() != tau_n.cols())
    throw ValidationError("reverse_step: denoiser output shape mismatch");
  MatrixXd out = posterior_mean(tau0_hat, tau_n, n, schedule);
  if (n > 1 && schedule.posterior_variance[n] > 0.0) {
    if (noise.rows() != tau_n.rows() || noise.cols() != tau_n.cols())
      throw ValidationError("reverse_step: noise shape mismatch");
    out += std::sqrt(schedule.posterior_variance[n]) * noise;
  }
  return out;
}

namespace {

void zero_invalid(MatrixXd& m, const Eigen::VectorXd& valid) {
  for (Index s = 0; s < m.rows(); ++s)
    if (valid[s] == 0.0) m.row(s).setZero();
}

MatrixXd gaussian(Rng& rng, Index rows, Index cols) {
  MatrixXd m(rows, cols);
  // row-major fill order so the stream does not depend on the storage layout
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

}  // namespace

SampleTensor sample_tensor(const DenoiseFn& denoiser, const ConditionBundle& c, const NoiseSchedule& schedule,
                           const SampleLayout& layout, const SamplerOptions& options) {
  const Index S = layout.slots, F = layout.feature_dim();
  if (c.slot_valid.size() != S) throw ValidationError("sample: condition slot count mismatch");
  require_shape(c.motion, S, layout.condition_dim(), "condition motion");
  require_shape(c.mask, S, layout.condition_dim(), "condition mask");

  DenoiseFn fn = denoiser;
  if (options.impose_known) {
    fn = [&denoiser, &layout](const MatrixXd& x, int n, const ConditionBundle& cond) {
      MatrixXd est = denoiser(x, n, cond);
      for (Index s = 0; s < cond.mask.rows(); ++s)
        for (Index j = 0; j < cond.mask.cols(); ++j)
          if (cond.mask(s, j) != 0.0) est(s, layout.sample_column_of_condition(static_cast<int>(j))) = cond.motion(s, j);
      return est;
    };
  }

  Rng rng(options.seed);
  MatrixXd tau = options.zero_noise ? MatrixXd::Zero(S, F) : gaussian(rng, S, F);
  zero_invalid(tau, c.slot_valid);
  const MatrixXd zeros = MatrixXd::Zero(S, F);
  for (int n = schedule.steps; n >= 1; --n) {
    const MatrixXd noise = (options.zero_noise || n == 1) ? zeros : gaussian(rng, S, F);
    tau = reverse_step(fn, tau, n, c, schedule, noise);
    zero_invalid(tau, c.slot_valid);
    if (!tau.allFinite()) throw NumericError("sample: non-finite value at step " + std::to_string(n));
  }
  return {tau, c.slot_valid};
}

}  // namespace hoigen::diffusion
