#pragma once

#include <vector>

#include <Eigen/Core>

namespace hoigen::diffusion {

/// Fixed variance schedule and derived DDPM quantities, indexed 0..N with alpha_bar[0] = 1.
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> beta;                ///< beta[n], n = 1..N (beta[0] = 0)
  std::vector<double> alpha;               ///< 1 - beta
  std::vector<double> alpha_bar;           ///< cumulative product
  std::vector<double> posterior_variance;  ///< (1 - abar[n-1]) / (1 - abar[n]) * beta[n]
  std::vector<double> coef_x0;             ///< posterior mean weight on the clean estimate
  std::vector<double> coef_xt;             ///< posterior mean weight on the noisy sample
};

/// Linear beta from beta_start to beta_end over N steps.
NoiseSchedule build_schedule(int steps, double beta_start = 1e-4, double beta_end = 2e-2);

/// Closed-form marginal: sqrt(abar_n) * tau0 + sqrt(1 - abar_n) * noise.
Eigen::MatrixXd forward_noise(const Eigen::MatrixXd& tau0, int n, const Eigen::MatrixXd& noise,
                              const NoiseSchedule& s);

/// One transition of the Markov chain: sqrt(1 - beta_n) * tau_prev + sqrt(beta_n) * noise.
Eigen::MatrixXd forward_step(const Eigen::MatrixXd& tau_prev, int n, const Eigen::MatrixXd& noise,
                             const NoiseSchedule& s);

/// Mean of q(tau_{n-1} | tau_n, tau0).
Eigen::MatrixXd posterior_mean(const Eigen::MatrixXd& tau0_hat, const Eigen::MatrixXd& tau_n, int n,
                               const NoiseSchedule& s);

}  // namespace hoigen::diffusion
