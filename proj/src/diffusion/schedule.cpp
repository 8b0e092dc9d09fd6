#include "hoigen/diffusion/schedule.hpp"

#include <cmath>
#include <string>

#include "hoigen/core/error.hpp"

namespace hoigen::diffusion {

NoiseSchedule build_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw ValidationError("build_schedule: N must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw ValidationError("build_schedule: need 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.steps = steps;
  s.beta.assign(steps + 1, 0.0);
  s.alpha.assign(steps + 1, 1.0);
  s.alpha_bar.assign(steps + 1, 1.0);
  s.posterior_variance.assign(steps + 1, 0.0);
  s.coef_x0.assign(steps + 1, 0.0);
  s.coef_xt.assign(steps + 1, 0.0);
  for (int n = 1; n <= steps; ++n) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(n - 1) / (steps - 1);
    s.beta[n] = beta_start + (beta_end - beta_start) * frac;
    s.alpha[n] = 1.0 - s.beta[n];
    s.alpha_bar[n] = s.alpha_bar[n - 1] * s.alpha[n];
    const double one_minus = 1.0 - s.alpha_bar[n];
    s.posterior_variance[n] = (1.0 - s.alpha_bar[n - 1]) / one_minus * s.beta[n];
    s.coef_x0[n] = std::sqrt(s.alpha_bar[n - 1]) * s.beta[n] / one_minus;
    s.coef_xt[n] = std::sqrt(s.alpha[n]) * (1.0 - s.alpha_bar[n - 1]) / one_minus;
  }
  return s;
}

namespace {
void check_step(int n, const NoiseSchedule& s, const char* what) {
  if (n < 1 || n > s.steps)
    throw ValidationError(std::string(what) + ": step " + std::to_string(n) + " outside [1, " + std::to_string(s.steps) + "]");
}
void check_same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValidationError(std::string(what) + ": shape mismatch");
}
}  // namespace

Eigen::MatrixXd forward_noise(const Eigen::MatrixXd& tau0, int n, const Eigen::MatrixXd& noise, const NoiseSchedule& s) {
  check_step(n, s, "forward_noise");
  check_same(tau0, noise, "forward_noise");
  return std::sqrt(s.alpha_bar[n]) * tau0 + std::sqrt(1.0 - s.alpha_bar[n]) * noise;
}

Eigen::MatrixXd forward_step(const Eigen::MatrixXd& tau_prev, int n, const Eigen::MatrixXd& noise,
                             const NoiseSchedule& s) {
  check_step(n, s, "forward_step");
  check_same(tau_prev, noise, "forward_step");
  return std::sqrt(s.alpha[n]) * tau_prev + std::sqrt(s.beta[n]) * noise;
}

Eigen::MatrixXd posterior_mean(const Eigen::MatrixXd& tau0_hat, const Eigen::MatrixXd& tau_n, int n,
                               const NoiseSchedule& s) {
  check_step(n, s, "posterior_mean");
  check_same(tau0_hat, tau_n, "posterior_mean");
  return s.coef_x0[n] * tau0_hat + s.coef_xt[n] * tau_n;
}

}  // namespace hoigen::diffusion
