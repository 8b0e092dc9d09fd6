#include <doctest.h>

#include <cmath>

#include "hoigen/core/rng.hpp"
#include "hoigen/diffusion/denoiser.hpp"
#include "support/fixtures.hpp"

using namespace hoigen;
using namespace hoigen::diffusion;

TEST_SUITE("diffusion") {
TEST_CASE("analytic gradient matches central differences in every parameter group") {
  DenoiserConfig cfg = test::small_denoiser_config();
  const auto params = DenoiserParams::initialize(cfg, 11);
  const auto schedule = build_schedule(50);
  Rng rng(5);
  const auto ex = test::random_example(cfg, rng);
  const Eigen::MatrixXd noise = test::gaussian_matrix(rng, cfg.layout.slots, cfg.layout.feature_dim());
  const int n = 17;
  const LossResult r = training_loss(params, ex.tau0, n, ex.condition, noise, schedule);
  const ParamLayout layout(cfg);
  const double h = 1e-5;
  for (const auto& group : layout.groups()) {
    CAPTURE(group);
    const auto idx = layout.group_indices(group);
    Rng pick(derive_seed(3, group));
    for (int k = 0; k < 20; ++k) {
      const auto i = idx[pick.below(idx.size())];
      DenoiserParams p = params;
      p.values[i] += h;
      const double up = training_loss_value(p, ex.tau0, n, ex.condition, noise, schedule);
      p.values[i] -= 2 * h;
      const double down = training_loss_value(p, ex.tau0, n, ex.condition, noise, schedule);
      const double fd = (up - down) / (2 * h);
      const double an = r.gradient[i];
      const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
      CAPTURE(i);
      CAPTURE(fd);
      CAPTURE(an);
      CHECK(rel < 1e-4);
    }
  }
}
}
