#pragma once

#include <Eigen/Core>

#include "hoigen/core/rng.hpp"
#include "hoigen/diffusion/denoiser.hpp"
#include "hoigen/diffusion/trainer.hpp"
#include "hoigen/io/motion_format.hpp"

namespace hoigen::test {

Eigen::MatrixXd gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols);

/// Tiny network for gradient and plumbing tests.
diffusion::DenoiserConfig small_denoiser_config();

/// Random model-space example; the last slot is padding and the mask is random.
diffusion::TrainingExample random_example(const diffusion::DenoiserConfig& cfg, Rng& rng);

/// Random chain skeleton with `joints` joints: root plus links hanging off earlier joints.
SkeletonSpec random_skeleton(Rng& rng, int joints);

/// Smooth random motion (sums of low-frequency sinusoids) with an object that orbits the root.
io::MotionBundle random_bundle(Rng& rng, int frames, int joints, bool with_object = true);

}  // namespace hoigen::test
